#include "capsense/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "capsense/errors.hpp"

namespace capsense {

int harmonic_degree(int index) {
  int n = static_cast<int>(std::sqrt(static_cast<double>(index)));
  while (n * n > index) --n;
  while ((n + 1) * (n + 1) <= index) ++n;
  return n;
}

void real_harmonics(int max_degree, double cos_theta, double phi, std::span<double> out) {
  if (max_degree < 0) throw ConfigError("real_harmonics: negative degree");
  if (out.size() < static_cast<std::size_t>(harmonic_count(max_degree))) {
    throw ConfigError("real_harmonics: output span too small");
  }
  const double x = std::clamp(cos_theta, -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  const double inv_sqrt_4pi = 1.0 / std::sqrt(4.0 * std::numbers::pi);

  // Fully normalized associated Legendre functions
  // pbar(n, m) = sqrt((2n+1)/(4 pi) (n-m)!/(n+m)!) P_n^m(x), built column by column in m.
  double pmm = inv_sqrt_4pi;  // pbar(0, 0)
  for (int m = 0; m <= max_degree; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    const double cm = (m == 0) ? 1.0 : std::sqrt(2.0);
    const double cos_mphi = std::cos(m * phi);
    const double sin_mphi = std::sin(m * phi);

    double p_prev = 0.0;
    double p_curr = pmm;
    for (int n = m; n <= max_degree; ++n) {
      if (n == m + 1) {
        p_prev = p_curr;
        p_curr = x * std::sqrt(2.0 * m + 3.0) * pmm;
      } else if (n > m + 1) {
        const double a = std::sqrt((4.0 * n * n - 1.0) / (static_cast<double>(n * n) - m * m));
        const double b = std::sqrt(((n - 1.0) * (n - 1.0) - m * m) / (4.0 * (n - 1.0) * (n - 1.0) - 1.0));
        const double next = a * (x * p_curr - b * p_prev);
        p_prev = p_curr;
        p_curr = next;
      }
      const double value = cm * p_curr;
      if (m == 0) {
        out[harmonic_index(n, 0)] = value;
      } else {
        out[harmonic_index(n, m)] = value * cos_mphi;
        out[harmonic_index(n, -m)] = value * sin_mphi;
      }
    }
  }
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw ConfigError("gauss_legendre: need at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

SphereRule sphere_rule(int order) {
  if (order < 1) throw ConfigError("sphere_rule: order must be positive");
  std::vector<double> gl_nodes;
  std::vector<double> gl_weights;
  gauss_legendre(order, gl_nodes, gl_weights);
  const int n_phi = 2 * order;
  const int count = order * n_phi;

  SphereRule rule;
  rule.points.resize(3, count);
  rule.weights.resize(count);
  rule.cos_theta.resize(count);
  rule.phi.resize(count);
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  int k = 0;
  for (int i = 0; i < order; ++i) {
    const double ct = gl_nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j, ++k) {
      const double phi = (j + 0.5) * dphi;
      rule.points.col(k) << st * std::cos(phi), st * std::sin(phi), ct;
      rule.weights[k] = gl_weights[i] * dphi;
      rule.cos_theta[k] = ct;
      rule.phi[k] = phi;
    }
  }
  return rule;
}

Eigen::MatrixXd harmonic_table(const SphereRule& rule, int max_degree) {
  const int nb = harmonic_count(max_degree);
  Eigen::MatrixXd table(rule.points.cols(), nb);
  std::vector<double> values(nb);
  for (Eigen::Index k = 0; k < rule.points.cols(); ++k) {
    real_harmonics(max_degree, rule.cos_theta[k], rule.phi[k], values);
    for (int q = 0; q < nb; ++q) table(k, q) = values[q];
  }
  return table;
}

}  // namespace capsense
