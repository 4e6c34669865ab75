#include "capsense/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "capsense/errors.hpp"

namespace capsense {

namespace {

using ComplexLD = std::complex<long double>;
using MatrixXcld = Eigen::Matrix<ComplexLD, Eigen::Dynamic, Eigen::Dynamic>;

double spectral_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

bool eigenvalue_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

// Largest-modulus component real and positive.
void fix_phase(Eigen::VectorXcd& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (std::abs(v[k]) > 0.0) v *= std::conj(v[k]) / std::abs(v[k]);
}

Eigen::MatrixXcd pad_to(const Eigen::MatrixXcd& perturbation, Eigen::Index n, const char* who) {
  if (perturbation.rows() != perturbation.cols()) throw ConfigError(std::string(who) + ": perturbation not square");
  if (perturbation.rows() == n) return perturbation;
  if (perturbation.rows() == n + 1) return perturbation.topLeftCorner(n, n);
  throw ConfigError(std::string(who) + ": perturbation dimension must be N or N+1");
}

}  // namespace

Complex resonance_from_eigenvalue(Complex lambda) { return std::sqrt(lambda); }

std::vector<EigenTriple> eigenpairs(const Eigen::MatrixXcd& matrix) {
  if (matrix.rows() != matrix.cols()) throw ConfigError("eigenpairs: matrix not square");
  const Eigen::Index n = matrix.rows();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenpairs: eigensolver failed");
  std::vector<Complex> values(solver.eigenvalues().begin(), solver.eigenvalues().end());
  std::sort(values.begin(), values.end(), eigenvalue_less);

  const double scale = std::max(spectral_norm(matrix), std::numeric_limits<double>::min());
  std::vector<EigenTriple> out;
  out.reserve(values.size());
  for (const Complex& lambda : values) {
    const Eigen::MatrixXcd shifted = matrix - lambda * Eigen::MatrixXcd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullU | Eigen::ComputeFullV);
    EigenTriple t;
    t.eigenvalue = lambda;
    // shifted = U S V^*: the last right singular vector spans the kernel and the
    // last left singular vector the kernel of the adjoint.
    t.right = svd.matrixV().col(n - 1);
    t.left = svd.matrixU().col(n - 1);
    fix_phase(t.right);
    const Complex overlap = t.left.dot(t.right);  // y^* x
    if (std::abs(overlap) > 0.0) t.left *= overlap / std::abs(overlap);
    t.condition = std::abs(overlap);
    t.ambiguous = n > 1 && svd.singularValues()(n - 2) <= 1e-8 * scale;
    out.push_back(std::move(t));
  }
  return out;
}

Spectrum resonances(const Eigen::MatrixXcd& matrix) {
  const auto pairs = eigenpairs(matrix);
  const Eigen::Index n = matrix.rows();
  Spectrum s;
  s.eigenvalues.resize(n);
  s.resonances.resize(n);
  s.right.resize(n, n);
  s.left.resize(n, n);
  s.conditions.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.eigenvalues[i] = pairs[i].eigenvalue;
    s.resonances[i] = resonance_from_eigenvalue(pairs[i].eigenvalue);
    s.right.col(i) = pairs[i].right;
    s.left.col(i) = pairs[i].left;
    s.conditions[i] = pairs[i].condition;
  }
  return s;
}

Spectrum resonances(const WeightedCapacitance& weighted) { return resonances(weighted.values); }

Eigen::MatrixXcd weighted_correction(const MaterialWeights& weights, const CorrectionMatrix& correction) {
  if (weights.size() != correction.e.rows()) throw ConfigError("weighted_correction: weights/E size mismatch");
  return weights.values.asDiagonal() * correction.e.cast<Complex>();
}

PerturbationResult simple_perturbation(const EigenTriple& pair, const Eigen::MatrixXcd& weighted_perturbation,
                                       double condition_floor) {
  const Eigen::Index n = pair.right.size();
  const Eigen::MatrixXcd p = pad_to(weighted_perturbation, n, "simple_perturbation");
  const Complex overlap = pair.left.dot(pair.right);
  if (!(std::abs(overlap) >= condition_floor)) {
    throw NumericalError("simple_perturbation: eigenvalue condition |y^*x| = " + std::to_string(std::abs(overlap)) +
                         " below floor; use the exceptional-point expansion");
  }
  PerturbationResult r;
  r.xi = pair.left.dot(p * pair.right);
  const Complex shift = r.xi / overlap;
  r.eigenvalues = {pair.eigenvalue + shift};
  r.resonances = {resonance_from_eigenvalue(r.eigenvalues.front())};
  r.remainder_estimate = std::norm(shift) / std::max(std::abs(pair.eigenvalue), std::numeric_limits<double>::min());
  return r;
}

PerturbationResult simple_perturbation(const EigenTriple& pair, const MaterialWeights& weights,
                                       const CorrectionMatrix& correction, double condition_floor) {
  return simple_perturbation(pair, weighted_correction(weights, correction), condition_floor);
}

Eigen::MatrixXcd JordanChain::normalization() const {
  Eigen::MatrixXcd ystar(order, right.rows());
  for (int a = 0; a < order; ++a) ystar.row(a) = left.col(order - 1 - a).adjoint();
  return ystar * right;
}

double JordanChain::chain_residual(const Eigen::MatrixXcd& matrix) const {
  const Eigen::Index n = matrix.rows();
  const Eigen::MatrixXcd a = matrix - eigenvalue * Eigen::MatrixXcd::Identity(n, n);
  double worst = 0.0;
  for (int j = 0; j < order; ++j) {
    Eigen::VectorXcd r = a * right.col(j);
    if (j > 0) r -= right.col(j - 1);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

namespace {

// Vector in ker(a^r) maximizing |a^{r-1} v|, i.e. the top of a length-r chain.
Eigen::VectorXcd chain_top(const Eigen::MatrixXcd& a, int order) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(n, n);
  for (int k = 0; k < order - 1; ++k) power = a * power;
  const Eigen::MatrixXcd full = a * power;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(full, Eigen::ComputeFullV);
  const Eigen::MatrixXcd kernel = svd.matrixV().rightCols(order);
  Eigen::JacobiSVD<Eigen::MatrixXcd> inner(power * kernel, Eigen::ComputeFullV);
  Eigen::VectorXcd top = kernel * inner.matrixV().col(0);
  fix_phase(top);
  return top;
}

}  // namespace

JordanChain jordan_chain(const Eigen::MatrixXcd& matrix, Complex eigenvalue, int order, double tolerance) {
  if (matrix.rows() != matrix.cols()) throw ConfigError("jordan_chain: matrix not square");
  const Eigen::Index n = matrix.rows();
  if (order < 2 || order > n) throw ConfigError("jordan_chain: order must lie in [2, N]");
  const double scale = std::max(spectral_norm(matrix), std::numeric_limits<double>::min());
  const Eigen::MatrixXcd a = matrix - eigenvalue * Eigen::MatrixXcd::Identity(n, n);

  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(a).singularValues();
  if (sv(n - 1) > tolerance * scale) throw NumericalError("jordan_chain: value is not an eigenvalue");
  if (sv(n - 2) <= tolerance * scale) {
    throw NumericalError("jordan_chain: geometric multiplicity exceeds 1 (unsupported)");
  }
  Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(n, n);
  for (int k = 0; k < order; ++k) power = a * power;
  const Eigen::VectorXd power_sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(power).singularValues();
  if (power_sv(n - order) > tolerance * std::pow(scale, order)) {
    throw NumericalError("jordan_chain: eigenvalue is not defective at order " + std::to_string(order));
  }

  JordanChain chain;
  chain.eigenvalue = eigenvalue;
  chain.order = order;
  chain.right.resize(n, order);
  chain.left.resize(n, order);
  const Eigen::MatrixXcd a_adj = a.adjoint();
  chain.right.col(order - 1) = chain_top(a, order);
  chain.left.col(order - 1) = chain_top(a_adj, order);
  for (int j = order - 2; j >= 0; --j) {
    chain.right.col(j) = a * chain.right.col(j + 1);
    chain.left.col(j) = a_adj * chain.left.col(j + 1);
  }

  // Y^* X is upper-triangular Toeplitz in exact arithmetic; X (Y^* X)^{-1} is
  // again a right chain and satisfies the normalization.
  const Eigen::MatrixXcd gram = chain.normalization();
  const double lead = std::abs(gram(0, 0));
  if (!(lead > tolerance * chain.right.norm() * chain.left.norm())) {
    throw NumericalError("jordan_chain: normalization Y^*X is singular");
  }
  chain.right = chain.right * gram.inverse();
  return chain;
}

PerturbationResult ep_perturbation(const JordanChain& chain, const Eigen::MatrixXcd& weighted_perturbation) {
  if (chain.order < 2 || chain.right.cols() != chain.order || chain.left.cols() != chain.order) {
    throw ConfigError("ep_perturbation: invalid chain");
  }
  const Eigen::Index n = chain.right.rows();
  const Eigen::MatrixXcd p = pad_to(weighted_perturbation, n, "ep_perturbation");
  PerturbationResult r;
  r.xi = chain.left.col(0).dot(p * chain.right.col(0));
  const Complex root = std::pow(r.xi, 1.0 / chain.order);
  for (int m = 0; m < chain.order; ++m) {
    const Complex unit = std::polar(1.0, 2.0 * std::numbers::pi * m / chain.order);
    r.eigenvalues.push_back(chain.eigenvalue + root * unit);
    r.resonances.push_back(resonance_from_eigenvalue(r.eigenvalues.back()));
  }
  r.remainder_estimate = std::pow(std::abs(r.xi), 2.0 / chain.order);
  return r;
}

PerturbationResult ep_perturbation(const JordanChain& chain, const MaterialWeights& weights,
                                   const CorrectionMatrix& correction) {
  return ep_perturbation(chain, weighted_correction(weights, correction));
}

GainLossFamily antisymmetric_gain_loss(const ResonatorScene& scene, double initial_tau) {
  const auto n = static_cast<Eigen::Index>(scene.resonator_count());
  if (n < 2) throw ConfigError("antisymmetric_gain_loss: need at least two resonators");
  std::vector<Material> materials;
  std::vector<double> volumes;
  for (const auto& body : scene.resonators) {
    materials.push_back(body.material);
    volumes.push_back(body.sphere.volume());
  }
  GainLossFamily family;
  family.initial = {initial_tau, 1.0};
  family.initial_step = {0.05, 0.05};
  family.mirror_symmetric = true;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& a = scene.resonators[static_cast<std::size_t>(j)];
    const auto& b = scene.resonators[static_cast<std::size_t>(n - 1 - j)];
    if (a.material.delta != b.material.delta || a.material.speed != b.material.speed ||
        a.sphere.radius != b.sphere.radius) {
      family.mirror_symmetric = false;
    }
  }
  family.weights = [materials, volumes, n](std::span<const double> p) {
    if (p.size() != 2) throw ConfigError("antisymmetric_gain_loss: expected (tau, kappa)");
    MaterialWeights w{Eigen::VectorXcd(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = 1.0 - 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
      const bool interior = j > 0 && j < n - 1;
      const Complex delta = materials[j].delta * Complex(1.0, p[0] * s) * (interior ? p[1] : 1.0);
      const Complex v = materials[j].speed;
      w.values[j] = delta * v * v / volumes[j];
    }
    return w;
  };
  return family;
}

Eigen::MatrixXd restore_mirror_symmetry(const Eigen::MatrixXd& capacitance, double tolerance) {
  const Eigen::MatrixXd mirrored = capacitance.reverse();  // J C J
  if ((capacitance - mirrored).norm() > tolerance * capacitance.norm()) return capacitance;
  return 0.5 * (capacitance + mirrored);
}

PairGap closest_pair(const Eigen::MatrixXcd& matrix) {
  const Eigen::Index n = matrix.rows();
  if (n < 2) throw ConfigError("closest_pair: need at least two eigenvalues");
  const MatrixXcld m = matrix.cast<ComplexLD>();
  Eigen::ComplexEigenSolver<MatrixXcld> solver(m, false);
  if (solver.info() != Eigen::Success) throw NumericalError("closest_pair: eigensolver failed");
  const auto& ev = solver.eigenvalues();
  const double scale = std::max(spectral_norm(matrix), std::numeric_limits<double>::min());
  PairGap best;
  long double best_gap = std::numeric_limits<long double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const long double g = std::abs(ev[i] - ev[j]);
      if (g < best_gap) {
        best_gap = g;
        best.first = static_cast<int>(i);
        best.second = static_cast<int>(j);
        const ComplexLD mean = (ev[i] + ev[j]) / static_cast<long double>(2);
        best.mean = Complex(static_cast<double>(mean.real()), static_cast<double>(mean.imag()));
      }
    }
  }
  best.relative_gap = static_cast<double>(best_gap) / scale;
  return best;
}

EpSearchResult find_exceptional_point(const Eigen::MatrixXd& capacitance, const GainLossFamily& family,
                                      const EpSearchOptions& options) {
  if (family.initial.empty() || family.initial.size() != family.initial_step.size()) {
    throw ConfigError("find_exceptional_point: initial guess and steps must be nonempty and match");
  }
  const Eigen::MatrixXcd c =
      (family.mirror_symmetric ? restore_mirror_symmetry(capacitance) : capacitance).cast<Complex>();
  EpSearchResult result;
  auto objective = [&](const std::vector<double>& p) {
    ++result.evaluations;
    const MaterialWeights w = family.weights(p);
    if (w.size() != c.rows()) throw ConfigError("find_exceptional_point: weight count mismatch");
    return closest_pair(w.values.asDiagonal() * c).relative_gap;
  };

  std::vector<double> p = family.initial;
  std::vector<double> step = family.initial_step;
  double best = objective(p);
  while (best > options.gap_tolerance && result.evaluations < options.max_evaluations) {
    bool improved = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (const double sign : {1.0, -1.0}) {
        std::vector<double> trial = p;
        trial[i] += sign * step[i];
        const double value = objective(trial);
        if (value < best) {
          best = value;
          p = std::move(trial);
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool all_small = true;
      for (std::size_t i = 0; i < step.size(); ++i) {
        step[i] *= 0.5;
        if (step[i] > options.min_relative_step * std::max(1.0, std::abs(p[i]))) all_small = false;
      }
      if (all_small) break;
    }
  }

  result.parameters = p;
  result.weights = family.weights(p);
  const Eigen::MatrixXcd tuned = result.weights.values.asDiagonal() * c;
  const PairGap pair = closest_pair(tuned);
  result.relative_gap = pair.relative_gap;
  result.eigenvalue = pair.mean;

  // Locate the pair in the sorted spectrum and report its worst condition.
  const auto pairs = eigenpairs(tuned);
  std::vector<std::pair<double, int>> by_distance;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_distance.emplace_back(std::abs(pairs[i].eigenvalue - pair.mean), static_cast<int>(i));
  }
  std::sort(by_distance.begin(), by_distance.end());
  result.first = std::min(by_distance[0].second, by_distance[1].second);
  result.second = std::max(by_distance[0].second, by_distance[1].second);
  result.condition = std::max(pairs[result.first].condition, pairs[result.second].condition);
  result.converged =
      result.relative_gap <= options.gap_tolerance && result.condition <= options.condition_tolerance;
  if (result.converged) {
    result.message = "exceptional point found";
  } else {
    std::ostringstream msg;
    msg << std::scientific << std::setprecision(3) << "search stopped with relative gap " << result.relative_gap
        << " and condition " << result.condition;
    result.message = msg.str();
  }
  return result;
}

}  // namespace capsense
