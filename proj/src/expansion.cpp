#include "capsense/expansion.hpp"

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "capsense/errors.hpp"

namespace capsense {

BlockSingleLayer::BlockSingleLayer(const GalerkinOperator& op, const ResonatorScene& scene)
    : blocks_(block_partition(op, scene)), s_d_llt_(blocks_.s_d), s_omega_llt_(blocks_.s_omega) {
  if (s_d_llt_.info() != Eigen::Success) throw NumericalError("S_D is not positive definite");
  if (s_omega_llt_.info() != Eigen::Success) throw NumericalError("S_Omega is not positive definite");
  const Eigen::MatrixXd chi = indicator_matrix(op);
  const Eigen::Index md = blocks_.s_d.rows();
  const Eigen::Index n = op.body_count() - 1;
  chi_d_ = chi.topLeftCorner(md, n);
  chi_omega_ = chi.bottomRightCorner(chi.rows() - md, 1);
}

Eigen::MatrixXd BlockSingleLayer::apply_t_d(const Eigen::MatrixXd& v) const {
  return solve_d(blocks_.s_d_omega * solve_omega(blocks_.s_omega_d * v));
}

Eigen::MatrixXd BlockSingleLayer::apply_t_omega(const Eigen::MatrixXd& v) const {
  return solve_omega(blocks_.s_omega_d * solve_d(blocks_.s_d_omega * v));
}

Eigen::MatrixXd BlockSingleLayer::direct_inverse() const {
  const Eigen::MatrixXd full = blocks_.assemble();
  return DensitySolver(full).inverse();
}

double reflection_spectral_radius(const BlockSingleLayer& blocks) {
  // T_D is similar to a symmetric positive semidefinite matrix, so the dominant
  // eigenvalue is real and nonnegative and plain power iteration applies.
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(blocks.resonator_dofs());
  for (auto& x : v) x = normal(rng);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd w = blocks.apply_t_d(v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const bool converged = it > 0 && std::abs(norm - estimate) <= 1e-6 * norm;
    estimate = norm;
    if (converged) break;
  }
  return estimate;
}

ReflectionOperators reflections(const BlockSingleLayer& blocks) {
  const Eigen::Index md = blocks.resonator_dofs();
  const Eigen::Index mo = blocks.defect_dofs();
  ReflectionOperators out;
  out.t_d = blocks.apply_t_d(Eigen::MatrixXd::Identity(md, md));
  out.t_omega = blocks.apply_t_omega(Eigen::MatrixXd::Identity(mo, mo));
  out.spectral_radius = reflection_spectral_radius(blocks);
  return out;
}

namespace {

void require_convergent(const BlockSingleLayer& blocks) {
  const double rho = reflection_spectral_radius(blocks);
  if (!(rho < 1.0)) {
    throw DivergenceError("multiple scattering series diverges: spectral radius of T_D is " + std::to_string(rho));
  }
}

}  // namespace

Eigen::MatrixXd neumann_partial_sum(const BlockSingleLayer& blocks, int k) {
  if (k < 1) throw ConfigError("neumann_partial_sum: K must be >= 1");
  require_convergent(blocks);
  const Eigen::Index md = blocks.resonator_dofs();
  const Eigen::Index mo = blocks.defect_dofs();
  const auto& b = blocks.blocks();

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(md + mo, md + mo);
  Eigen::MatrixXd td_n = blocks.solve_d(Eigen::MatrixXd::Identity(md, md));      // T_D^n S_D^{-1}
  Eigen::MatrixXd to_n = blocks.solve_omega(Eigen::MatrixXd::Identity(mo, mo));  // T_Omega^n S_Omega^{-1}
  for (int n = 0; n < k; ++n) {
    p.topLeftCorner(md, md) += td_n;
    p.bottomRightCorner(mo, mo) += to_n;
    if (n < k - 1) {
      p.topRightCorner(md, mo) -= blocks.solve_d(b.s_d_omega * to_n);
      p.bottomLeftCorner(mo, md) -= blocks.solve_omega(b.s_omega_d * td_n);
      td_n = blocks.apply_t_d(td_n);
      to_n = blocks.apply_t_omega(to_n);
    }
  }
  return p;
}

ExpansionResult capacitance_expansion(const BlockSingleLayer& blocks, int n_max) {
  if (n_max < 0) throw ConfigError("capacitance_expansion: n_max must be >= 0");
  require_convergent(blocks);
  const auto& b = blocks.blocks();
  const Eigen::Index n = blocks.resonator_count();
  const Eigen::MatrixXd& chi_d = blocks.chi_d();
  const Eigen::VectorXd& chi_o = blocks.chi_omega();

  ExpansionResult out;
  out.order = n_max;
  out.cumulative = Eigen::MatrixXd::Zero(n + 1, n + 1);

  Eigen::MatrixXd v_d = blocks.solve_d(chi_d);  // T_D^n S_D^{-1} chi_D
  Eigen::VectorXd v_o = blocks.solve_omega(chi_o);  // T_Omega^n S_Omega^{-1} chi_Omega
  for (int order = 0; order <= n_max; ++order) {
    Eigen::MatrixXd term(n + 1, n + 1);
    term.topLeftCorner(n, n) = chi_d.transpose() * v_d;
    term.topRightCorner(n, 1) = -chi_d.transpose() * blocks.solve_d(b.s_d_omega * v_o);
    term.bottomLeftCorner(1, n) = -chi_o.transpose() * blocks.solve_omega(b.s_omega_d * v_d);
    term(n, n) = chi_o.dot(v_o);
    out.cumulative += term;
    out.terms.push_back(std::move(term));
    if (order < n_max) {
      v_d = blocks.apply_t_d(v_d);
      v_o = blocks.apply_t_omega(v_o);
    }
  }
  return out;
}

CorrectionMatrix first_order_correction(const BlockSingleLayer& blocks) {
  const ExpansionResult expansion = capacitance_expansion(blocks, 1);
  const Eigen::Index n = blocks.resonator_count();
  CorrectionMatrix out;
  out.e = expansion.terms[1];
  out.zeroth = expansion.terms[0];
  out.zeroth.topLeftCorner(n, n).setZero();
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("loglog_slope: need at least two points");
  const auto m = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericalError("loglog_slope: nonpositive sample");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

TruncationReport truncation_report(const BlockSingleLayer& blocks, const ResonatorScene& scene, int k_max) {
  if (k_max < 1) throw ConfigError("truncation_report: K_max must be >= 1");
  TruncationReport report;
  report.regime_ratio = regime_ratio(scene).ratio;
  const Eigen::MatrixXd exact = blocks.direct_inverse();
  std::vector<double> ks;
  std::vector<double> errors;
  for (int k = 1; k <= k_max; ++k) {
    const Eigen::MatrixXd diff = exact - neumann_partial_sum(blocks, k);
    const double err = Eigen::JacobiSVD<Eigen::MatrixXd>(diff).singularValues()(0);
    report.rows.push_back({k, err});
    // Errors at roundoff level no longer carry the geometric rate.
    if (err > 1e-13 * exact.norm()) {
      ks.push_back(k);
      errors.push_back(std::log(err));
    }
  }
  if (ks.size() >= 2) {
    const auto m = static_cast<double>(ks.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      sx += ks[i];
      sy += errors[i];
      sxx += ks[i] * ks[i];
      sxy += ks[i] * errors[i];
    }
    report.fitted_ratio = std::exp((m * sxy - sx * sy) / (m * sxx - sx * sx));
  }
  return report;
}

}  // namespace capsense
