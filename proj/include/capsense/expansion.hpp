#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "capsense/bie.hpp"
#include "capsense/capacitance.hpp"

namespace capsense {

/// Single layer on resonators + defect split into blocks, with cached
/// factorizations of the diagonal blocks and the indicator loads of every body.
/// Immutable after construction.
class BlockSingleLayer {
 public:
  BlockSingleLayer(const GalerkinOperator& op, const ResonatorScene& scene);

  const BlockPartition& blocks() const { return blocks_; }
  Eigen::Index resonator_dofs() const { return blocks_.s_d.rows(); }
  Eigen::Index defect_dofs() const { return blocks_.s_omega.rows(); }
  Eigen::Index resonator_count() const { return chi_d_.cols(); }

  /// Indicator loads (= boundary integral functionals) on the resonator block, M_D x N.
  const Eigen::MatrixXd& chi_d() const { return chi_d_; }
  /// Indicator load of the defect on its own block, M_Omega x 1.
  const Eigen::VectorXd& chi_omega() const { return chi_omega_; }

  Eigen::MatrixXd solve_d(const Eigen::MatrixXd& rhs) const { return s_d_llt_.solve(rhs); }
  Eigen::MatrixXd solve_omega(const Eigen::MatrixXd& rhs) const { return s_omega_llt_.solve(rhs); }

  /// T_D v = S_D^{-1} S_{D,Omega} S_Omega^{-1} S_{Omega,D} v, without forming T_D.
  Eigen::MatrixXd apply_t_d(const Eigen::MatrixXd& v) const;
  /// T_Omega v = S_Omega^{-1} S_{Omega,D} S_D^{-1} S_{D,Omega} v.
  Eigen::MatrixXd apply_t_omega(const Eigen::MatrixXd& v) const;

  /// Dense inverse of the full operator (direct oracle).
  Eigen::MatrixXd direct_inverse() const;

 private:
  BlockPartition blocks_;
  Eigen::LLT<Eigen::MatrixXd> s_d_llt_;
  Eigen::LLT<Eigen::MatrixXd> s_omega_llt_;
  Eigen::MatrixXd chi_d_;
  Eigen::VectorXd chi_omega_;
};

struct ReflectionOperators {
  Eigen::MatrixXd t_d;
  Eigen::MatrixXd t_omega;
  double spectral_radius = 0.0;  // power-iteration estimate for T_D (shared with T_Omega)
};

/// Largest |eigenvalue| of T_D by power iteration (50 steps, tolerance 1e-6).
double reflection_spectral_radius(const BlockSingleLayer& blocks);

ReflectionOperators reflections(const BlockSingleLayer& blocks);

/// Partial sum P_{2K} of the alternating block series: the summands j = 0..2K-2,
/// i.e. diagonal parts T^n S^{-1} for n < K and off-diagonal parts for n < K-1.
/// Throws DivergenceError when the spectral radius of T_D is >= 1.
Eigen::MatrixXd neumann_partial_sum(const BlockSingleLayer& blocks, int k);

/// Per-order contributions to the (N+1) x (N+1) capacitance. Order 0 carries
/// C in the resonator block, the n = 0 mixed terms and the isolated defect
/// capacitance; order n >= 1 carries the T^n terms of each entry family.
struct ExpansionResult {
  int order = 0;
  Eigen::MatrixXd cumulative;
  std::vector<Eigen::MatrixXd> terms;
};

ExpansionResult capacitance_expansion(const BlockSingleLayer& blocks, int n_max);

/// First correction E beyond the leading description, blocks as displayed
/// (E11 from T_D S_D^{-1}, E12 / E21 the T-weighted mixed terms, E22 from
/// T_Omega S_Omega^{-1}), plus the zeroth-order mixed and defect terms that
/// blockdiag(C, 0) does not contain.
struct CorrectionMatrix {
  Eigen::MatrixXd e;
  Eigen::MatrixXd zeroth;  // n = 0 mixed entries and C_Omega,Omega; zero resonator block

  Eigen::Index resonator_count() const { return e.rows() - 1; }
  Eigen::MatrixXd e11() const { return e.topLeftCorner(e.rows() - 1, e.cols() - 1); }
  Eigen::VectorXd e12() const { return e.topRightCorner(e.rows() - 1, 1); }
  Eigen::RowVectorXd e21() const { return e.bottomLeftCorner(1, e.cols() - 1); }
  double e22() const { return e(e.rows() - 1, e.cols() - 1); }

  Eigen::MatrixXd with_zeroth() const { return e + zeroth; }
};

CorrectionMatrix first_order_correction(const BlockSingleLayer& blocks);

struct TruncationRow {
  int k = 0;
  double error = 0.0;  // spectral norm of S^{-1} - P_{2K}
};

struct TruncationReport {
  std::vector<TruncationRow> rows;
  double fitted_ratio = 0.0;  // geometric decay per K, least squares on log errors
  double regime_ratio = 0.0;  // |dOmega|^{1/2} / d of the scene
};

TruncationReport truncation_report(const BlockSingleLayer& blocks, const ResonatorScene& scene, int k_max);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace capsense
