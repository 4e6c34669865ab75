#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "capsense/geometry.hpp"
#include "capsense/harmonics.hpp"

namespace capsense {

/// Truncation of the per-sphere harmonic basis and of the cross-body quadrature.
struct DiscretizationConfig {
  int max_degree = 4;        // L; (L+1)^2 basis functions per sphere
  int quadrature_order = 0;  // Gauss nodes in theta (2x in phi); 0 selects 2(L+1)

  int effective_quadrature() const { return quadrature_order > 0 ? quadrature_order : 2 * (max_degree + 1); }
  int basis_size() const { return (max_degree + 1) * (max_degree + 1); }
  void validate() const;
};

/// Coefficients of a surface density (or a Galerkin load vector) in the
/// concatenated per-body bases.
using DensityVector = Eigen::VectorXd;

/// Dense Galerkin matrix <S b_q, b_p> of the Laplace single layer on a union of
/// spheres. The basis on a sphere of radius R is Y_n^m(x_hat) / R, orthonormal in
/// L^2 of the sphere surface, so the mass matrix is the identity.
class GalerkinOperator {
 public:
  GalerkinOperator(std::vector<Sphere> bodies, DiscretizationConfig config, Eigen::MatrixXd matrix);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::vector<Sphere>& bodies() const { return bodies_; }
  const DiscretizationConfig& config() const { return config_; }

  int body_count() const { return static_cast<int>(bodies_.size()); }
  Eigen::Index block_size() const { return config_.basis_size(); }
  Eigen::Index offset(int body) const;
  Eigen::Index size() const { return matrix_.rows(); }

  /// Surface mass matrix of the basis (identity for the orthonormal basis).
  Eigen::MatrixXd gram() const;

 private:
  std::vector<Sphere> bodies_;
  DiscretizationConfig config_;
  Eigen::MatrixXd matrix_;
};

/// Same-sphere blocks are diag(R/(2n+1)); cross blocks use the tensor-product rule.
GalerkinOperator assemble_single_layer(std::span<const Sphere> bodies, const DiscretizationConfig& config);

/// Quadrature rule and weighted harmonic table shared by every cross-body block
/// of one discretization. Immutable once built.
class SphereQuadrature {
 public:
  explicit SphereQuadrature(const DiscretizationConfig& config);

  /// Block with rows in the basis of `row_body` and columns in that of
  /// `col_body`. The spheres must be disjoint.
  Eigen::MatrixXd cross_block(const Sphere& row_body, const Sphere& col_body) const;

  /// Quadrature points on a sphere, 3 x P.
  Eigen::Matrix3Xd points_on(const Sphere& body) const;
  /// diag(weights) * harmonic table on the unit sphere, P x (L+1)^2.
  const Eigen::MatrixXd& weighted_basis() const { return weighted_basis_; }

 private:
  SphereRule rule_;
  Eigen::MatrixXd weighted_basis_;
};

/// One-off cross-body block; see SphereQuadrature::cross_block.
Eigen::MatrixXd cross_block(const Sphere& row_body, const Sphere& col_body, const DiscretizationConfig& config);

/// Load vector of the indicator of body j: sqrt(4 pi) R_j on its degree-0 entry.
DensityVector indicator_rhs(const GalerkinOperator& op, int body);

/// Indicator load vectors of all bodies, one per column.
Eigen::MatrixXd indicator_matrix(const GalerkinOperator& op);

/// Integral of the density over body i: sqrt(4 pi) R_i times its degree-0 coefficient.
double boundary_integral(const GalerkinOperator& op, const DensityVector& density, int body);

/// Cholesky factorization of a single-layer matrix with a condition guard.
class DensitySolver {
 public:
  static constexpr double kMaxCondition = 1e12;

  explicit DensitySolver(const Eigen::MatrixXd& matrix);

  DensityVector solve(const DensityVector& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd inverse() const;
  double condition_estimate() const { return condition_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double condition_ = 0.0;
};

/// S^{-1} applied to the function whose load vector is `rhs`.
DensityVector solve_density(const GalerkinOperator& op, const DensityVector& rhs);

/// Blocks of the operator with respect to (resonators, defect); the defect is the last body.
struct BlockPartition {
  Eigen::MatrixXd s_d;
  Eigen::MatrixXd s_d_omega;
  Eigen::MatrixXd s_omega_d;
  Eigen::MatrixXd s_omega;

  Eigen::MatrixXd assemble() const;
};

BlockPartition block_partition(const GalerkinOperator& op, const ResonatorScene& scene);

/// Plain CSV dump of a matrix at full precision.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& matrix);

}  // namespace capsense
