#pragma once

#include <Eigen/Core>

#include "capsense/bie.hpp"
#include "capsense/geometry.hpp"

namespace capsense {

/// C_ij = integral over dD_i of S^{-1}[chi_{dD_j}]. Index N+1 (last) is the
/// defect for perturbed matrices.
struct CapacitanceMatrix {
  Eigen::MatrixXd values;

  Eigen::Index size() const { return values.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

/// Per-body weights w_i = delta_i v_i^2 / |D_i|; diag(w) is D_delta.
struct MaterialWeights {
  Eigen::VectorXcd values;

  Eigen::Index size() const { return values.size(); }
  /// First n weights (resonators only).
  MaterialWeights leading(Eigen::Index n) const;
};

/// Row-scaled capacitance diag(w) C.
struct WeightedCapacitance {
  Eigen::MatrixXcd values;

  Eigen::Index size() const { return values.rows(); }
};

/// Capacitance from an assembled operator, all bodies.
CapacitanceMatrix capacitance_from_operator(const GalerkinOperator& op);

/// N x N capacitance of the resonators (any defect in the scene is ignored).
CapacitanceMatrix capacitance_matrix(const ResonatorScene& scene, const DiscretizationConfig& config);

/// (N+1) x (N+1) capacitance of resonators plus defect, by direct assembly and
/// factorization on the full union.
CapacitanceMatrix perturbed_capacitance_direct(const ResonatorScene& scene, const DiscretizationConfig& config);

/// Weights of every body of the scene (defect last when present).
MaterialWeights weight_matrix(const ResonatorScene& scene);

WeightedCapacitance weighted_capacitance(const CapacitanceMatrix& capacitance, const MaterialWeights& weights);
WeightedCapacitance weighted_capacitance(const Eigen::MatrixXd& capacitance, const MaterialWeights& weights);

}  // namespace capsense
