#include "capsense/capacitance.hpp"

#include <cmath>
#include <iostream>

#include "capsense/errors.hpp"

namespace capsense {

MaterialWeights MaterialWeights::leading(Eigen::Index n) const {
  if (n < 0 || n > values.size()) throw ConfigError("MaterialWeights::leading: size out of range");
  return MaterialWeights{values.head(n)};
}

CapacitanceMatrix capacitance_from_operator(const GalerkinOperator& op) {
  const DensitySolver solver(op.matrix());
  const Eigen::MatrixXd chi = indicator_matrix(op);
  const Eigen::MatrixXd densities = solver.solve(chi);
  // The integral functional of body i is the same vector as its indicator load.
  CapacitanceMatrix c{chi.transpose() * densities};
  return c;
}

CapacitanceMatrix capacitance_matrix(const ResonatorScene& scene, const DiscretizationConfig& config) {
  if (scene.resonators.empty()) throw GeometryError("capacitance_matrix: no resonators");
  const auto spheres = scene.without_defect().spheres();
  return capacitance_from_operator(assemble_single_layer(spheres, config));
}

CapacitanceMatrix perturbed_capacitance_direct(const ResonatorScene& scene, const DiscretizationConfig& config) {
  if (!scene.defect) throw GeometryError("perturbed_capacitance_direct: scene has no defect");
  const auto regime = regime_ratio(scene);
  if (!regime.in_regime) {
    std::cerr << "warning: defect outside the small regime (ratio " << regime.ratio << ")\n";
  }
  const auto spheres = scene.spheres();
  return capacitance_from_operator(assemble_single_layer(spheres, config));
}

MaterialWeights weight_matrix(const ResonatorScene& scene) {
  const auto spheres = scene.spheres();
  const auto materials = scene.materials();
  MaterialWeights w{Eigen::VectorXcd(static_cast<Eigen::Index>(spheres.size()))};
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const double volume = spheres[i].volume();
    if (!(volume > 0.0)) throw GeometryError("weight_matrix: zero volume body " + std::to_string(i + 1));
    const Complex& v = materials[i].speed;
    w.values[static_cast<Eigen::Index>(i)] = materials[i].delta * v * v / volume;
  }
  return w;
}

WeightedCapacitance weighted_capacitance(const Eigen::MatrixXd& capacitance, const MaterialWeights& weights) {
  if (capacitance.rows() != capacitance.cols() || capacitance.rows() != weights.size()) {
    throw ConfigError("weighted_capacitance: dimension mismatch");
  }
  return WeightedCapacitance{weights.values.asDiagonal() * capacitance.cast<Complex>()};
}

WeightedCapacitance weighted_capacitance(const CapacitanceMatrix& capacitance, const MaterialWeights& weights) {
  return weighted_capacitance(capacitance.values, weights);
}

}  // namespace capsense
