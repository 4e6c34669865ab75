#include "capsense/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "capsense/errors.hpp"
#include "capsense/expansion.hpp"

namespace capsense {

ResonatorScene with_weights(const ResonatorScene& scene, const MaterialWeights& weights) {
  if (weights.size() != static_cast<Eigen::Index>(scene.resonator_count())) {
    throw ConfigError("with_weights: one weight per resonator expected");
  }
  ResonatorScene out = scene;
  for (std::size_t j = 0; j < out.resonators.size(); ++j) {
    Body& b = out.resonators[j];
    const Complex v = b.material.speed;
    b.material.delta = weights.values[static_cast<Eigen::Index>(j)] * b.sphere.volume() / (v * v);
  }
  return out;
}

EpTuning tune_exceptional_point(const ResonatorScene& scene, const DiscretizationConfig& config, double initial_tau,
                                const EpSearchOptions& options) {
  const ResonatorScene base = scene.without_defect();
  const CapacitanceMatrix c = capacitance_matrix(base, config);
  EpTuning out;
  out.search = find_exceptional_point(c.values, antisymmetric_gain_loss(base, initial_tau), options);
  out.scene = with_weights(scene, out.search.weights);
  return out;
}

BranchStructure branch_structure(const Eigen::MatrixXcd& weighted, double floor) {
  BranchStructure s;
  s.pairs = eigenpairs(weighted);
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    if (s.pairs[i].condition < floor) s.ep_members.push_back(static_cast<int>(i));
  }
  if (s.ep_members.empty()) return s;
  if (s.ep_members.size() != 2) {
    throw NumericalError("branch_structure: " + std::to_string(s.ep_members.size()) +
                         " ill-conditioned eigenvalues; only a single coalesced pair is supported");
  }
  const Complex mean = 0.5 * (s.pairs[s.ep_members[0]].eigenvalue + s.pairs[s.ep_members[1]].eigenvalue);
  s.chain = jordan_chain(weighted, mean, 2, 1e-6);
  return s;
}

Eigen::VectorXcd predicted_eigenvalues(const BranchStructure& structure, const Eigen::MatrixXcd& weighted_perturbation,
                                       const Eigen::VectorXcd& reference) {
  const auto n = static_cast<Eigen::Index>(structure.pairs.size());
  Eigen::VectorXcd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool in_pair = std::find(structure.ep_members.begin(), structure.ep_members.end(), static_cast<int>(j)) !=
                         structure.ep_members.end();
    if (!in_pair) {
      out[j] = simple_perturbation(structure.pairs[static_cast<std::size_t>(j)], weighted_perturbation).eigenvalues[0];
    }
  }
  if (structure.chain) {
    const PerturbationResult ep = ep_perturbation(*structure.chain, weighted_perturbation);
    const int a = structure.ep_members[0];
    const int b = structure.ep_members[1];
    const double keep = std::norm(ep.eigenvalues[0] - reference[a]) + std::norm(ep.eigenvalues[1] - reference[b]);
    const double swap = std::norm(ep.eigenvalues[1] - reference[a]) + std::norm(ep.eigenvalues[0] - reference[b]);
    out[a] = keep <= swap ? ep.eigenvalues[0] : ep.eigenvalues[1];
    out[b] = keep <= swap ? ep.eigenvalues[1] : ep.eigenvalues[0];
  }
  return out;
}

SweepResult radius_sweep(const ResonatorScene& scene, const std::vector<double>& radii,
                         const DiscretizationConfig& config) {
  if (radii.empty()) throw ConfigError("radius_sweep: empty radius grid");
  if (!scene.defect) throw GeometryError("radius_sweep: scene has no defect (its center is swept)");
  const ResonatorScene base = scene.without_defect();
  const ForwardModel model(base, config);
  const Eigen::VectorXcd& w = model.weights().values;
  const Eigen::MatrixXcd weighted = w.asDiagonal() * model.capacitance().cast<Complex>();
  const BranchStructure structure = branch_structure(weighted);
  const auto n = static_cast<Eigen::Index>(structure.pairs.size());

  SweepResult out;
  out.ep_members = structure.ep_members;
  Eigen::VectorXcd base_lambda(n);
  out.unperturbed.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    base_lambda[j] = structure.pairs[static_cast<std::size_t>(j)].eigenvalue;
    out.unperturbed[j] = std::sqrt(base_lambda[j]);
  }

  for (const double r : radii) {
    Body defect = *scene.defect;
    defect.sphere.radius = r;
    const ResonatorScene perturbed = base.with_defect(defect);
    require_valid(perturbed);
    const Eigen::MatrixXd c_tilde = model.perturbed_capacitance({defect.sphere.center, r});
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(w.asDiagonal() * c_tilde.cast<Complex>(), false);
    if (solver.info() != Eigen::Success) throw NumericalError("radius_sweep: eigensolver failed");
    const std::vector<int> perm = match_branches(base_lambda, solver.eigenvalues());
    Eigen::VectorXcd direct_lambda(n);
    for (Eigen::Index j = 0; j < n; ++j) direct_lambda[j] = solver.eigenvalues()[perm[j]];

    const GalerkinOperator op = assemble_single_layer(perturbed.spheres(), config);
    const CorrectionMatrix correction = first_order_correction(BlockSingleLayer(op, perturbed));
    const Eigen::MatrixXcd dE = w.asDiagonal() * correction.e11().cast<Complex>();
    const Eigen::VectorXcd predicted_lambda = predicted_eigenvalues(structure, dE, direct_lambda);

    SweepRow row;
    row.radius = r;
    row.direct = direct_lambda.unaryExpr([](const Complex& l) { return std::sqrt(l); });
    row.predicted = predicted_lambda.unaryExpr([](const Complex& l) { return std::sqrt(l); });
    row.direct_shift = (row.direct - out.unperturbed).cwiseAbs();
    row.predicted_shift = (row.predicted - out.unperturbed).cwiseAbs();
    row.prediction_error = (row.predicted - row.direct).cwiseAbs();
    out.rows.push_back(std::move(row));
  }

  if (radii.size() >= 2) {
    std::vector<double> xs;
    for (const auto& row : out.rows) xs.push_back(row.radius);
    for (Eigen::Index j = 0; j < n; ++j) {
      std::vector<double> shift, error;
      for (const auto& row : out.rows) {
        shift.push_back(row.direct_shift[j]);
        error.push_back(row.prediction_error[j]);
      }
      auto slope = [&](const std::vector<double>& ys) {
        try {
          return loglog_slope(xs, ys);
        } catch (const NumericalError&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      };
      out.direct_slopes.push_back(slope(shift));
      out.error_slopes.push_back(slope(error));
    }
  }
  return out;
}

LossMap loss_map(const ObjectiveFunction& objective, const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.empty() || ys.empty()) throw ConfigError("loss_map: empty grid");
  LossMap map;
  map.xs = xs;
  map.ys = ys;
  map.values.resize(static_cast<Eigen::Index>(ys.size()), static_cast<Eigen::Index>(xs.size()));
  map.min_value = std::numeric_limits<double>::infinity();
  map.max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t iy = 0; iy < ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      const std::vector<double> p{xs[ix], ys[iy]};
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = objective(p);
      } catch (const GeometryError&) {
        // defect would overlap a resonator: flagged as non-finite
      }
      map.values(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)) = v;
      if (!std::isfinite(v)) {
        ++map.nonfinite;
        continue;
      }
      if (v < map.min_value) {
        map.min_value = v;
        map.min_ix = static_cast<int>(ix);
        map.min_iy = static_cast<int>(iy);
      }
      map.max_value = std::max(map.max_value, v);
    }
  }
  return map;
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw ConfigError("linspace: need at least one point");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

}  // namespace capsense
