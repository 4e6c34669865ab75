#pragma once

#include <optional>
#include <vector>

#include "capsense/bie.hpp"
#include "capsense/sensing.hpp"
#include "capsense/spectral.hpp"

namespace capsense {

/// Scene whose resonator materials realize the given weights: delta_j = w_j |D_j| / v_j^2.
ResonatorScene with_weights(const ResonatorScene& scene, const MaterialWeights& weights);

struct EpTuning {
  EpSearchResult search;
  ResonatorScene scene;  // resonators carry the tuned materials; defect kept
};

/// Tune the antisymmetric gain/loss family of `scene` to an exceptional point.
EpTuning tune_exceptional_point(const ResonatorScene& scene, const DiscretizationConfig& config,
                                double initial_tau = 0.5, const EpSearchOptions& options = {});

/// Branches of the unperturbed spectrum: simple eigenvalues, or coalesced pairs
/// handled by the exceptional-point expansion.
struct BranchStructure {
  std::vector<EigenTriple> pairs;  // sorted eigenpairs of W C
  std::vector<int> ep_members;     // indices in the coalesced pair (empty if none)
  std::optional<JordanChain> chain;
};

/// Eigenvalues with condition below `floor` are treated as one coalesced pair.
BranchStructure branch_structure(const Eigen::MatrixXcd& weighted, double floor = 1e-6);

/// First-order predicted eigenvalues for a defect, one per branch, ordered like
/// `structure.pairs`. EP branches are assigned to the pair members by proximity
/// to `reference` (typically the direct eigenvalues).
Eigen::VectorXcd predicted_eigenvalues(const BranchStructure& structure, const Eigen::MatrixXcd& weighted_perturbation,
                                       const Eigen::VectorXcd& reference);

struct SweepRow {
  double radius = 0.0;
  Eigen::VectorXcd direct;     // resonances of the perturbed resonator block
  Eigen::VectorXcd predicted;  // resonances from the first-order formulas
  Eigen::VectorXd direct_shift;     // |omega~_j - omega_j|
  Eigen::VectorXd predicted_shift;  // |omega_pred_j - omega_j|
  Eigen::VectorXd prediction_error; // |omega_pred_j - omega~_j|
};

struct SweepResult {
  Eigen::VectorXcd unperturbed;
  std::vector<int> ep_members;
  std::vector<SweepRow> rows;
  std::vector<double> direct_slopes;  // per branch, log-log vs radius
  std::vector<double> error_slopes;
};

/// Defect radius sweep at the scene's defect center.
SweepResult radius_sweep(const ResonatorScene& scene, const std::vector<double>& radii,
                         const DiscretizationConfig& config);

struct LossMap {
  std::vector<double> xs;
  std::vector<double> ys;
  Eigen::MatrixXd values;  // values(iy, ix); NaN where the loss is undefined
  int min_ix = -1;
  int min_iy = -1;
  double min_value = 0.0;
  double max_value = 0.0;
  int nonfinite = 0;
};

/// Loss on the tensor grid xs x ys of plane coordinates.
LossMap loss_map(const ObjectiveFunction& objective, const std::vector<double>& xs, const std::vector<double>& ys);

/// n equally spaced values in [a, b] (n = 1 gives a).
std::vector<double> linspace(double a, double b, int n);

}  // namespace capsense
