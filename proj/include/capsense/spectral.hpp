#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "capsense/capacitance.hpp"
#include "capsense/expansion.hpp"

namespace capsense {

/// Principal square root (branch cut on the negative real axis, Re >= 0).
Complex resonance_from_eigenvalue(Complex lambda);

/// Eigenvalue lambda with unit right/left eigenvectors. The phase of `left` is
/// chosen so that condition = y^* x is real and nonnegative.
struct EigenTriple {
  Complex eigenvalue;
  Eigen::VectorXcd right;
  Eigen::VectorXcd left;
  double condition = 0.0;
  bool ambiguous = false;  // semisimple cluster: vectors are not uniquely defined
};

/// Eigenvalues sorted by (real, imag); resonances omega_n = sqrt(lambda_n).
struct Spectrum {
  Eigen::VectorXcd eigenvalues;
  Eigen::VectorXcd resonances;
  Eigen::MatrixXcd right;
  Eigen::MatrixXcd left;
  Eigen::VectorXd conditions;
};

Spectrum resonances(const WeightedCapacitance& weighted);
Spectrum resonances(const Eigen::MatrixXcd& matrix);

/// Right and left eigenvectors of every eigenvalue. Left vectors come from the
/// null space of (C - lambda I)^*, so pairing is by construction.
std::vector<EigenTriple> eigenpairs(const Eigen::MatrixXcd& matrix);

struct PerturbationResult {
  std::vector<Complex> eigenvalues;  // predicted lambda~ (one, or r branches)
  std::vector<Complex> resonances;   // sqrt of the above
  Complex xi;                        // y^* D_delta E x (not divided by y^* x)
  double remainder_estimate = 0.0;   // magnitude of the neglected second-order term
};

/// lambda~ = lambda + y^*(D_delta E)x / (y^* x). `weighted_perturbation` is D_delta E,
/// either N x N or (N+1) x (N+1); in the latter case x and y are zero-padded.
PerturbationResult simple_perturbation(const EigenTriple& pair, const Eigen::MatrixXcd& weighted_perturbation,
                                       double condition_floor = 1e-6);
PerturbationResult simple_perturbation(const EigenTriple& pair, const MaterialWeights& weights,
                                       const CorrectionMatrix& correction, double condition_floor = 1e-6);

/// Right chain X = [x_1..x_r] with (C - lambda I) x_{j+1} = x_j, (C - lambda I) x_1 = 0,
/// left chain Y = [y_1..y_r] with (C - lambda I)^* y_{j+1} = y_j, normalized so
/// that [y_r, ..., y_1]^* X = I.
struct JordanChain {
  Complex eigenvalue;
  int order = 0;
  Eigen::MatrixXcd right;
  Eigen::MatrixXcd left;

  /// Rows y_r^*, ..., y_1^* times X.
  Eigen::MatrixXcd normalization() const;
  /// max_j |(C - lambda I) x_j - x_{j-1}| over the right chain (x_0 = 0).
  double chain_residual(const Eigen::MatrixXcd& matrix) const;
};

JordanChain jordan_chain(const Eigen::MatrixXcd& matrix, Complex eigenvalue, int order, double tolerance = 1e-8);

/// lambda~_m = lambda + xi^{1/r} exp(2 pi i m / r), xi = y_1^* (D_delta E) x_1.
PerturbationResult ep_perturbation(const JordanChain& chain, const Eigen::MatrixXcd& weighted_perturbation);
PerturbationResult ep_perturbation(const JordanChain& chain, const MaterialWeights& weights,
                                   const CorrectionMatrix& correction);

/// D_delta E for the zero-padded formulas: diag(w) E with w of the N+1 bodies.
Eigen::MatrixXcd weighted_correction(const MaterialWeights& weights, const CorrectionMatrix& correction);

/// Material weights as a function of a few real parameters.
struct GainLossFamily {
  std::function<MaterialWeights(std::span<const double>)> weights;
  std::vector<double> initial;
  std::vector<double> initial_step;
  /// The family presumes a chain that is symmetric under index reversal; the
  /// search then restores that symmetry in C where only roundoff breaks it.
  bool mirror_symmetric = false;
};

/// (C + J C J) / 2 with J the index reversal, if C is reversal-symmetric up to
/// `tolerance` relative; otherwise C unchanged. Roundoff-level asymmetry turns
/// an exceptional point of a PT-symmetric family into an avoided crossing with
/// a gap of order sqrt(eps).
Eigen::MatrixXd restore_mirror_symmetry(const Eigen::MatrixXd& capacitance, double tolerance = 1e-10);

/// delta_j = delta_j0 (1 + i tau s_j) with s = (1, .., 0, .., -1) linear and
/// antisymmetric along the chain, and the middle contrasts scaled by kappa.
/// Parameters (tau, kappa).
GainLossFamily antisymmetric_gain_loss(const ResonatorScene& scene, double initial_tau = 0.5);

struct EpSearchOptions {
  int max_evaluations = 20000;
  double gap_tolerance = 1e-8;  // relative to ||C||
  double condition_tolerance = 1e-4;
  double min_relative_step = 1e-17;
};

struct EpSearchResult {
  bool converged = false;
  std::vector<double> parameters;
  MaterialWeights weights;
  double relative_gap = 0.0;
  double condition = 0.0;
  Complex eigenvalue;  // mean of the coalescing pair
  int first = -1;
  int second = -1;
  int evaluations = 0;
  std::string message;
};

/// Closest-pair gap |lambda_a - lambda_b| / ||C|| of diag(w) C, evaluated in extended precision.
struct PairGap {
  double relative_gap = 0.0;
  Complex mean;
  int first = -1;
  int second = -1;
};
PairGap closest_pair(const Eigen::MatrixXcd& matrix);

/// Coordinate search with shrinking steps on the closest-pair gap of diag(w(p)) C.
/// Failure to close the gap is reported through `converged`, not thrown. Gap and
/// condition refer to the (mirror-restored, if applicable) capacitance.
EpSearchResult find_exceptional_point(const Eigen::MatrixXd& capacitance, const GainLossFamily& family,
                                      const EpSearchOptions& options = {});

}  // namespace capsense
