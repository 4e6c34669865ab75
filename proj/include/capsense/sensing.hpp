#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "capsense/bie.hpp"
#include "capsense/capacitance.hpp"
#include "capsense/geometry.hpp"

namespace capsense {

/// Resonances omega_1..omega_N of a scene, ordered like the unperturbed branches.
struct MeasuredSpectrum {
  Eigen::VectorXcd values;

  Eigen::Index size() const { return values.size(); }
};

/// Center and radius of a candidate defect.
struct DefectParams {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Map between the free coordinates p of the descent and a DefectParams. In
/// plane mode p = (x, y) and the center is (x, y, 0); otherwise p is the center.
struct DefectParameterization {
  bool plane = true;
  double radius = 0.0;

  int dimension() const { return plane ? 2 : 3; }
  DefectParams params(std::span<const double> p) const;
  std::vector<double> coordinates(const DefectParams& defect) const;
};

/// Resonances of the resonator chain with a defect, evaluated for many defect
/// placements. S_D is factored once; each evaluation assembles only the
/// resonator/defect coupling and applies the Woodbury identity to the
/// resonator block of the perturbed capacitance. Immutable after construction
/// and safe to share between threads.
class ForwardModel {
 public:
  /// `base` supplies resonators and their materials; its defect is ignored.
  ForwardModel(const ResonatorScene& base, const DiscretizationConfig& config);

  Eigen::Index resonator_count() const { return capacitance_.rows(); }
  const Eigen::MatrixXd& capacitance() const { return capacitance_; }
  const MaterialWeights& weights() const { return weights_; }
  const DiscretizationConfig& config() const { return config_; }
  /// Unperturbed resonances sorted by (real, imag) of the eigenvalue.
  const MeasuredSpectrum& unperturbed() const { return unperturbed_; }

  /// Resonator block of the perturbed capacitance, N x N. Throws GeometryError
  /// when the defect overlaps a resonator or has a nonpositive radius.
  Eigen::MatrixXd perturbed_capacitance(const DefectParams& defect) const;

  /// sqrt of the eigenvalues of W * (perturbed block), each assigned to the
  /// unperturbed branch it is closest to (minimal total squared distance).
  MeasuredSpectrum resonances(const DefectParams& defect) const;

 private:
  std::vector<Sphere> resonators_;
  DiscretizationConfig config_;
  SphereQuadrature quadrature_;
  Eigen::LLT<Eigen::MatrixXd> s_d_llt_;
  Eigen::MatrixXd phi_;  // S_D^{-1} chi_D, M_D x N
  Eigen::MatrixXd capacitance_;
  MaterialWeights weights_;
  Eigen::VectorXcd unperturbed_eigenvalues_;
  MeasuredSpectrum unperturbed_;
};

/// Permutation minimizing sum_j |a_j - b_perm(j)|^2 (exhaustive for N <= 8, greedy beyond).
std::vector<int> match_branches(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

/// sum_j alpha_j |measured_j - model_perm(j)|^2, with the permutation chosen by
/// match_branches on the unweighted distances. Empty alpha means alpha = 1.
double spectral_misfit(const MeasuredSpectrum& measured, const MeasuredSpectrum& model,
                       std::span<const double> alpha = {});

/// Loss of a defect placement against a measured spectrum.
double loss(const ForwardModel& model, const DefectParams& defect, const MeasuredSpectrum& measured,
            std::span<const double> alpha = {});

/// Loss as a function of the free coordinates.
using ObjectiveFunction = std::function<double(std::span<const double>)>;
ObjectiveFunction make_objective(const ForwardModel& model, const DefectParameterization& parameterization,
                                 const MeasuredSpectrum& measured, std::vector<double> alpha = {});

struct NoiseModel {
  double epsilon = 0.0;
  int draws = 100;
  std::uint64_t seed = 0;
};

/// (1 + eta_j) omega_j with eta_j iid uniform on [-epsilon, epsilon].
template <class Rng>
MeasuredSpectrum noisy_measurements(const MeasuredSpectrum& measured, double epsilon, Rng& rng);

/// Draw `draw` of a seeded noise model: the generator is seeded from (seed, draw)
/// alone, so draws do not depend on evaluation order.
MeasuredSpectrum noisy_measurements(const MeasuredSpectrum& measured, const NoiseModel& noise, int draw);

/// Central differences (f(p + h e_i) - f(p - h e_i)) / (2h). A probe that
/// throws GeometryError shrinks h once by 10; a second failure propagates.
std::vector<double> gradient_fd(const ObjectiveFunction& objective, std::span<const double> p, double h = 1e-3);

enum class StepSchedule { Geometric, Constant };

struct DescentConfig {
  double step = 0.9;  // lambda in (0, 1]
  int iterations = 20;
  double fd_step = 1e-3;
  bool plane_restriction = true;  // p = (x, y), reflected into y >= 0 after each step
  StepSchedule schedule = StepSchedule::Geometric;  // lambda^k or constant lambda

  void validate() const;
};

struct DescentTrace {
  std::vector<std::vector<double>> points;  // p_0 .. p_K
  std::vector<double> losses;
  bool completed = false;
  std::string failure;  // reason when not completed
};

/// p_{k+1} = p_k - lambda^k grad l(p_k) (or constant lambda). Failures stop the
/// descent and return the partial trace.
DescentTrace steepest_descent(const ObjectiveFunction& objective, std::span<const double> start,
                              const DescentConfig& config);

struct MonteCarloRun {
  double epsilon = 0.0;
  int draw = 0;
  int start = 0;
  std::vector<double> final_point;
  double final_loss = 0.0;
  double error = 0.0;  // |p_final - p_truth|
  bool failed = false;
  std::string failure;
};

struct MonteCarloSummary {
  double epsilon = 0.0;
  int runs = 0;
  int failures = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct MonteCarloReport {
  std::vector<MonteCarloRun> runs;  // ordered by (level, draw, start)
  std::vector<MonteCarloSummary> summaries;
};

struct MonteCarloConfig {
  std::vector<double> levels;
  int draws = 100;
  std::uint64_t seed = 0;
  DescentConfig descent;
  std::vector<double> alpha;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// For every noise level and draw: perturb the truth spectrum, run the descent
/// from every start, record the final localization error. Results do not
/// depend on the thread count.
MonteCarloReport monte_carlo(const ForwardModel& model, const DefectParams& truth,
                             const std::vector<std::vector<double>>& starts, const MonteCarloConfig& config);

/// Linear quantile (type 7) of unsorted data.
double quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------

template <class Rng>
MeasuredSpectrum noisy_measurements(const MeasuredSpectrum& measured, double epsilon, Rng& rng) {
  MeasuredSpectrum out = measured;
  if (epsilon == 0.0) return out;
  std::uniform_real_distribution<double> eta(-epsilon, epsilon);
  for (auto& w : out.values) w *= 1.0 + eta(rng);
  return out;
}

}  // namespace capsense
