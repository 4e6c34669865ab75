#include "capsense/sensing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <Eigen/Eigenvalues>

#include "capsense/errors.hpp"

namespace capsense {

namespace {

constexpr double kMinDefectRadius = 1e-8;

bool eigenvalue_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

Eigen::VectorXcd eigenvalues_of(const Eigen::MatrixXcd& m) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, false);
  if (solver.info() != Eigen::Success) throw NumericalError("forward model: eigensolver failed");
  return solver.eigenvalues();
}

}  // namespace

DefectParams DefectParameterization::params(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != dimension()) throw ConfigError("defect parameters: wrong number of coordinates");
  DefectParams d;
  d.radius = radius;
  d.center = plane ? Vec3(p[0], p[1], 0.0) : Vec3(p[0], p[1], p[2]);
  return d;
}

std::vector<double> DefectParameterization::coordinates(const DefectParams& defect) const {
  if (plane) return {defect.center.x(), defect.center.y()};
  return {defect.center.x(), defect.center.y(), defect.center.z()};
}

ForwardModel::ForwardModel(const ResonatorScene& base, const DiscretizationConfig& config)
    : config_(config), quadrature_((config.validate(), config)) {
  const ResonatorScene resonators_only = base.without_defect();
  if (resonators_only.resonators.empty()) throw GeometryError("forward model: no resonators");
  resonators_ = resonators_only.spheres();
  const GalerkinOperator op = assemble_single_layer(resonators_, config_);
  const DensitySolver guard(op.matrix());  // condition check
  s_d_llt_.compute(op.matrix());
  const Eigen::MatrixXd chi = indicator_matrix(op);
  phi_ = s_d_llt_.solve(chi);
  capacitance_ = chi.transpose() * phi_;
  capacitance_ = 0.5 * (capacitance_ + capacitance_.transpose()).eval();
  weights_ = weight_matrix(resonators_only);

  unperturbed_eigenvalues_ = eigenvalues_of(weights_.values.asDiagonal() * capacitance_.cast<Complex>());
  std::sort(unperturbed_eigenvalues_.begin(), unperturbed_eigenvalues_.end(), eigenvalue_less);
  unperturbed_.values = unperturbed_eigenvalues_.unaryExpr([](const Complex& l) { return std::sqrt(l); });
}

Eigen::MatrixXd ForwardModel::perturbed_capacitance(const DefectParams& defect) const {
  if (!(defect.radius >= kMinDefectRadius) || !defect.center.allFinite()) {
    throw GeometryError("forward model: defect radius must be >= 1e-8 and the center finite");
  }
  const Sphere omega{defect.center, defect.radius};
  const Eigen::Index nb = config_.basis_size();
  const auto n = static_cast<Eigen::Index>(resonators_.size());
  Eigen::MatrixXd coupling(n * nb, nb);  // S_{D,Omega}
  for (Eigen::Index a = 0; a < n; ++a) {
    if (!(gap(resonators_[a], omega) > 0.0)) {
      throw GeometryError("forward model: defect overlaps resonator " + std::to_string(a + 1));
    }
    coupling.middleRows(a * nb, nb) = quadrature_.cross_block(resonators_[a], omega);
  }
  Eigen::MatrixXd schur = -coupling.transpose() * s_d_llt_.solve(coupling);
  for (Eigen::Index q = 0; q < nb; ++q) schur(q, q) += defect.radius / (2.0 * harmonic_degree(static_cast<int>(q)) + 1.0);
  const Eigen::LLT<Eigen::MatrixXd> schur_llt(schur);
  if (schur_llt.info() != Eigen::Success) throw NumericalError("forward model: Schur complement not positive definite");
  const Eigen::MatrixXd b = phi_.transpose() * coupling;  // N x M_Omega
  Eigen::MatrixXd out = capacitance_ + b * schur_llt.solve(b.transpose());
  return 0.5 * (out + out.transpose());
}

MeasuredSpectrum ForwardModel::resonances(const DefectParams& defect) const {
  const Eigen::MatrixXd perturbed = perturbed_capacitance(defect);
  const Eigen::VectorXcd lambda = eigenvalues_of(weights_.values.asDiagonal() * perturbed.cast<Complex>());
  const std::vector<int> perm = match_branches(unperturbed_eigenvalues_, lambda);
  MeasuredSpectrum out;
  out.values.resize(lambda.size());
  for (Eigen::Index j = 0; j < lambda.size(); ++j) out.values[j] = std::sqrt(lambda[perm[j]]);
  return out;
}

std::vector<int> match_branches(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  if (a.size() != b.size()) throw ConfigError("match_branches: length mismatch");
  const auto n = static_cast<int>(a.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (n <= 8) {
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double cost = 0.0;
      for (int j = 0; j < n; ++j) cost += std::norm(a[j] - b[perm[j]]);
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<bool> used(n, false);
  for (int j = 0; j < n; ++j) {
    int pick = -1;
    for (int k = 0; k < n; ++k) {
      if (!used[k] && (pick < 0 || std::norm(a[j] - b[k]) < std::norm(a[j] - b[pick]))) pick = k;
    }
    used[pick] = true;
    perm[j] = pick;
  }
  return perm;
}

double spectral_misfit(const MeasuredSpectrum& measured, const MeasuredSpectrum& model, std::span<const double> alpha) {
  if (measured.size() != model.size()) throw ConfigError("loss: measured and model spectra differ in length");
  if (!alpha.empty() && static_cast<Eigen::Index>(alpha.size()) != measured.size()) {
    throw ConfigError("loss: weight vector length differs from the spectrum");
  }
  const std::vector<int> perm = match_branches(measured.values, model.values);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < measured.size(); ++j) {
    const double a = alpha.empty() ? 1.0 : alpha[static_cast<std::size_t>(j)];
    sum += a * std::norm(measured.values[j] - model.values[perm[j]]);
  }
  return sum;
}

double loss(const ForwardModel& model, const DefectParams& defect, const MeasuredSpectrum& measured,
            std::span<const double> alpha) {
  return spectral_misfit(measured, model.resonances(defect), alpha);
}

ObjectiveFunction make_objective(const ForwardModel& model, const DefectParameterization& parameterization,
                                 const MeasuredSpectrum& measured, std::vector<double> alpha) {
  return [&model, parameterization, measured, alpha = std::move(alpha)](std::span<const double> p) {
    return loss(model, parameterization.params(p), measured, alpha);
  };
}

MeasuredSpectrum noisy_measurements(const MeasuredSpectrum& measured, const NoiseModel& noise, int draw) {
  if (!(noise.epsilon >= 0.0)) throw ConfigError("noise level must be >= 0");
  std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                    static_cast<std::uint32_t>(draw)};
  std::mt19937_64 rng(seq);
  return noisy_measurements(measured, noise.epsilon, rng);
}

std::vector<double> gradient_fd(const ObjectiveFunction& objective, std::span<const double> p, double h) {
  if (!(h > 0.0)) throw ConfigError("gradient_fd: step must be positive");
  std::vector<double> probe(p.begin(), p.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double step = h;
    for (int attempt = 0;; ++attempt) {
      try {
        probe[i] = p[i] + step;
        const double plus = objective(probe);
        probe[i] = p[i] - step;
        const double minus = objective(probe);
        grad[i] = (plus - minus) / (2.0 * step);
        break;
      } catch (const GeometryError&) {
        if (attempt > 0) throw;
        step *= 0.1;
      }
    }
    probe[i] = p[i];
  }
  return grad;
}

void DescentConfig::validate() const {
  if (!(step > 0.0 && step <= 1.0)) throw ConfigError("descent: step lambda must lie in (0, 1]");
  if (iterations < 0) throw ConfigError("descent: iterations must be >= 0");
  if (!(fd_step > 0.0)) throw ConfigError("descent: fd step must be positive");
}

DescentTrace steepest_descent(const ObjectiveFunction& objective, std::span<const double> start,
                              const DescentConfig& config) {
  config.validate();
  DescentTrace trace;
  std::vector<double> p(start.begin(), start.end());
  if (config.plane_restriction && p.size() != 2) throw ConfigError("descent: plane mode needs two coordinates");
  try {
    double value = objective(p);
    if (!std::isfinite(value)) throw NumericalError("non-finite loss");
    trace.points.push_back(p);
    trace.losses.push_back(value);
    double step = 1.0;
    for (int k = 0; k < config.iterations; ++k) {
      const double scale = config.schedule == StepSchedule::Geometric ? step : config.step;
      const std::vector<double> grad = gradient_fd(objective, p, config.fd_step);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * grad[i];
      if (config.plane_restriction) p[1] = std::abs(p[1]);
      value = objective(p);
      if (!std::isfinite(value)) throw NumericalError("non-finite loss");
      trace.points.push_back(p);
      trace.losses.push_back(value);
      step *= config.step;
    }
    trace.completed = true;
  } catch (const Error& e) {
    trace.failure = e.what();
  }
  return trace;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

MonteCarloReport monte_carlo(const ForwardModel& model, const DefectParams& truth,
                             const std::vector<std::vector<double>>& starts, const MonteCarloConfig& config) {
  if (config.levels.empty()) throw ConfigError("monte_carlo: no noise levels");
  if (starts.empty()) throw ConfigError("monte_carlo: no starting points");
  if (config.draws < 1) throw ConfigError("monte_carlo: draws must be >= 1");
  config.descent.validate();
  const DefectParameterization param{config.descent.plane_restriction, truth.radius};
  const std::vector<double> truth_p = param.coordinates(truth);
  const MeasuredSpectrum clean = model.resonances(truth);

  const std::size_t per_level = static_cast<std::size_t>(config.draws) * starts.size();
  MonteCarloReport report;
  report.runs.resize(config.levels.size() * per_level);

  // Each task is one (level, draw): the noisy spectrum depends on (seed, draw) only.
  const std::size_t tasks = config.levels.size() * static_cast<std::size_t>(config.draws);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t level = t / static_cast<std::size_t>(config.draws);
      const int draw = static_cast<int>(t % static_cast<std::size_t>(config.draws));
      const double eps = config.levels[level];
      const MeasuredSpectrum measured = noisy_measurements(clean, NoiseModel{eps, config.draws, config.seed}, draw);
      const ObjectiveFunction objective = make_objective(model, param, measured, config.alpha);
      for (std::size_t s = 0; s < starts.size(); ++s) {
        MonteCarloRun& run = report.runs[level * per_level + static_cast<std::size_t>(draw) * starts.size() + s];
        run.epsilon = eps;
        run.draw = draw;
        run.start = static_cast<int>(s);
        const DescentTrace trace = steepest_descent(objective, starts[s], config.descent);
        run.failed = !trace.completed;
        run.failure = trace.failure;
        if (!trace.points.empty()) {
          run.final_point = trace.points.back();
          run.final_loss = trace.losses.back();
          double err = 0.0;
          for (std::size_t i = 0; i < truth_p.size(); ++i) err += std::pow(run.final_point[i] - truth_p[i], 2);
          run.error = std::sqrt(err);
        } else {
          run.final_point = starts[s];
          run.final_loss = std::numeric_limits<double>::quiet_NaN();
          run.error = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  };
  unsigned threads = config.threads > 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t level = 0; level < config.levels.size(); ++level) {
    MonteCarloSummary summary;
    summary.epsilon = config.levels[level];
    std::vector<double> errors;
    for (std::size_t i = 0; i < per_level; ++i) {
      const MonteCarloRun& run = report.runs[level * per_level + i];
      ++summary.runs;
      if (run.failed) {
        ++summary.failures;
      } else {
        errors.push_back(run.error);
      }
    }
    summary.median = quantile(errors, 0.5);
    summary.q25 = quantile(errors, 0.25);
    summary.q75 = quantile(errors, 0.75);
    report.summaries.push_back(summary);
  }
  return report;
}

}  // namespace capsense
