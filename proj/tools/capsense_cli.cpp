// Command-line driver: capmat, spectrum, expand, sweep, loss-map, sense.
// Exit status: 0 success, 1 numerical failure, 2 usage or I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "capsense/capacitance.hpp"
#include "capsense/errors.hpp"
#include "capsense/expansion.hpp"
#include "capsense/experiments.hpp"
#include "capsense/io.hpp"
#include "capsense/sensing.hpp"
#include "capsense/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace capsense;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string scene_path;
  std::string out_dir = ".";
  int degree = 6;
  int quadrature = 0;
  std::uint64_t seed = 0;
};

struct GridSpec {
  double x0, x1;
  int nx;
  double y0, y1;
  int ny;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": not a number: '" + item + "'");
    }
  }
  return out;
}

// "x0:x1:nx,y0:y1:ny"
GridSpec parse_grid(const std::string& text) {
  GridSpec g{};
  char c1, c2, c3, c4, c5;
  std::istringstream is(text);
  if (!(is >> g.x0 >> c1 >> g.x1 >> c2 >> g.nx >> c3 >> g.y0 >> c4 >> g.y1 >> c5 >> g.ny) || c1 != ':' ||
      c2 != ':' || c3 != ',' || c4 != ':' || c5 != ':' || g.nx < 1 || g.ny < 1 || !(is >> std::ws).eof()) {
    throw ConfigError("--grid must look like x0:x1:nx,y0:y1:ny with nx, ny >= 1, got '" + text + "'");
  }
  return g;
}

DiscretizationConfig discretization(const Common& c) {
  DiscretizationConfig cfg{c.degree, c.quadrature};
  cfg.validate();
  return cfg;
}

ResonatorScene load_scene(const Common& c) {
  if (c.scene_path.empty()) throw ConfigError("--scene is required");
  ResonatorScene scene = read_scene(c.scene_path);
  require_valid(scene);
  return scene;
}

json eigen_to_json(const Eigen::VectorXcd& v) {
  json a = json::array();
  for (const auto& z : v) a.push_back(complex_to_json(z));
  return a;
}

/// Collects output files and options and writes manifest.json on exit.
class Run {
 public:
  Run(std::string subcommand, const Common& common, std::vector<std::string> argv)
      : subcommand_(std::move(subcommand)), common_(common), argv_(std::move(argv)) {}

  fs::path out(const std::string& name) {
    outputs_.push_back(name);
    return fs::path(common_.out_dir) / name;
  }
  json& options() { return options_; }
  void set_scene(const ResonatorScene& scene) { scene_ = scene_to_json(scene); }

  void write_manifest(const std::string& status, const std::string& message) const {
    json m;
    m["tool"] = "capsense";
    m["version"] = kVersion;
    m["subcommand"] = subcommand_;
    m["argv"] = argv_;
    m["scene_path"] = common_.scene_path;
    m["scene"] = scene_;
    m["degree"] = common_.degree;
    m["quadrature_order"] = common_.quadrature;
    m["seed"] = common_.seed;
    m["options"] = options_;
    m["outputs"] = outputs_;
    m["status"] = status;
    if (!message.empty()) m["message"] = message;
    write_json(fs::path(common_.out_dir) / "manifest.json", m);
  }

 private:
  std::string subcommand_;
  Common common_;
  std::vector<std::string> argv_;
  json options_ = json::object();
  json scene_ = nullptr;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------

struct CapmatOptions {
  bool dump_operator = false;
};

int run_capmat(Run& run, const Common& c, const CapmatOptions& o) {
  const ResonatorScene scene = load_scene(c);
  run.set_scene(scene);
  run.options()["dump_operator"] = o.dump_operator;
  const DiscretizationConfig cfg = discretization(c);
  const CapacitanceMatrix cap = capacitance_matrix(scene, cfg);
  write_labeled_matrix(run.out("capacitance.csv"), cap.values, body_labels(scene.resonator_count(), false));
  if (scene.defect) {
    const CapacitanceMatrix full = perturbed_capacitance_direct(scene, cfg);
    write_labeled_matrix(run.out("perturbed_capacitance.csv"), full.values,
                         body_labels(scene.resonator_count(), true));
  }
  if (o.dump_operator) {
    const GalerkinOperator op = assemble_single_layer(scene.spheres(), cfg);
    CsvTable t;
    for (Eigen::Index k = 0; k < op.size(); ++k) t.header.push_back("c" + std::to_string(k));
    for (Eigen::Index i = 0; i < op.size(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(op.size()));
      for (Eigen::Index k = 0; k < op.size(); ++k) row[static_cast<std::size_t>(k)] = op.matrix()(i, k);
      t.rows.push_back(std::move(row));
    }
    write_csv(run.out("operator.csv"), t);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SpectrumOptions {
  bool find_ep = false;
  double tau0 = 0.5;
};

CsvTable spectrum_table(const Spectrum& s) {
  CsvTable t{{"index", "lambda_re", "lambda_im", "omega_re", "omega_im", "condition"}, {}};
  for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j) {
    t.rows.push_back({static_cast<double>(j + 1), s.eigenvalues[j].real(), s.eigenvalues[j].imag(),
                      s.resonances[j].real(), s.resonances[j].imag(), s.conditions[j]});
  }
  return t;
}

int run_spectrum(Run& run, const Common& c, const SpectrumOptions& o) {
  const ResonatorScene scene = load_scene(c);
  run.set_scene(scene);
  run.options()["find_ep"] = o.find_ep;
  run.options()["tau0"] = o.tau0;
  const DiscretizationConfig cfg = discretization(c);
  const CapacitanceMatrix cap = capacitance_matrix(scene, cfg);
  const Spectrum s = resonances(weighted_capacitance(cap, weight_matrix(scene.without_defect())));
  write_csv(run.out("spectrum.csv"), spectrum_table(s));
  if (scene.defect) {
    const ForwardModel model(scene, cfg);
    const Eigen::MatrixXd block = model.perturbed_capacitance({scene.defect->sphere.center, scene.defect->sphere.radius});
    const Spectrum p = resonances(weighted_capacitance(block, model.weights()));
    write_csv(run.out("spectrum_perturbed.csv"), spectrum_table(p));
  }
  if (!o.find_ep) return kExitOk;

  const EpTuning tuning = tune_exceptional_point(scene, cfg, o.tau0);
  const EpSearchResult& r = tuning.search;
  json patch;
  patch["resonators"] = json::array();
  for (const auto& b : tuning.scene.resonators) patch["resonators"].push_back({{"delta", complex_to_json(b.material.delta)}});
  patch["parameters"] = {{"tau", r.parameters[0]}, {"kappa", r.parameters[1]}};
  patch["converged"] = r.converged;
  patch["relative_gap"] = r.relative_gap;
  patch["condition"] = r.condition;
  patch["eigenvalue"] = complex_to_json(r.eigenvalue);
  patch["pair"] = {r.first + 1, r.second + 1};
  patch["evaluations"] = r.evaluations;
  patch["message"] = r.message;
  write_json(run.out("ep_patch.json"), patch);
  write_scene(run.out("ep_scene.json"), tuning.scene);
  std::cout << r.message << " (relative gap " << r.relative_gap << ", condition " << r.condition << ")\n";
  if (!r.converged) throw NumericalError("exceptional-point search did not converge: " + r.message);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExpandOptions {
  int order = 12;
  int truncation = 0;
};

int run_expand(Run& run, const Common& c, const ExpandOptions& o) {
  const ResonatorScene scene = load_scene(c);
  run.set_scene(scene);
  run.options()["order"] = o.order;
  run.options()["report_truncation"] = o.truncation;
  if (!scene.defect) throw GeometryError("expand: the scene needs a defect");
  const DiscretizationConfig cfg = discretization(c);
  const GalerkinOperator op = assemble_single_layer(scene.spheres(), cfg);
  const BlockSingleLayer blocks(op, scene);
  const auto labels = body_labels(scene.resonator_count(), true);

  const CapacitanceMatrix direct = capacitance_from_operator(op);
  const ExpansionResult expansion = capacitance_expansion(blocks, o.order);
  write_labeled_matrix(run.out("direct.csv"), direct.values, labels);
  write_labeled_matrix(run.out("expansion.csv"), expansion.cumulative, labels);

  CsvTable conv{{"order", "relative_error"}, {}};
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(direct.values.rows(), direct.values.cols());
  for (std::size_t n = 0; n < expansion.terms.size(); ++n) {
    partial += expansion.terms[n];
    conv.rows.push_back({static_cast<double>(n), (partial - direct.values).norm() / direct.values.norm()});
  }
  write_csv(run.out("expansion_convergence.csv"), conv);

  const CorrectionMatrix correction = first_order_correction(blocks);
  write_labeled_matrix(run.out("correction_E.csv"), correction.e, labels);
  write_labeled_matrix(run.out("correction_zeroth.csv"), correction.zeroth, labels);

  json summary;
  summary["spectral_radius_T_D"] = reflection_spectral_radius(blocks);
  summary["regime_ratio"] = regime_ratio(scene).ratio;
  summary["separation_d"] = separation_distance(scene);
  summary["expansion_relative_error"] = conv.rows.back()[1];
  if (o.truncation > 0) {
    const TruncationReport report = truncation_report(blocks, scene, o.truncation);
    CsvTable t{{"K", "error"}, {}};
    for (const auto& row : report.rows) t.rows.push_back({static_cast<double>(row.k), row.error});
    write_csv(run.out("truncation.csv"), t);
    summary["truncation_fitted_ratio"] = report.fitted_ratio;
  }
  write_json(run.out("summary.json"), summary);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  std::string radii;
  bool ep = false;
  double tau0 = 0.5;
};

ResonatorScene maybe_tune(const ResonatorScene& scene, const DiscretizationConfig& cfg, bool ep, double tau0,
                          json& info) {
  if (!ep) return scene;
  const EpTuning tuning = tune_exceptional_point(scene, cfg, tau0);
  info["ep_parameters"] = {{"tau", tuning.search.parameters[0]}, {"kappa", tuning.search.parameters[1]}};
  info["ep_relative_gap"] = tuning.search.relative_gap;
  info["ep_condition"] = tuning.search.condition;
  if (!tuning.search.converged) throw NumericalError("--ep: exceptional-point search did not converge: " + tuning.search.message);
  return tuning.scene;
}

int run_sweep(Run& run, const Common& c, const SweepOptions& o) {
  const std::vector<double> radii = parse_list(o.radii, "--radii");
  if (radii.empty()) throw ConfigError("sweep: --radii must list at least one radius");
  ResonatorScene scene = load_scene(c);
  run.set_scene(scene);
  run.options()["radii"] = radii;
  run.options()["ep"] = o.ep;
  run.options()["tau0"] = o.tau0;
  const DiscretizationConfig cfg = discretization(c);
  json summary;
  scene = maybe_tune(scene, cfg, o.ep, o.tau0, summary);
  const SweepResult result = radius_sweep(scene, radii, cfg);
  const auto n = result.unperturbed.size();

  CsvTable t{{"radius"}, {}};
  for (Eigen::Index j = 1; j <= n; ++j) {
    const std::string s = std::to_string(j);
    for (const char* col : {"direct_re_", "direct_im_", "shift_", "predicted_shift_", "prediction_error_"}) {
      t.header.push_back(col + s);
    }
  }
  for (const auto& row : result.rows) {
    std::vector<double> r{row.radius};
    for (Eigen::Index j = 0; j < n; ++j) {
      r.insert(r.end(), {row.direct[j].real(), row.direct[j].imag(), row.direct_shift[j], row.predicted_shift[j],
                         row.prediction_error[j]});
    }
    t.rows.push_back(std::move(r));
  }
  write_csv(run.out("sweep.csv"), t);

  CsvTable slopes{{"branch", "ep_member", "shift_slope", "error_slope"}, {}};
  for (std::size_t j = 0; j < result.direct_slopes.size(); ++j) {
    const bool member =
        std::find(result.ep_members.begin(), result.ep_members.end(), static_cast<int>(j)) != result.ep_members.end();
    slopes.rows.push_back({static_cast<double>(j + 1), member ? 1.0 : 0.0, result.direct_slopes[j],
                           result.error_slopes[j]});
  }
  write_csv(run.out("sweep_slopes.csv"), slopes);
  summary["unperturbed"] = eigen_to_json(result.unperturbed);
  summary["shift_slopes"] = result.direct_slopes;
  summary["error_slopes"] = result.error_slopes;
  json members = json::array();
  for (int m : result.ep_members) members.push_back(m + 1);
  summary["ep_branches"] = members;
  write_json(run.out("summary.json"), summary);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SensingOptions {
  std::string grid;
  bool ep = false;
  double tau0 = 0.5;
  // sense only
  std::string noise = "0";
  int draws = 100;
  double lambda = 0.9;
  int iterations = 20;
  double fd_step = 1e-3;
  bool constant_step = false;
  unsigned threads = 0;
};

DefectParams truth_of(const ResonatorScene& scene) {
  if (!scene.defect) throw GeometryError("the scene's defect is the truth to be located; none given");
  return {scene.defect->sphere.center, scene.defect->sphere.radius};
}

int run_loss_map(Run& run, const Common& c, SensingOptions o) {
  if (o.grid.empty()) o.grid = "2.5:3.5:41,0:1:21";
  const GridSpec g = parse_grid(o.grid);
  ResonatorScene scene = load_scene(c);
  run.set_scene(scene);
  run.options()["grid"] = o.grid;
  run.options()["ep"] = o.ep;
  run.options()["tau0"] = o.tau0;
  const DiscretizationConfig cfg = discretization(c);
  json summary;
  scene = maybe_tune(scene, cfg, o.ep, o.tau0, summary);
  const DefectParams truth = truth_of(scene);
  const ForwardModel model(scene, cfg);
  const DefectParameterization param{true, truth.radius};
  const MeasuredSpectrum measured = model.resonances(truth);
  const ObjectiveFunction objective = make_objective(model, param, measured);
  const LossMap map = loss_map(objective, linspace(g.x0, g.x1, g.nx), linspace(g.y0, g.y1, g.ny));

  CsvTable t{{"x", "y", "loss", "log10_loss", "finite"}, {}};
  for (std::size_t iy = 0; iy < map.ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < map.xs.size(); ++ix) {
      const double v = map.values(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix));
      t.rows.push_back({map.xs[ix], map.ys[iy], v, std::log10(v), std::isfinite(v) ? 1.0 : 0.0});
    }
  }
  write_csv(run.out("loss_map.csv"), t);

  // Truth cell: grid node nearest to the truth in the plane.
  auto nearest = [](const std::vector<double>& v, double x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (std::abs(v[i] - x) < std::abs(v[best] - x)) best = i;
    }
    return static_cast<int>(best);
  };
  const int tx = nearest(map.xs, truth.center.x());
  const int ty = nearest(map.ys, std::abs(truth.center.y()));
  summary["truth"] = {truth.center.x(), truth.center.y(), truth.center.z()};
  summary["truth_cell"] = {tx, ty};
  summary["minimum_cell"] = {map.min_ix, map.min_iy};
  summary["minimum_at_truth_cell"] = map.min_ix == tx && map.min_iy == ty;
  if (map.min_ix >= 0) summary["minimum_location"] = {map.xs[map.min_ix], map.ys[map.min_iy]};
  summary["minimum_loss"] = map.min_value;
  summary["maximum_loss"] = map.max_value;
  summary["nonfinite_cells"] = map.nonfinite;
  write_json(run.out("summary.json"), summary);
  return kExitOk;
}

int run_sense(Run& run, const Common& c, SensingOptions o) {
  if (o.grid.empty()) o.grid = "2.5:3.5:5,0:1:3";
  const GridSpec g = parse_grid(o.grid);
  const std::vector<double> levels = parse_list(o.noise, "--noise");
  if (levels.empty()) throw ConfigError("--noise must list at least one level");
  ResonatorScene scene = load_scene(c);
  run.set_scene(scene);
  json& opt = run.options();
  opt["grid"] = o.grid;
  opt["noise"] = levels;
  opt["draws"] = o.draws;
  opt["lambda"] = o.lambda;
  opt["iterations"] = o.iterations;
  opt["fd_step"] = o.fd_step;
  opt["constant_step"] = o.constant_step;
  opt["ep"] = o.ep;
  opt["tau0"] = o.tau0;
  const DiscretizationConfig cfg = discretization(c);
  json summary;
  scene = maybe_tune(scene, cfg, o.ep, o.tau0, summary);
  const DefectParams truth = truth_of(scene);
  const ForwardModel model(scene, cfg);

  std::vector<std::vector<double>> starts;
  for (double y : linspace(g.y0, g.y1, g.ny)) {
    for (double x : linspace(g.x0, g.x1, g.nx)) starts.push_back({x, y});
  }
  MonteCarloConfig mc;
  mc.levels = levels;
  mc.draws = o.draws;
  mc.seed = c.seed;
  mc.threads = o.threads;
  mc.descent.step = o.lambda;
  mc.descent.iterations = o.iterations;
  mc.descent.fd_step = o.fd_step;
  mc.descent.schedule = o.constant_step ? StepSchedule::Constant : StepSchedule::Geometric;

  // Noiseless traces from every start.
  const DefectParameterization param{true, truth.radius};
  const ObjectiveFunction clean = make_objective(model, param, model.resonances(truth));
  CsvTable traces{{"start", "k", "x", "y", "loss"}, {}};
  int reduced = 0;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const DescentTrace trace = steepest_descent(clean, starts[s], mc.descent);
    for (std::size_t k = 0; k < trace.points.size(); ++k) {
      traces.rows.push_back({static_cast<double>(s), static_cast<double>(k), trace.points[k][0], trace.points[k][1],
                             trace.losses[k]});
    }
    if (trace.completed && trace.losses.back() <= 1e-3 * trace.losses.front()) ++reduced;
  }
  write_csv(run.out("traces.csv"), traces);

  const MonteCarloReport report = monte_carlo(model, truth, starts, mc);
  CsvTable draws{{"epsilon", "draw", "start", "x0", "y0", "x_final", "y_final", "final_loss", "error", "failed"}, {}};
  for (const auto& r : report.runs) {
    const auto& s0 = starts[static_cast<std::size_t>(r.start)];
    draws.rows.push_back({r.epsilon, static_cast<double>(r.draw), static_cast<double>(r.start), s0[0], s0[1],
                          r.final_point[0], r.final_point[1], r.final_loss, r.error, r.failed ? 1.0 : 0.0});
  }
  write_csv(run.out("draws.csv"), draws);

  summary["truth"] = {truth.center.x(), truth.center.y(), truth.center.z()};
  summary["radius"] = truth.radius;
  summary["starts"] = starts.size();
  summary["noiseless_runs_reduced_1e3"] = reduced;
  json levels_json = json::array();
  int failures = 0;
  for (const auto& s : report.summaries) {
    levels_json.push_back({{"epsilon", s.epsilon},
                           {"runs", s.runs},
                           {"failures", s.failures},
                           {"median_error", s.median},
                           {"q25_error", s.q25},
                           {"q75_error", s.q75}});
    failures += s.failures;
  }
  summary["levels"] = levels_json;
  summary["failed_runs"] = failures;
  write_json(run.out("summary.json"), summary);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capsense: capacitance-matrix models of subwavelength resonators with a small defect"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--scene", common.scene_path, "Scene JSON file");
  app.add_option("--out", common.out_dir, "Output directory (created if missing)");
  app.add_option("--degree", common.degree, "Spherical-harmonic degree L per sphere")->check(CLI::NonNegativeNumber);
  app.add_option("--quadrature", common.quadrature, "Gauss nodes in theta for cross blocks (0 = 2(L+1))");
  app.add_option("--seed", common.seed, "Random seed");

  CapmatOptions capmat_opt;
  auto* capmat = app.add_subcommand("capmat", "Capacitance matrices C (and perturbed C~) as CSV");
  capmat->add_flag("--dump-operator", capmat_opt.dump_operator, "Also write the Galerkin matrix");

  SpectrumOptions spectrum_opt;
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues, resonances and conditions of W C");
  spectrum->add_flag("--find-ep", spectrum_opt.find_ep, "Tune gain/loss to an exceptional point");
  spectrum->add_option("--tau0", spectrum_opt.tau0, "Initial gain/loss parameter for --find-ep");

  ExpandOptions expand_opt;
  auto* expand = app.add_subcommand("expand", "Multiple-scattering expansion of the perturbed capacitance");
  expand->add_option("--order", expand_opt.order, "Highest expansion order n_max")->check(CLI::NonNegativeNumber);
  expand->add_option("--report-truncation", expand_opt.truncation, "Truncation table of P_2K for K = 1..K_max")
      ->check(CLI::NonNegativeNumber);

  SweepOptions sweep_opt;
  auto* sweep = app.add_subcommand("sweep", "Resonance shifts versus defect radius");
  sweep->add_option("--radii", sweep_opt.radii, "Comma-separated defect radii")->required();
  sweep->add_flag("--ep", sweep_opt.ep, "Tune the scene to an exceptional point first");
  sweep->add_option("--tau0", sweep_opt.tau0, "Initial gain/loss parameter for --ep");

  SensingOptions map_opt;
  auto* lossmap = app.add_subcommand("loss-map", "Loss on a grid of defect centers in the z = 0 plane");
  lossmap->add_option("--grid", map_opt.grid, "x0:x1:nx,y0:y1:ny (default 2.5:3.5:41,0:1:21)");
  lossmap->add_flag("--ep", map_opt.ep, "Tune the scene to an exceptional point first");
  lossmap->add_option("--tau0", map_opt.tau0, "Initial gain/loss parameter for --ep");

  SensingOptions sense_opt;
  auto* sense = app.add_subcommand("sense", "Steepest-descent localization with noise Monte Carlo");
  sense->add_option("--grid", sense_opt.grid, "Start grid x0:x1:nx,y0:y1:ny (default 2.5:3.5:5,0:1:3)");
  sense->add_option("--noise", sense_opt.noise, "Comma-separated noise levels epsilon (default 0)");
  sense->add_option("--draws", sense_opt.draws, "Noise draws per level")->check(CLI::PositiveNumber);
  sense->add_option("--lambda", sense_opt.lambda, "Step parameter lambda in (0, 1]");
  sense->add_option("--iterations", sense_opt.iterations, "Descent iterations")->check(CLI::NonNegativeNumber);
  sense->add_option("--fd-step", sense_opt.fd_step, "Central-difference step h");
  sense->add_flag("--constant-step", sense_opt.constant_step, "Use constant step lambda instead of lambda^k");
  sense->add_option("--threads", sense_opt.threads, "Worker threads (0 = all cores)");
  sense->add_flag("--ep", sense_opt.ep, "Tune the scene to an exceptional point first");
  sense->add_option("--tau0", sense_opt.tau0, "Initial gain/loss parameter for --ep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Run run(name, common, std::vector<std::string>(argv, argv + argc));
  int status = kExitOk;
  std::string message;
  try {
    fs::create_directories(common.out_dir);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: cannot create output directory " << common.out_dir << ": " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    if (name == "capmat") status = run_capmat(run, common, capmat_opt);
    if (name == "spectrum") status = run_spectrum(run, common, spectrum_opt);
    if (name == "expand") status = run_expand(run, common, expand_opt);
    if (name == "sweep") status = run_sweep(run, common, sweep_opt);
    if (name == "loss-map") status = run_loss_map(run, common, map_opt);
    if (name == "sense") status = run_sense(run, common, sense_opt);
  } catch (const NumericalError& e) {
    status = kExitNumerical;
    message = e.what();
  } catch (const Error& e) {
    status = kExitUsage;
    message = e.what();
  } catch (const std::exception& e) {
    status = kExitNumerical;
    message = e.what();
  }
  if (!message.empty()) std::cerr << "error: " << message << '\n';
  try {
    run.write_manifest(status == kExitOk ? "ok" : "error", message);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (status == kExitOk) status = kExitUsage;
  }
  return status;
}
