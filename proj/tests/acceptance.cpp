// Acceptance checks, one per criterion id. Prints a single PASS/FAIL line
// (plus the measured quantities) and exits 0 on PASS, 1 on FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "capsense/capacitance.hpp"
#include "capsense/errors.hpp"
#include "capsense/expansion.hpp"
#include "capsense/experiments.hpp"
#include "capsense/io.hpp"
#include "capsense/sensing.hpp"
#include "capsense/spectral.hpp"

using namespace capsense;

namespace {

const std::string kScenes = CAPSENSE_SCENE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double spectral_norm(const Eigen::MatrixXd& m) { return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0); }

ResonatorScene defect_scene(double r, Vec3 center = Vec3(3, 0, 0)) {
  return three_chain().with_defect({Sphere{center, r}, Material{}});
}

Eigen::MatrixXd lead_matrix(const Eigen::MatrixXd& c) {
  Eigen::MatrixXd lead = Eigen::MatrixXd::Zero(c.rows() + 1, c.cols() + 1);
  lead.topLeftCorner(c.rows(), c.cols()) = c;
  return lead;
}

// 1. Single sphere capacitance 4 pi R.
Outcome analytic_capacitance() {
  double worst = 0.0;
  for (double R : {1.0 / 3.0, 1.0, 2.0}) {
    for (int L : {0, 2, 4, 6, 8}) {
      const double c = capacitance_matrix(make_chain(1, R, 1.0), DiscretizationConfig{L, 0})(0, 0);
      worst = std::max(worst, std::abs(c - 4 * std::numbers::pi * R) / (4 * std::numbers::pi * R));
    }
  }
  return {worst <= 1e-10, "max relative error " + fmt(worst) + " (R in {1/3,1,2}, L in {0..8})"};
}

// 2. Structure of the three-sphere chain and dilation covariance.
Outcome structure() {
  const DiscretizationConfig cfg{6, 0};
  const Eigen::MatrixXd c = capacitance_matrix(three_chain(), cfg).values;
  const double asym = (c - c.transpose()).norm() / c.norm();
  bool negative = true;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j && !(c(i, j) < 0.0)) negative = false;
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff();
  ResonatorScene big = three_chain();
  for (auto& b : big.resonators) {
    b.sphere.center *= 2.0;
    b.sphere.radius *= 2.0;
  }
  const Eigen::MatrixXd c2 = capacitance_matrix(big, cfg).values;
  const double dil = (c2 - 2.0 * c).cwiseAbs().maxCoeff() / (2.0 * c.cwiseAbs().maxCoeff());
  const bool pass = asym <= 1e-10 && negative && min_eig > 0.0 && dil <= 1e-8;
  return {pass, "asymmetry " + fmt(asym) + ", off-diagonals negative " + (negative ? "yes" : "no") +
                    ", min eigenvalue " + fmt(min_eig) + ", dilation error " + fmt(dil)};
}

// 3. Expansion at n_max = 12 versus direct assembly.
Outcome oracle_equivalence() {
  const DiscretizationConfig cfg{6, 0};
  const auto scene = defect_scene(1e-2);
  const GalerkinOperator op = assemble_single_layer(scene.spheres(), cfg);
  const ExpansionResult e = capacitance_expansion(BlockSingleLayer(op, scene), 12);
  const Eigen::MatrixXd direct = perturbed_capacitance_direct(scene, cfg).values;
  const double rel = (e.cumulative - direct).norm() / direct.norm();
  return {rel <= 1e-10, "relative difference " + fmt(rel)};
}

struct RateSample {
  double first = 0.0;       // |C~ - blockdiag(C, 0)|
  double second = 0.0;      // |C~ - blockdiag(C, 0) - E (with zeroth-order terms)|
  double first_dd = 0.0;    // resonator block of the first quantity
  double omega = 0.0;       // defect self-capacitance entry
};

RateSample rate_sample(const ResonatorScene& scene, const Eigen::MatrixXd& c, const DiscretizationConfig& cfg) {
  const GalerkinOperator op = assemble_single_layer(scene.spheres(), cfg);
  const CorrectionMatrix corr = first_order_correction(BlockSingleLayer(op, scene));
  const Eigen::MatrixXd direct = perturbed_capacitance_direct(scene, cfg).values;
  const Eigen::MatrixXd d1 = direct - lead_matrix(c);
  RateSample s;
  s.first = spectral_norm(d1);
  s.second = spectral_norm(d1 - corr.with_zeroth());
  s.first_dd = spectral_norm(d1.topLeftCorner(3, 3));
  s.omega = direct(3, 3);
  return s;
}

// 4. Rates of the first-order description in radius and in d.
Outcome correction_rates() {
  const DiscretizationConfig cfg{6, 0};
  const Eigen::MatrixXd c = capacitance_matrix(three_chain(), cfg).values;
  std::vector<double> radii{1e-3, 3e-3, 1e-2, 3e-2, 1e-1}, r1, r2;
  for (double r : radii) {
    const RateSample s = rate_sample(defect_scene(r), c, cfg);
    r1.push_back(s.first);
    r2.push_back(s.second);
  }
  const double rs1 = loglog_slope(radii, r1), rs2 = loglog_slope(radii, r2);

  const double r = 1e-2;
  std::vector<double> ds{1, 2, 4, 8}, d1, d2, ddd, om;
  for (double d : ds) {
    const RateSample s = rate_sample(defect_scene(r, Vec3(2.0 + 1.0 / 3.0 + r + d, 0, 0)), c, cfg);
    d1.push_back(s.first);
    d2.push_back(s.second);
    ddd.push_back(s.first_dd);
    om.push_back(s.omega);
  }
  const double ds1 = loglog_slope(ds, d1), ds2 = loglog_slope(ds, d2);
  const bool radius_ok = std::abs(rs1 - 1.0) <= 0.1 && std::abs(rs2 - 2.0) <= 0.2;
  const bool d_ok = std::abs(ds1 + 1.0) <= 0.15 && std::abs(ds2 + 2.0) <= 0.3;
  std::string detail = "radius slopes " + fmt(rs1) + " (1 +- 0.1), " + fmt(rs2) + " (2 +- 0.2) -> " +
                       (radius_ok ? "ok" : "off") + "; d slopes " + fmt(ds1) + " (-1 +- 0.15), " + fmt(ds2) +
                       " (-2 +- 0.3) -> " + (d_ok ? "ok" : "off");
  if (!d_ok) {
    detail += ". Diagnosis: the norm is dominated by the defect self-capacitance C~_(N+1,N+1) = " + fmt(om.front()) +
              ".." + fmt(om.back()) + " ~ 4 pi r, which does not depend on d; resonator-block slope in d is " +
              fmt(loglog_slope(ds, ddd)) + "; the E-corrected residual decays faster than the 1/d^2 bound";
  }
  return {radius_ok && d_ok, detail};
}

// 5. Geometric decay of the P_2K truncation error.
Outcome neumann_rate() {
  const DiscretizationConfig cfg{6, 0};
  const auto scene = defect_scene(1e-2);
  const GalerkinOperator op = assemble_single_layer(scene.spheres(), cfg);
  const BlockSingleLayer blocks(op, scene);
  const TruncationReport rep = truncation_report(blocks, scene, 6);
  bool monotone = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) monotone = monotone && rep.rows[k].error <= rep.rows[k - 1].error;
  const double factor = std::max(rep.fitted_ratio / rep.regime_ratio, rep.regime_ratio / rep.fitted_ratio);
  const bool geometric = monotone && rep.fitted_ratio > 0.0 && rep.fitted_ratio < 1.0;
  std::string detail = std::string("geometric decay ") + (geometric ? "yes" : "no") + ", fitted ratio " +
                       fmt(rep.fitted_ratio) + " vs |dOmega|^(1/2)/d = " + fmt(rep.regime_ratio) + " (factor " +
                       fmt(factor) + ", allowed 3)";
  if (factor > 3.0) {
    detail += ". Diagnosis: the fitted ratio equals the spectral radius of T_D (" +
              fmt(reflection_spectral_radius(blocks)) +
              "); the bound's constant is not 1 for this geometry, only its linear rate in r holds";
  }
  return {geometric && factor <= 3.0, detail};
}

// 6. Simple-eigenvalue formula error slope.
Outcome simple_formula() {
  const DiscretizationConfig cfg{6, 0};
  const SweepResult s = radius_sweep(defect_scene(1e-2), {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}, cfg);
  bool pass = s.ep_members.empty();
  std::string detail = "error slopes";
  for (double v : s.error_slopes) {
    detail += " " + fmt(v);
    pass = pass && std::abs(v - 2.0) <= 0.3;
  }
  return {pass, detail + " (2 +- 0.3)"};
}

// 7. Exceptional-point amplification.
Outcome exceptional_point() {
  const DiscretizationConfig cfg{6, 0};
  const EpTuning t = tune_exceptional_point(defect_scene(1e-2), cfg);
  if (!t.search.converged) return {false, "exceptional point not found: " + t.search.message};
  const SweepResult s = radius_sweep(t.scene, {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}, cfg);
  if (s.ep_members.size() != 2) return {false, "tuned scene has no coalesced pair"};
  bool pass = true;
  std::string detail = "tau " + fmt(t.search.parameters[0]) + ", gap " + fmt(t.search.relative_gap) + "; slopes:";
  double min_pair = std::numeric_limits<double>::infinity(), max_simple = 0.0;
  const auto& first = s.rows.front();
  for (std::size_t j = 0; j < s.direct_slopes.size(); ++j) {
    const bool in_pair = j == static_cast<std::size_t>(s.ep_members[0]) || j == static_cast<std::size_t>(s.ep_members[1]);
    detail += std::string(" ") + (in_pair ? "pair " : "simple ") + fmt(s.direct_slopes[j]);
    pass = pass && std::abs(s.direct_slopes[j] - (in_pair ? 0.5 : 1.0)) <= 0.15;
    const double shift = first.direct_shift[static_cast<Eigen::Index>(j)];
    if (in_pair) min_pair = std::min(min_pair, shift);
    else max_simple = std::max(max_simple, shift);
  }
  const double ratio = min_pair / max_simple;
  pass = pass && ratio >= 10.0;
  return {pass, detail + "; shift ratio at r = 1e-4: " + fmt(ratio) + " (>= 10)"};
}

// 8. Jordan toy exactness.
Outcome jordan_toy() {
  const Complex a(2.0, 0.0);
  Eigen::MatrixXcd m(2, 2);
  m << a, 1.0, 0.0, a;
  const JordanChain ch = jordan_chain(m, a, 2);
  double worst = 0.0;
  for (double eps : {1e-4, 1e-8}) {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(2, 2);
    p(1, 0) = eps;
    const PerturbationResult r = ep_perturbation(ch, p);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> exact(m + p);
    for (const Complex& l : r.eigenvalues) worst = std::max(worst, (exact.eigenvalues().array() - l).abs().minCoeff());
    worst = std::max(worst, std::abs(r.eigenvalues[0] - a - std::sqrt(eps)));
    worst = std::max(worst, std::abs(r.eigenvalues[1] - a + std::sqrt(eps)));
  }
  return {worst <= 1e-12, "max deviation " + fmt(worst)};
}

struct SensingSetup {
  ResonatorScene scene;
  std::unique_ptr<ForwardModel> model;
  DefectParams truth;
};

SensingSetup sensing_setup(const std::string& file, bool ep, const DiscretizationConfig& cfg) {
  SensingSetup s;
  s.scene = read_scene(kScenes + "/" + file);
  if (ep) {
    const EpTuning t = tune_exceptional_point(s.scene, cfg);
    if (!t.search.converged) throw NumericalError("exceptional point not found: " + t.search.message);
    s.scene = t.scene;
  }
  s.model = std::make_unique<ForwardModel>(s.scene.without_defect(), cfg);
  s.truth = {s.scene.defect->sphere.center, s.scene.defect->sphere.radius};
  return s;
}

// 9. Noiseless descent protocol and loss-map minimum.
Outcome noiseless_sensing() {
  const DiscretizationConfig cfg{4, 0};
  std::string detail;
  bool pass = true;
  for (const auto& [file, ep] : std::vector<std::pair<std::string, bool>>{{"sensing_chain.json", false},
                                                                         {"sensing_chain_ep.json", true}}) {
    const SensingSetup s = sensing_setup(file, ep, cfg);
    const ObjectiveFunction obj = make_objective(*s.model, DefectParameterization{true, s.truth.radius},
                                                 s.model->resonances(s.truth));
    int reduced = 0, total = 0;
    std::vector<double> ratios;
    for (double x : linspace(2.5, 3.5, 5)) {
      for (double y : linspace(0.0, 1.0, 3)) {
        const DescentTrace t = steepest_descent(obj, std::vector<double>{x, y}, DescentConfig{});
        ++total;
        if (!t.completed) continue;
        // A start on the truth has zero loss; it counts when the run stays at roundoff level.
        const bool at_minimum = t.losses.front() <= 1e-20;
        if (at_minimum ? t.losses.back() <= 1e-10 : t.losses.back() <= 1e-3 * t.losses.front()) ++reduced;
        if (!at_minimum) ratios.push_back(t.losses.back() / t.losses.front());
      }
    }
    const LossMap map = loss_map(obj, linspace(2.5, 3.5, 41), linspace(0.0, 1.0, 21));
    const bool at_truth = map.min_ix == 20 && map.min_iy == 0;
    const bool ok = reduced >= 0.9 * total && at_truth;
    if (!ep) pass = ok;  // the criterion is stated for the sensing scene; the EP variant is reported alongside
    detail += std::string(ep ? "; EP scene (informational): " : "sensing scene: ") + std::to_string(reduced) + "/" +
              std::to_string(total) + " starts reduced the loss by 1e3 (need >= 90%; median final/initial " +
              fmt(quantile(ratios, 0.5)) + "), loss-map minimum at truth " + (at_truth ? "yes" : "no");
  }
  // Landscape of the small defect (radius 1e-4) on the finer map grid.
  const SensingSetup small = sensing_setup("three_chain_r1e-4.json", false, cfg);
  const LossMap map = loss_map(make_objective(*small.model, DefectParameterization{true, small.truth.radius},
                                              small.model->resonances(small.truth)),
                               linspace(2.5, 3.5, 41), linspace(0.0, 1.0, 21));
  const bool small_ok = map.min_ix == 20 && map.min_iy == 0;
  pass = pass && small_ok;
  detail += std::string("; radius 1e-4 loss-map minimum at truth ") + (small_ok ? "yes" : "no");
  if (!pass) {
    detail += ". Diagnosis: most descents stop on the valley of low loss through the truth, whose floor is only "
              "10-100x below the starting losses; reaching 1e-3 requires travelling along the valley to the truth, "
              "which the decaying step lambda^k (step sum ~8.8) does not do";
  }
  return {pass, detail};
}

MonteCarloReport noisy_run(const SensingSetup& s, std::uint64_t seed) {
  MonteCarloConfig mc;
  mc.levels = {1e-4, 1e-3};
  mc.draws = 100;
  mc.seed = seed;
  return monte_carlo(*s.model, s.truth, {{3.0, 0.0}}, mc);
}

bool identical(const MonteCarloReport& a, const MonteCarloReport& b) {
  if (a.runs.size() != b.runs.size()) return false;
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    if (a.runs[i].final_point != b.runs[i].final_point) return false;
    if (std::memcmp(&a.runs[i].final_loss, &b.runs[i].final_loss, sizeof(double)) != 0) return false;
  }
  return true;
}

// 10. Noise robustness of the exceptional-point scene.
Outcome noisy_sensing() {
  const DiscretizationConfig cfg{4, 0};
  const SensingSetup plain = sensing_setup("sensing_chain.json", false, cfg);
  const SensingSetup ep = sensing_setup("sensing_chain_ep.json", true, cfg);
  const std::uint64_t seed = 2024;
  const MonteCarloReport rp = noisy_run(plain, seed), re = noisy_run(ep, seed);
  const bool repro = identical(rp, noisy_run(plain, seed)) && identical(re, noisy_run(ep, seed));
  bool pass = repro;
  std::string detail;
  for (std::size_t l = 0; l < rp.summaries.size(); ++l) {
    const double mp = rp.summaries[l].median, me = re.summaries[l].median;
    pass = pass && me < mp;
    detail += "eps " + fmt(rp.summaries[l].epsilon) + ": EP median " + fmt(me) + " vs non-EP " + fmt(mp) + " (failures " +
              std::to_string(re.summaries[l].failures) + "/" + std::to_string(rp.summaries[l].failures) + "); ";
  }
  return {pass, detail + "seeded rerun bit-identical " + (repro ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
      {1, {"analytic capacitance", analytic_capacitance}},
      {2, {"capacitance structure", structure}},
      {3, {"expansion vs direct oracle", oracle_equivalence}},
      {4, {"first-order correction rates", correction_rates}},
      {5, {"Neumann truncation rate", neumann_rate}},
      {6, {"simple-eigenvalue formula", simple_formula}},
      {7, {"exceptional-point amplification", exceptional_point}},
      {8, {"Jordan toy exactness", jordan_toy}},
      {9, {"noiseless sensing", noiseless_sensing}},
      {10, {"sensing under noise", noisy_sensing}},
  };
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (const auto& [id, _] : criteria) ids.push_back(id);

  bool all = true;
  for (int id : ids) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << it->second.first << "): " << o.detail
              << " [" << fmt(secs) << " s]" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
