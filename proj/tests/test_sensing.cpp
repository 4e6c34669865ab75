#include <doctest.h>

#include <cmath>
#include <random>

#include "capsense/errors.hpp"
#include "capsense/experiments.hpp"
#include "capsense/io.hpp"
#include "capsense/sensing.hpp"

using namespace capsense;

namespace {

const DiscretizationConfig kL4{4, 0};
const DefectParams kTruth{Vec3(3, 0, 0), 1e-4};

const ForwardModel& chain_model() {
  static const ForwardModel model(three_chain(), kL4);
  return model;
}

ObjectiveFunction chain_objective() {
  return make_objective(chain_model(), DefectParameterization{true, kTruth.radius}, chain_model().resonances(kTruth));
}

}  // namespace

TEST_SUITE("sensing") {

TEST_CASE("forward model") {
  const ForwardModel& m = chain_model();
  const MeasuredSpectrum a = m.resonances(kTruth);
  const MeasuredSpectrum b = m.resonances(kTruth);
  CHECK((a.values - b.values).norm() == 0.0);

  const MeasuredSpectrum tiny = m.resonances({Vec3(3, 0, 0), 1e-8});
  CHECK((tiny.values - m.unperturbed().values).norm() <= 1e-7);

  // Woodbury resonator block equals the top-left block of the direct assembly.
  const auto scene = three_chain().with_defect({Sphere{Vec3(2.7, 0.4, 0.0), 2e-2}, Material{}});
  const Eigen::MatrixXd direct = perturbed_capacitance_direct(scene, kL4).values.topLeftCorner(3, 3);
  CHECK((m.perturbed_capacitance({Vec3(2.7, 0.4, 0.0), 2e-2}) - direct).norm() <= 1e-10 * direct.norm());

  CHECK_THROWS_AS(m.resonances({Vec3(2.1, 0, 0), 1e-2}), GeometryError);
  CHECK_THROWS_AS(m.resonances({Vec3(3, 0, 0), 0.0}), GeometryError);
}

TEST_CASE("forward golden spectrum (L = 8)") {
  const ForwardModel m(three_chain(), DiscretizationConfig{8, 0});
  const MeasuredSpectrum s = m.resonances(kTruth);
  const double golden[3] = {4.1806727637920309, 5.7875324038944296, 6.7602095653318068};
  for (int i = 0; i < 3; ++i) CHECK(s.values[i].real() == doctest::Approx(golden[i]).epsilon(1e-12));
}

TEST_CASE("loss") {
  const ObjectiveFunction obj = chain_objective();
  const std::vector<double> truth{3.0, 0.0};
  CHECK(obj(truth) <= 1e-20);
  CHECK(obj(std::vector<double>{2.7, 0.3}) >= 0.0);

  const MeasuredSpectrum measured = chain_model().resonances(kTruth);
  const DefectParams other{Vec3(2.8, 0.2, 0), 1e-4};
  const MeasuredSpectrum model = chain_model().resonances(other);
  const double base = loss(chain_model(), other, measured);
  const std::vector<double> one{1, 1, 1}, two{2, 1, 1}, three{3, 1, 1};
  const double l1 = loss(chain_model(), other, measured, one);
  const double l2 = loss(chain_model(), other, measured, two);
  const double l3 = loss(chain_model(), other, measured, three);
  CHECK(l1 == base);
  CHECK(l2 - l1 == doctest::Approx(std::norm(measured.values[0] - model.values[0])).epsilon(1e-12));
  CHECK((l3 - l2) == doctest::Approx(l2 - l1).epsilon(1e-10));

  const std::vector<double> wrong{1, 1};
  CHECK_THROWS_AS(loss(chain_model(), other, measured, wrong), ConfigError);
  CHECK_THROWS_AS(obj(std::vector<double>{2.0, 0.0}), GeometryError);
}

TEST_CASE("near-zero-loss valley versus a generic point") {
  // Minimize over y on the line x = 2.875 (golden-section search): the minimum
  // lies on the valley of near-zero loss through the truth.
  const ObjectiveFunction obj = chain_objective();
  auto f = [&](double y) { return obj(std::vector<double>{2.875, y}); };
  double a = 0.0, b = 1.0;
  for (int i = 0; i < 80; ++i) {
    const double m1 = b - (b - a) * 0.6180339887, m2 = a + (b - a) * 0.6180339887;
    if (f(m1) < f(m2)) b = m2; else a = m1;
  }
  const double valley = f(a);
  const double generic = obj(std::vector<double>{2.5, 0.0});  // distance 0.5 from the truth
  INFO("valley " << valley << " at y = " << a << ", generic " << generic);
  CHECK(valley < 1e-10);
  CHECK(generic > 100.0 * valley);
}

TEST_CASE("branch matching") {
  Eigen::VectorXcd a(3), b(3);
  a << 1.0, 2.0, 3.0;
  b << 3.1, 0.9, 2.05;
  const auto perm = match_branches(a, b);
  CHECK(perm == std::vector<int>{1, 2, 0});
  const MeasuredSpectrum ma{a}, mb{b};
  CHECK(spectral_misfit(ma, mb) == doctest::Approx(0.01 + 0.0025 + 0.01));
}

TEST_CASE("noise") {
  const MeasuredSpectrum clean = chain_model().resonances(kTruth);
  CHECK((noisy_measurements(clean, NoiseModel{0.0, 1, 5}, 3).values - clean.values).norm() == 0.0);
  const NoiseModel noise{1e-3, 10, 42};
  for (int d = 0; d < 5; ++d) {
    const auto x = noisy_measurements(clean, noise, d);
    CHECK((x.values - noisy_measurements(clean, noise, d).values).norm() == 0.0);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(x.values[j] / clean.values[j] - 1.0) <= 1e-3 + 1e-15);
  }
  CHECK((noisy_measurements(clean, noise, 0).values - noisy_measurements(clean, noise, 1).values).norm() > 0.0);

  // Mean of eta over 1e4 draws (3 entries each) within 3 sigma of zero.
  const double eps = 1e-2;
  MeasuredSpectrum ones{Eigen::VectorXcd::Ones(3)};
  double sum = 0.0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) sum += (noisy_measurements(ones, NoiseModel{eps, draws, 9}, d).values.array() - 1.0).real().sum();
  const double mean = sum / (3.0 * draws);
  const double sigma = eps / std::sqrt(3.0 * 3.0 * draws);
  INFO("mean " << mean << " sigma " << sigma);
  CHECK(std::abs(mean) <= 3.0 * sigma);
  CHECK_THROWS_AS(noisy_measurements(clean, NoiseModel{-1.0, 1, 0}, 0), ConfigError);
}

TEST_CASE("finite-difference gradient") {
  const std::vector<double> p0{1.0, -2.0};
  const ObjectiveFunction quad = [&](std::span<const double> p) {
    return std::pow(p[0] - p0[0], 2) + 3.0 * std::pow(p[1] - p0[1], 2);
  };
  const std::vector<double> p{0.3, 0.7};
  const auto g = gradient_fd(quad, p, 1e-3);
  CHECK(g[0] == doctest::Approx(2 * (p[0] - p0[0])).epsilon(1e-9));
  CHECK(g[1] == doctest::Approx(6 * (p[1] - p0[1])).epsilon(1e-9));
  const auto g0 = gradient_fd(quad, p0, 1e-3);
  CHECK(std::hypot(g0[0], g0[1]) <= 10 * 1e-6 * 6);

  // Cross-scheme consistency on the three-sphere scene.
  const ObjectiveFunction obj = chain_objective();
  const std::vector<double> q{2.8, 0.2};
  const double h = 1e-4;
  const auto central = gradient_fd(obj, q, h);
  const double f0 = obj(q);
  for (int i = 0; i < 2; ++i) {
    std::vector<double> s = q;
    s[static_cast<std::size_t>(i)] += h;
    const double forward = (obj(s) - f0) / h;
    const double scale = std::abs(central[static_cast<std::size_t>(i)]);
    INFO("coordinate " << i << " central " << central[static_cast<std::size_t>(i)] << " forward " << forward);
    CHECK(std::abs(forward - central[static_cast<std::size_t>(i)]) <= 1e-2 * scale + 1e-15);
  }

  // A probe that leaves the admissible set shrinks h once.
  const ObjectiveFunction wall = [](std::span<const double> p) {
    if (p[0] > 1.00045) throw GeometryError("wall");
    return p[0] * p[0];
  };
  const std::vector<double> at{1.0};
  CHECK(gradient_fd(wall, at, 1e-3)[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(gradient_fd(wall, std::vector<double>{1.0004}, 1e-3), GeometryError);
  CHECK_THROWS_AS(gradient_fd(quad, p, 0.0), ConfigError);
}

TEST_CASE("steepest descent") {
  const ObjectiveFunction obj = chain_objective();
  DescentConfig cfg;
  const std::vector<double> truth{3.0, 0.0};
  const DescentTrace at_truth = steepest_descent(obj, truth, cfg);
  REQUIRE(at_truth.completed);
  CHECK(at_truth.points.size() == 21);
  CHECK(at_truth.losses.size() == 21);
  for (const auto& p : at_truth.points) CHECK(std::hypot(p[0] - 3.0, p[1]) <= 1e-6);

  const ObjectiveFunction constant = [](std::span<const double>) { return 1.0; };
  const std::vector<double> s{2.7, 0.4};
  const DescentTrace flat = steepest_descent(constant, s, cfg);
  for (const auto& p : flat.points) CHECK(p == s);

  // Geometric versus constant schedule on a quadratic.
  const ObjectiveFunction quad = [](std::span<const double> p) { return 0.1 * (p[0] * p[0] + p[1] * p[1]); };
  DescentConfig constant_cfg = cfg;
  constant_cfg.schedule = StepSchedule::Constant;
  const std::vector<double> start{1.0, 1.0};
  const auto geo = steepest_descent(quad, start, cfg);
  const auto con = steepest_descent(quad, start, constant_cfg);
  CHECK(geo.points[1][0] == doctest::Approx(0.8));  // first step uses lambda^0 = 1
  CHECK(con.points[1][0] == doctest::Approx(1.0 - 0.9 * 0.2));
  CHECK(geo.points[2][0] == doctest::Approx(0.8 - 0.9 * 0.16));

  // Reflection into y >= 0.
  const ObjectiveFunction pull = [](std::span<const double> p) { return p[1]; };
  const auto refl = steepest_descent(pull, std::vector<double>{0.0, 0.5}, cfg);
  CHECK(refl.points[1][1] == doctest::Approx(0.5));

  DescentConfig bad = cfg;
  bad.step = 1.5;
  CHECK_THROWS_AS(steepest_descent(obj, truth, bad), ConfigError);

  // Failures end the run with a partial trace.
  const ObjectiveFunction breaks = [](std::span<const double> p) {
    if (p[0] < 0.5) throw GeometryError("inside");
    return p[0];
  };
  const auto partial = steepest_descent(breaks, std::vector<double>{1.0, 0.0}, cfg);
  CHECK_FALSE(partial.completed);
  CHECK_FALSE(partial.failure.empty());
  CHECK(partial.points.size() < 21);
}

TEST_CASE("descent protocol: final loss does not exceed the initial loss on >= 90% of starts") {
  for (const char* name : {"three_chain_r1e-4.json", "sensing_chain.json"}) {
    const ResonatorScene scene = read_scene(std::string(CAPSENSE_SCENE_DIR) + "/" + name);
    const ForwardModel model(scene.without_defect(), kL4);
    const DefectParams truth{scene.defect->sphere.center, scene.defect->sphere.radius};
    const ObjectiveFunction obj =
        make_objective(model, DefectParameterization{true, truth.radius}, model.resonances(truth));
    int ok = 0, total = 0;
    for (double x : linspace(2.5, 3.5, 5)) {
      for (double y : linspace(0.0, 1.0, 3)) {
        const auto t = steepest_descent(obj, std::vector<double>{x, y}, DescentConfig{});
        ++total;
        if (t.completed && t.losses.back() <= t.losses.front()) ++ok;
      }
    }
    INFO(name << ": " << ok << "/" << total);
    CHECK(ok >= 0.9 * total);
  }
}

TEST_CASE("Monte Carlo") {
  const ResonatorScene scene = read_scene(std::string(CAPSENSE_SCENE_DIR) + "/sensing_chain.json");
  const ForwardModel model(scene.without_defect(), DiscretizationConfig{2, 0});
  const DefectParams truth{Vec3(3, 0, 0), scene.defect->sphere.radius};
  const std::vector<std::vector<double>> starts{{3.0, 0.0}, {2.9, 0.2}};
  MonteCarloConfig cfg;
  cfg.draws = 6;
  cfg.seed = 11;
  cfg.descent.iterations = 5;

  SUBCASE("zero noise: every draw equals the noiseless run") {
    cfg.levels = {0.0};
    const auto rep = monte_carlo(model, truth, starts, cfg);
    REQUIRE(rep.runs.size() == 12);
    const ObjectiveFunction obj =
        make_objective(model, DefectParameterization{true, truth.radius}, model.resonances(truth));
    for (const auto& run : rep.runs) {
      const auto t = steepest_descent(obj, starts[static_cast<std::size_t>(run.start)], cfg.descent);
      CHECK(run.final_point == t.points.back());
    }
  }
  SUBCASE("results do not depend on the thread count") {
    cfg.levels = {1e-4, 1e-3};
    cfg.threads = 1;
    const auto serial = monte_carlo(model, truth, starts, cfg);
    cfg.threads = 4;
    const auto parallel = monte_carlo(model, truth, starts, cfg);
    REQUIRE(serial.runs.size() == parallel.runs.size());
    for (std::size_t i = 0; i < serial.runs.size(); ++i) {
      CHECK(serial.runs[i].final_point == parallel.runs[i].final_point);
      CHECK(serial.runs[i].draw == parallel.runs[i].draw);
    }
    for (std::size_t l = 0; l < 2; ++l) CHECK(serial.summaries[l].median == parallel.summaries[l].median);
  }
  SUBCASE("median error is nondecreasing in the noise level (one inversion allowed)") {
    cfg.levels = {0.0, 1e-5, 1e-4, 1e-3};
    cfg.draws = 20;
    const auto rep = monte_carlo(model, truth, {{3.0, 0.0}}, cfg);
    int inversions = 0;
    for (std::size_t l = 1; l < rep.summaries.size(); ++l) {
      INFO("level " << rep.summaries[l].epsilon << " median " << rep.summaries[l].median);
      if (rep.summaries[l].median < rep.summaries[l - 1].median) ++inversions;
    }
    CHECK(inversions <= 1);
  }
  SUBCASE("failed draws are recorded, not fatal") {
    cfg.levels = {1e-3};
    cfg.draws = 2;
    const auto rep = monte_carlo(model, truth, {{2.3, 0.0}}, cfg);  // start overlaps resonator 3
    REQUIRE(rep.runs.size() == 2);
    for (const auto& run : rep.runs) CHECK(run.failed);
    CHECK(rep.summaries[0].failures == 2);
  }
  cfg.levels = {};
  CHECK_THROWS_AS(monte_carlo(model, truth, starts, cfg), ConfigError);
}

TEST_CASE("quantile") {
  CHECK(quantile({3, 1, 2, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({3, 1, 2, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(std::isnan(quantile({}, 0.5)));
}

}  // TEST_SUITE
