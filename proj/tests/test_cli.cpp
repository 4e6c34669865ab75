#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "capsense/capacitance.hpp"
#include "capsense/io.hpp"

using namespace capsense;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CAPSENSE_CLI_PATH;
const std::string kScenes = CAPSENSE_SCENE_DIR;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("capsense_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stdout/stderr captured to `log`; returns the exit status.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = kCli + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("capmat writes labeled matrices that round-trip") {
  const fs::path out = fresh_dir("capmat");
  const std::string scene = kScenes + "/three_chain.json";
  REQUIRE(run("capmat --scene " + scene + " --out " + out.string() + " --degree 4 --dump-operator", out / "log") == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "operator.csv"));
  const Eigen::MatrixXd c = read_labeled_matrix(out / "capacitance.csv");
  const Eigen::MatrixXd ct = read_labeled_matrix(out / "perturbed_capacitance.csv");
  CHECK(c.rows() == 3);
  CHECK(ct.rows() == 4);
  const DiscretizationConfig cfg{4, 0};
  const ResonatorScene s = read_scene(scene);
  CHECK(c == capacitance_matrix(s, cfg).values);
  CHECK(ct == perturbed_capacitance_direct(s, cfg).values);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["subcommand"] == "capmat");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["degree"] == 4);
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("scene"));
}

TEST_CASE("exit codes") {
  const fs::path out = fresh_dir("exit");
  CHECK(run("capmat --scene " + (out / "nope.json").string() + " --out " + out.string(), out / "log") == 2);
  CHECK(slurp(out / "log").find("nope.json") != std::string::npos);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(run("frobnicate", out / "log2") == 2);
  CHECK(run("sweep --scene " + kScenes + "/three_chain.json --out " + out.string() + " --radii ''", out / "log3") == 2);
  CHECK(run("--help", out / "log4") == 0);
}

TEST_CASE("spectrum and expansion outputs") {
  const fs::path out = fresh_dir("spectrum");
  REQUIRE(run("spectrum --scene " + kScenes + "/three_chain.json --out " + out.string() + " --degree 3", out / "log") == 0);
  const CsvTable t = read_csv(out / "spectrum.csv");
  CHECK(t.rows.size() == 3);
  REQUIRE(run("expand --scene " + kScenes + "/three_chain.json --out " + out.string() +
                  " --degree 3 --order 4 --report-truncation 3",
              out / "log2") == 0);
  CHECK(read_csv(out / "truncation.csv").rows.size() == 3);
  CHECK(read_labeled_matrix(out / "expansion.csv").rows() == 4);
}

TEST_CASE("seeded sense runs are bit-identical and reproducible from the manifest") {
  const fs::path a = fresh_dir("sense_a"), b = fresh_dir("sense_b");
  const std::string args = "sense --scene " + kScenes + "/sensing_chain.json --degree 2 --seed 5 --noise 0,1e-3 "
                           "--draws 3 --iterations 3 --grid 2.9:3.1:2,0:0.2:2 --threads 2 --out ";
  REQUIRE(run(args + a.string(), a / "log") == 0);
  REQUIRE(run(args + b.string(), b / "log") == 0);
  for (const char* f : {"draws.csv", "traces.csv", "summary.json"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  // Rerun from the manifest's argv.
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  std::string argv;
  for (std::size_t i = 1; i < manifest["argv"].size(); ++i) {
    std::string arg = manifest["argv"][i].get<std::string>();
    if (arg == a.string()) arg = (a / "rerun").string();
    argv += " '" + arg + "'";
  }
  fs::create_directories(a / "rerun");
  REQUIRE(run(argv, a / "log_rerun") == 0);
  CHECK(slurp(a / "draws.csv") == slurp(a / "rerun" / "draws.csv"));
}

}  // TEST_SUITE
