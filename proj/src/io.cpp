#include "capsense/io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "capsense/errors.hpp"

namespace capsense {

namespace {

using nlohmann::json;

json body_to_json(const Body& b) {
  return json{{"center", {b.sphere.center.x(), b.sphere.center.y(), b.sphere.center.z()}},
              {"radius", b.sphere.radius},
              {"delta", complex_to_json(b.material.delta)},
              {"speed", complex_to_json(b.material.speed)}};
}

Body body_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw IoError(where + ": expected an object");
  if (!j.contains("center") || !j["center"].is_array() || j["center"].size() != 3) {
    throw IoError(where + ": \"center\" must be an array of three numbers");
  }
  if (!j.contains("radius") || !j["radius"].is_number()) throw IoError(where + ": \"radius\" must be a number");
  Body b;
  for (int k = 0; k < 3; ++k) {
    if (!j["center"][k].is_number()) throw IoError(where + ": \"center\" must be an array of three numbers");
    b.sphere.center[k] = j["center"][k].get<double>();
  }
  b.sphere.radius = j["radius"].get<double>();
  if (j.contains("delta")) b.material.delta = complex_from_json(j["delta"]);
  if (j.contains("speed")) b.material.speed = complex_from_json(j["speed"]);
  return b;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& where) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw IoError(where + ": not a number: '" + cell + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

}  // namespace

json complex_to_json(std::complex<double> z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

std::complex<double> complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_object() && j.contains("re") && j["re"].is_number()) {
    const double im = j.contains("im") && j["im"].is_number() ? j["im"].get<double>() : 0.0;
    return {j["re"].get<double>(), im};
  }
  throw IoError("complex value must be a number or {\"re\": .., \"im\": ..}");
}

json scene_to_json(const ResonatorScene& scene) {
  json j;
  j["resonators"] = json::array();
  for (const auto& b : scene.resonators) j["resonators"].push_back(body_to_json(b));
  j["defect"] = scene.defect ? body_to_json(*scene.defect) : json(nullptr);
  return j;
}

ResonatorScene scene_from_json(const json& j) {
  if (!j.is_object() || !j.contains("resonators") || !j["resonators"].is_array()) {
    throw IoError("scene: missing \"resonators\" array");
  }
  ResonatorScene scene;
  for (std::size_t i = 0; i < j["resonators"].size(); ++i) {
    scene.resonators.push_back(body_from_json(j["resonators"][i], "resonator " + std::to_string(i + 1)));
  }
  if (j.contains("defect") && !j["defect"].is_null()) scene.defect = body_from_json(j["defect"], "defect");
  return scene;
}

ResonatorScene read_scene(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open scene file " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw IoError("scene file " + path.string() + ": " + e.what());
  }
  try {
    return scene_from_json(j);
  } catch (const IoError& e) {
    throw IoError("scene file " + path.string() + ": " + e.what());
  }
}

void write_scene(const std::filesystem::path& path, const ResonatorScene& scene) {
  write_json(path, scene_to_json(scene));
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("error writing " + path.string());
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  auto os = open_out(path);
  for (std::size_t c = 0; c < table.header.size(); ++c) os << (c ? "," : "") << table.header[c];
  os << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw ConfigError("write_csv: row width differs from header");
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
  if (!os) throw IoError("error writing " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + ": empty file");
  table.header = split(line, ',');
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != table.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
    }
    std::vector<double> row;
    for (const auto& cell : cells) row.push_back(parse_number(cell, path.string() + ":" + std::to_string(lineno)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<std::string> body_labels(std::size_t resonators, bool with_defect) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < resonators; ++i) labels.push_back("D" + std::to_string(i + 1));
  if (with_defect) labels.emplace_back("Omega");
  return labels;
}

void write_labeled_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix,
                          const std::vector<std::string>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != matrix.rows() || matrix.rows() != matrix.cols()) {
    throw ConfigError("write_labeled_matrix: labels must match a square matrix");
  }
  auto os = open_out(path);
  os << "body";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    os << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < matrix.cols(); ++k) os << ',' << format_number(matrix(i, k));
    os << '\n';
  }
  if (!os) throw IoError("error writing " + path.string());
}

Eigen::MatrixXd read_labeled_matrix(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + ": empty file");
  const auto n = static_cast<Eigen::Index>(split(line, ',').size()) - 1;
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw IoError(path.string() + ": too few rows");
    const auto cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != n + 1) throw IoError(path.string() + ": wrong number of columns");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = parse_number(cells[static_cast<std::size_t>(k + 1)], path.string());
  }
  return m;
}

}  // namespace capsense
