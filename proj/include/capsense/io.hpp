#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "capsense/geometry.hpp"

namespace capsense {

inline constexpr const char* kVersion = "0.1.0";

/// Scene files:
///   {"resonators": [{"center": [x, y, z], "radius": R,
///                    "delta": {"re": .., "im": ..}, "speed": {"re": .., "im": ..}}, ...],
///    "defect": {...} | null}
/// "delta" and "speed" are optional (default 1); a plain number is accepted as a real value.
nlohmann::json scene_to_json(const ResonatorScene& scene);
ResonatorScene scene_from_json(const nlohmann::json& j);

/// Throws IoError (unreadable file, malformed JSON or schema) naming the path.
ResonatorScene read_scene(const std::filesystem::path& path);
void write_scene(const std::filesystem::path& path, const ResonatorScene& scene);

nlohmann::json complex_to_json(std::complex<double> z);
std::complex<double> complex_from_json(const nlohmann::json& j);

/// Plain rectangular CSV with a header row; numbers printed with 17 significant digits.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Matrix with a label column and header, e.g. "body,D1,D2,D3,Omega".
void write_labeled_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix,
                          const std::vector<std::string>& labels);
Eigen::MatrixXd read_labeled_matrix(const std::filesystem::path& path);

/// "D1".."DN" plus "Omega" when `with_defect`.
std::vector<std::string> body_labels(std::size_t resonators, bool with_defect);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace capsense
