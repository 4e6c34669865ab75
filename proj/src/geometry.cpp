#include "capsense/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "capsense/errors.hpp"

namespace capsense {

double Sphere::area() const { return 4.0 * std::numbers::pi * radius * radius; }

double Sphere::volume() const { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

std::vector<Sphere> ResonatorScene::spheres() const {
  std::vector<Sphere> out;
  out.reserve(body_count());
  for (const auto& body : resonators) out.push_back(body.sphere);
  if (defect) out.push_back(defect->sphere);
  return out;
}

std::vector<Material> ResonatorScene::materials() const {
  std::vector<Material> out;
  out.reserve(body_count());
  for (const auto& body : resonators) out.push_back(body.material);
  if (defect) out.push_back(defect->material);
  return out;
}

ResonatorScene ResonatorScene::without_defect() const {
  ResonatorScene out = *this;
  out.defect.reset();
  return out;
}

ResonatorScene ResonatorScene::with_defect(const Body& body) const {
  ResonatorScene out = *this;
  out.defect = body;
  return out;
}

double gap(const Sphere& a, const Sphere& b) {
  return (a.center - b.center).norm() - a.radius - b.radius;
}

double separation_distance(const ResonatorScene& scene) {
  if (!scene.defect) throw GeometryError("separation_distance: scene has no defect");
  if (scene.resonators.empty()) throw GeometryError("separation_distance: scene has no resonators");
  double d = std::numeric_limits<double>::infinity();
  for (const auto& body : scene.resonators) d = std::min(d, gap(scene.defect->sphere, body.sphere));
  if (!(d > 0.0)) throw GeometryError("separation_distance: overlapping bodies");
  return d;
}

RegimeReport regime_ratio(const ResonatorScene& scene, const GeometryOptions& options) {
  RegimeReport report;
  report.distance_d = separation_distance(scene);
  report.ratio = std::sqrt(scene.defect->sphere.area()) / report.distance_d;
  report.in_regime = report.ratio < options.regime_threshold;
  return report;
}

namespace {

std::string body_name(std::size_t index, std::size_t n_resonators) {
  if (index < n_resonators) return "resonator " + std::to_string(index + 1);
  return "defect";
}

}  // namespace

std::vector<Violation> validate_scene(const ResonatorScene& scene, const GeometryOptions& options) {
  std::vector<Violation> out;
  const auto spheres = scene.spheres();
  const auto materials = scene.materials();
  const std::size_t n = scene.resonator_count();

  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const auto& s = spheres[i];
    if (!(s.radius > 0.0) || !std::isfinite(s.radius)) {
      out.push_back({"radius", body_name(i, n) + " has non-positive radius " + std::to_string(s.radius)});
    }
    if (!s.center.allFinite()) {
      out.push_back({"center", body_name(i, n) + " has a non-finite center"});
    }
    if (!(materials[i].delta.real() > 0.0)) {
      out.push_back({"material", body_name(i, n) + " has Re(delta) <= 0"});
    }
  }

  for (std::size_t i = 0; i < spheres.size(); ++i) {
    for (std::size_t j = i + 1; j < spheres.size(); ++j) {
      if (!(spheres[i].radius > 0.0) || !(spheres[j].radius > 0.0)) continue;
      const double g = gap(spheres[i], spheres[j]);
      if (!(g > 0.0)) {
        std::ostringstream msg;
        msg << body_name(i, n) << " and " << body_name(j, n) << " overlap (gap " << g << ")";
        out.push_back({"overlap", msg.str()});
      } else if (j == n && g < options.min_separation) {
        std::ostringstream msg;
        msg << "defect is " << g << " from " << body_name(i, n) << ", below c_d = " << options.min_separation;
        out.push_back({"separation", msg.str()});
      }
    }
  }
  return out;
}

void require_valid(const ResonatorScene& scene, const GeometryOptions& options) {
  const auto violations = validate_scene(scene, options);
  if (!violations.empty()) throw GeometryError(violations.front().kind + ": " + violations.front().detail);
}

ResonatorScene make_chain(int count, double radius, double spacing, const Material& material) {
  ResonatorScene scene;
  for (int j = 0; j < count; ++j) {
    scene.resonators.push_back({Sphere{Vec3(j * spacing, 0.0, 0.0), radius}, material});
  }
  return scene;
}

ResonatorScene three_chain(const Material& material) { return make_chain(3, 1.0 / 3.0, 1.0, material); }

}  // namespace capsense
