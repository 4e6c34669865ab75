#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace capsense {

using Vec3 = Eigen::Vector3d;
using Complex = std::complex<double>;

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;

  double area() const;
  double volume() const;
};

/// High-contrast material of one inclusion. Complex values encode gain/loss.
struct Material {
  Complex delta{1.0, 0.0};
  Complex speed{1.0, 0.0};
};

struct Body {
  Sphere sphere;
  Material material;
};

/// Ordered resonators D_1..D_N plus an optional defect, which always carries
/// index N+1 in every matrix built from the scene.
struct ResonatorScene {
  std::vector<Body> resonators;
  std::optional<Body> defect;

  std::size_t resonator_count() const { return resonators.size(); }
  std::size_t body_count() const { return resonators.size() + (defect ? 1 : 0); }

  /// Spheres in capacitance index order (defect last when present).
  std::vector<Sphere> spheres() const;
  /// Materials in capacitance index order (defect last when present).
  std::vector<Material> materials() const;

  ResonatorScene without_defect() const;
  ResonatorScene with_defect(const Body& body) const;
};

struct GeometryOptions {
  double min_separation = 1e-3;   // c_d
  double regime_threshold = 0.5;  // ratio below which the scene is "small"
};

struct RegimeReport {
  double distance_d = 0.0;
  double ratio = 0.0;
  bool in_regime = false;
};

struct Violation {
  std::string kind;  // "radius", "overlap", "separation", "material"
  std::string detail;
};

/// min_i (|c_defect - c_i| - r_defect - r_i). Throws GeometryError when there
/// is no defect or the defect touches/overlaps a resonator.
double separation_distance(const ResonatorScene& scene);

/// |dOmega|^{1/2} / d with |dOmega| = 4 pi r^2.
RegimeReport regime_ratio(const ResonatorScene& scene, const GeometryOptions& options = {});

/// Empty iff every scene invariant holds. Never throws.
std::vector<Violation> validate_scene(const ResonatorScene& scene,
                                      const GeometryOptions& options = {});

/// Throws GeometryError with the first violation, if any.
void require_valid(const ResonatorScene& scene, const GeometryOptions& options = {});

/// Gap between two spheres (negative when they overlap).
double gap(const Sphere& a, const Sphere& b);

/// Chain of `count` equal spheres along the x axis, centers (j*spacing, 0, 0).
ResonatorScene make_chain(int count, double radius, double spacing, const Material& material = {});

/// Three spheres of radius 1/3 at (0,0,0), (1,0,0), (2,0,0).
ResonatorScene three_chain(const Material& material = {});

}  // namespace capsense
