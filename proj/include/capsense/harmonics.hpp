#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace capsense {

/// Number of real spherical harmonics of degree <= max_degree: (L+1)^2.
constexpr int harmonic_count(int max_degree) { return (max_degree + 1) * (max_degree + 1); }

/// Flat index of Y_n^m, m in [-n, n].
constexpr int harmonic_index(int n, int m) { return n * n + n + m; }

/// Degree n of the flat index.
int harmonic_degree(int index);

/// Real spherical harmonics, orthonormal on the unit sphere, evaluated at the
/// direction (cos_theta, phi). `out` must hold harmonic_count(max_degree) values.
/// m > 0 uses cos(m phi), m < 0 uses sin(|m| phi); no Condon-Shortley phase.
void real_harmonics(int max_degree, double cos_theta, double phi, std::span<double> out);

/// Tensor-product rule on the unit sphere: Gauss-Legendre in cos(theta) with
/// `order` nodes times a 2*order point trapezoid rule in phi.
struct SphereRule {
  Eigen::Matrix3Xd points;  // unit vectors
  Eigen::VectorXd weights;  // sum = 4 pi
  Eigen::VectorXd cos_theta;
  Eigen::VectorXd phi;
};

SphereRule sphere_rule(int order);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Matrix of harmonic values at the rule points: rows = points, cols = harmonics.
Eigen::MatrixXd harmonic_table(const SphereRule& rule, int max_degree);

}  // namespace capsense
