#include "capsense/bie.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "capsense/errors.hpp"

namespace capsense {

namespace {

constexpr double kMinRadius = 1e-8;
const double kSqrt4Pi = std::sqrt(4.0 * std::numbers::pi);

void check_bodies(std::span<const Sphere> bodies) {
  if (bodies.empty()) throw GeometryError("single layer: no bodies");
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    if (!(bodies[i].radius >= kMinRadius)) {
      throw GeometryError("single layer: radius of body " + std::to_string(i + 1) + " below 1e-8");
    }
    for (std::size_t j = i + 1; j < bodies.size(); ++j) {
      if (!(gap(bodies[i], bodies[j]) > 0.0)) {
        throw GeometryError("single layer: overlapping bodies " + std::to_string(i + 1) + " and " +
                            std::to_string(j + 1));
      }
    }
  }
}

}  // namespace

void DiscretizationConfig::validate() const {
  if (max_degree < 0) throw ConfigError("max_degree must be >= 0");
  if (quadrature_order != 0 && quadrature_order < max_degree + 1) {
    throw ConfigError("quadrature_order must be >= max_degree + 1");
  }
}

GalerkinOperator::GalerkinOperator(std::vector<Sphere> bodies, DiscretizationConfig config, Eigen::MatrixXd matrix)
    : bodies_(std::move(bodies)), config_(config), matrix_(std::move(matrix)) {}

Eigen::Index GalerkinOperator::offset(int body) const {
  if (body < 0 || body >= body_count()) throw ConfigError("body index out of range");
  return body * block_size();
}

Eigen::MatrixXd GalerkinOperator::gram() const { return Eigen::MatrixXd::Identity(size(), size()); }

SphereQuadrature::SphereQuadrature(const DiscretizationConfig& config) {
  config.validate();
  rule_ = sphere_rule(config.effective_quadrature());
  weighted_basis_ = rule_.weights.asDiagonal() * harmonic_table(rule_, config.max_degree);
}

Eigen::Matrix3Xd SphereQuadrature::points_on(const Sphere& body) const {
  return (body.radius * rule_.points).colwise() + body.center;
}

Eigen::MatrixXd SphereQuadrature::cross_block(const Sphere& row_body, const Sphere& col_body) const {
  if (!(gap(row_body, col_body) > 0.0)) throw GeometryError("cross_block: overlapping bodies");
  const Eigen::Matrix3Xd x = points_on(row_body);
  const Eigen::Matrix3Xd y = points_on(col_body);
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd kernel(p, y.cols());
  const double inv_4pi = 1.0 / (4.0 * std::numbers::pi);
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const Eigen::Vector3d yj = y.col(j);
    for (Eigen::Index i = 0; i < p; ++i) kernel(i, j) = inv_4pi / (x.col(i) - yj).norm();
  }
  // b = Y / R and dsigma = R^2 dOmega on each sphere.
  const double scale = row_body.radius * col_body.radius;
  return scale * (weighted_basis_.transpose() * (kernel * weighted_basis_));
}

Eigen::MatrixXd cross_block(const Sphere& row_body, const Sphere& col_body, const DiscretizationConfig& config) {
  return SphereQuadrature(config).cross_block(row_body, col_body);
}

GalerkinOperator assemble_single_layer(std::span<const Sphere> bodies, const DiscretizationConfig& config) {
  config.validate();
  check_bodies(bodies);
  const int nb = config.basis_size();
  const auto n_bodies = static_cast<Eigen::Index>(bodies.size());
  Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(n_bodies * nb, n_bodies * nb);

  for (Eigen::Index b = 0; b < n_bodies; ++b) {
    for (int q = 0; q < nb; ++q) {
      matrix(b * nb + q, b * nb + q) = bodies[b].radius / (2.0 * harmonic_degree(q) + 1.0);
    }
  }
  if (n_bodies > 1) {
    const SphereQuadrature quadrature(config);
    for (Eigen::Index a = 0; a < n_bodies; ++a) {
      for (Eigen::Index b = a + 1; b < n_bodies; ++b) {
        const Eigen::MatrixXd block = quadrature.cross_block(bodies[a], bodies[b]);
        matrix.block(a * nb, b * nb, nb, nb) = block;
        matrix.block(b * nb, a * nb, nb, nb) = block.transpose();
      }
    }
  }
  return GalerkinOperator(std::vector<Sphere>(bodies.begin(), bodies.end()), config, std::move(matrix));
}

DensityVector indicator_rhs(const GalerkinOperator& op, int body) {
  const Eigen::Index off = op.offset(body);
  DensityVector rhs = DensityVector::Zero(op.size());
  rhs[off] = kSqrt4Pi * op.bodies()[body].radius;
  return rhs;
}

Eigen::MatrixXd indicator_matrix(const GalerkinOperator& op) {
  Eigen::MatrixXd out(op.size(), op.body_count());
  for (int j = 0; j < op.body_count(); ++j) out.col(j) = indicator_rhs(op, j);
  return out;
}

double boundary_integral(const GalerkinOperator& op, const DensityVector& density, int body) {
  if (density.size() != op.size()) throw ConfigError("boundary_integral: density size mismatch");
  return kSqrt4Pi * op.bodies()[body].radius * density[op.offset(body)];
}

DensitySolver::DensitySolver(const Eigen::MatrixXd& matrix) : llt_(matrix) {
  if (llt_.info() != Eigen::Success) throw NumericalError("single layer matrix is not positive definite");
  const double rcond = llt_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxCondition)) {
    throw NumericalError("single layer matrix is ill-conditioned (condition estimate " + std::to_string(condition_) +
                         ")");
  }
}

DensityVector DensitySolver::solve(const DensityVector& rhs) const { return llt_.solve(rhs); }

Eigen::MatrixXd DensitySolver::solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }

Eigen::MatrixXd DensitySolver::inverse() const {
  return llt_.solve(Eigen::MatrixXd::Identity(llt_.rows(), llt_.cols()));
}

DensityVector solve_density(const GalerkinOperator& op, const DensityVector& rhs) {
  if (rhs.size() != op.size()) throw ConfigError("solve_density: rhs size mismatch");
  return DensitySolver(op.matrix()).solve(rhs);
}

Eigen::MatrixXd BlockPartition::assemble() const {
  const Eigen::Index md = s_d.rows();
  const Eigen::Index mo = s_omega.rows();
  Eigen::MatrixXd out(md + mo, md + mo);
  out << s_d, s_d_omega, s_omega_d, s_omega;
  return out;
}

BlockPartition block_partition(const GalerkinOperator& op, const ResonatorScene& scene) {
  if (!scene.defect) throw GeometryError("block_partition: scene has no defect");
  if (static_cast<std::size_t>(op.body_count()) != scene.body_count()) {
    throw ConfigError("block_partition: operator was not assembled on all N+1 bodies");
  }
  const Eigen::Index md = op.offset(op.body_count() - 1);
  const Eigen::Index mo = op.size() - md;
  const auto& a = op.matrix();
  return BlockPartition{a.topLeftCorner(md, md), a.topRightCorner(md, mo), a.bottomLeftCorner(mo, md),
                        a.bottomRightCorner(mo, mo)};
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& matrix) {
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) os << ',';
      os << matrix(i, j);
    }
    os << '\n';
  }
}

}  // namespace capsense
