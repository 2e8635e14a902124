#include "llloc/features.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace llloc {

namespace {

struct PrincipalAxes {
  Point3 centroid;
  Eigen::Vector3d values;   // ascending
  Eigen::Matrix3d vectors;  // columns match values
};

PrincipalAxes principal_axes(std::span<const Point3> pts) {
  Point3 c = Point3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Matrix3 cov = Matrix3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - c;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Matrix3> es;
  es.computeDirect(cov);
  return {c, es.eigenvalues(), es.eigenvectors()};
}

Vec3 canonical_sign(Vec3 v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace

std::optional<PlaneFeature> fit_plane(std::span<const Point3> neighbors, const FitConfig& cfg) {
  if (neighbors.size() < std::max<std::size_t>(3, cfg.min_neighbors)) return std::nullopt;
  const PrincipalAxes ax = principal_axes(neighbors);
  const double l0 = std::max(0.0, ax.values[0]);
  const double l1 = ax.values[1];
  const double l2 = ax.values[2];
  // rank < 2 (collinear or coincident points) cannot define a plane
  if (!(l2 > 0.0) || !(l1 > 1e-10 * l2)) return std::nullopt;
  if (l0 > cfg.planarity_ratio * l1) return std::nullopt;

  PlaneFeature f;
  f.normal = canonical_sign(ax.vectors.col(0).normalized());
  f.intercept = -f.normal.dot(ax.centroid);
  for (const auto& p : neighbors) {
    if (std::abs(f.normal.dot(p) + f.intercept) > cfg.fit_tolerance) return std::nullopt;
  }
  return f;
}

std::optional<LineFeature> fit_line(std::span<const Point3> neighbors, const FitConfig& cfg) {
  if (neighbors.size() < std::max<std::size_t>(3, cfg.min_neighbors)) return std::nullopt;
  const PrincipalAxes ax = principal_axes(neighbors);
  const double l1 = std::max(0.0, ax.values[1]);
  const double l2 = ax.values[2];
  if (!(l2 > 0.0) || l1 > cfg.linearity_ratio * l2) return std::nullopt;

  LineFeature f;
  f.direction = canonical_sign(ax.vectors.col(2).normalized());
  f.anchor = ax.centroid;
  for (const auto& p : neighbors) {
    if (f.direction.cross(p - f.anchor).norm() > cfg.fit_tolerance) return std::nullopt;
  }
  return f;
}

double plane_residual(const Pose& T, const Point3& p, const PlaneFeature& f) {
  return f.weight * (f.normal.dot(T.apply(p)) + f.intercept);
}

Vec3 line_residual(const Pose& T, const Point3& p, const LineFeature& f) {
  return f.weight * f.direction.cross(T.apply(p) - f.anchor);
}

Eigen::Matrix<double, 1, 6> plane_jacobian(const Pose& T, const Point3& p, const PlaneFeature& f) {
  const Vec3 rp = T.rotation * p;
  Eigen::Matrix<double, 1, 6> J;
  J.head<3>() = f.weight * rp.cross(f.normal).transpose();
  J.tail<3>() = f.weight * f.normal.transpose();
  return J;
}

Eigen::Matrix<double, 3, 6> line_jacobian(const Pose& T, const Point3& p, const LineFeature& f) {
  const Vec3 rp = T.rotation * p;
  const Matrix3 D = hat(f.direction);
  Eigen::Matrix<double, 3, 6> J;
  J.leftCols<3>() = -f.weight * D * hat(rp);
  J.rightCols<3>() = f.weight * D;
  return J;
}

ResidualBlock point_residuals(const Pose& T, const Point3& p, const Feature& f) {
  ResidualBlock out;
  if (const auto* plane = std::get_if<PlaneFeature>(&f)) {
    out.value.x() = plane_residual(T, p, *plane);
    out.dim = 1;
  } else {
    out.value = line_residual(T, p, std::get<LineFeature>(f));
    out.dim = 3;
  }
  return out;
}

Pose apply_increment(const Pose& T, const Vector6& xi) {
  Pose out;
  out.rotation = so3_exp(xi.head<3>()) * T.rotation;
  out.translation = T.translation + xi.tail<3>();
  return out;
}

}  // namespace llloc
