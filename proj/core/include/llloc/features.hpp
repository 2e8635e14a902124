#pragma once

#include "llloc/types.hpp"

#include <optional>
#include <span>
#include <variant>

namespace llloc {

struct FitConfig {
  std::size_t min_neighbors = 5;
  double planarity_ratio = 0.1;  // accept plane if lambda_min / lambda_mid <= this
  double linearity_ratio = 0.25; // accept line if lambda_mid / lambda_max <= this
  double fit_tolerance = 0.1;    // m, max distance of any fitted neighbor to the feature
};

/// n^T p + d = 0 with |n| = 1.
struct PlaneFeature {
  Vec3 normal = Vec3::UnitZ();
  double intercept = 0.0;
  double weight = 1.0;
};

/// L(x) = direction * x + anchor with |direction| = 1.
struct LineFeature {
  Vec3 direction = Vec3::UnitX();
  Point3 anchor = Point3::Zero();
  double weight = 1.0;
};

using Feature = std::variant<PlaneFeature, LineFeature>;

/// Least-squares plane through the centroid. The normal is canonicalized so its
/// first non-negligible component is positive. nullopt means "not planar".
std::optional<PlaneFeature> fit_plane(std::span<const Point3> neighbors, const FitConfig& cfg = {});

/// Principal-direction line through the centroid. nullopt means "not linear".
std::optional<LineFeature> fit_line(std::span<const Point3> neighbors, const FitConfig& cfg = {});

/// w (n^T (R p + t) + d)
double plane_residual(const Pose& T, const Point3& p, const PlaneFeature& f);

/// w (dir x (R p + t - anchor))
Vec3 line_residual(const Pose& T, const Point3& p, const LineFeature& f);

/// Jacobians with respect to the increment [phi, dt] applied as
/// R <- Exp(phi) R, t <- t + dt.
Eigen::Matrix<double, 1, 6> plane_jacobian(const Pose& T, const Point3& p, const PlaneFeature& f);
Eigen::Matrix<double, 3, 6> line_jacobian(const Pose& T, const Point3& p, const LineFeature& f);

/// Residual block for either feature kind; `dim` is 1 for planes, 3 for lines.
struct ResidualBlock {
  Vec3 value = Vec3::Zero();
  int dim = 1;

  double squared_norm() const { return value.head(dim).squaredNorm(); }
};

ResidualBlock point_residuals(const Pose& T, const Point3& p, const Feature& f);

/// Pose after applying the increment [phi, dt].
Pose apply_increment(const Pose& T, const Vector6& xi);

}  // namespace llloc
