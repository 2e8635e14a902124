#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace llloc {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Rotation = Eigen::Matrix3d;
using Matrix3 = Eigen::Matrix3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using PointCloud = std::vector<Point3>;

/// Squared Euclidean distance, evaluated as dx*dx + dy*dy + dz*dz.
/// Every radius test in the library goes through this so that strict `< r*r`
/// comparisons agree bit-for-bit between the octree paths and linear scans.
inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

Matrix3 hat(const Vec3& v);

/// exp(omega^) on SO(3). Falls back to the second-order series for |omega| < 1e-8.
Rotation so3_exp(const Vec3& omega);

/// Inverse of so3_exp on the principal branch (|result| <= pi).
Vec3 so3_log(const Rotation& R);

/// Projects a nearly orthonormal matrix back onto SO(3).
Rotation orthonormalize(const Rotation& R);

/// Rigid transform T = (R, t). Frames are named on every field that stores one
/// (e.g. body-to-map).
struct Pose {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vec3& t);

  Eigen::Quaterniond quaternion() const;
  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  Point3 operator*(const Point3& p) const { return apply(p); }
  Pose operator*(const Pose& other) const;
  Pose inverse() const;
};

Point3 pose_apply(const Pose& T, const Point3& p);
Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& a);

/// Translation distance and rotation angle (rad) between two poses.
double translation_error(const Pose& a, const Pose& b);
double rotation_error(const Pose& a, const Pose& b);

struct NavState {
  Pose pose;  // body -> map
  Vec3 velocity = Vec3::Zero();    // map frame, m/s
  Vec3 accel_bias = Vec3::Zero();  // m/s^2
  Vec3 gyro_bias = Vec3::Zero();   // rad/s
  double timestamp = 0.0;          // s
};

enum class Frame { Body, Map };

struct Scan {
  double timestamp = 0.0;
  PointCloud points;
  Frame frame = Frame::Body;
};

/// Returns a copy of `scan` with every point mapped through `T`, tagged `frame`.
Scan transform_scan(const Scan& scan, const Pose& T, Frame frame = Frame::Map);

bool is_finite(const Point3& p);
bool is_rotation(const Rotation& R, double tol = 1e-9);

}  // namespace llloc
