#include "llloc/types.hpp"

#include "llloc/errors.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace llloc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::GapTooLarge: return "GapTooLarge";
    case ErrorCode::DegenerateFoV: return "DegenerateFoV";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyLocalMap: return "EmptyLocalMap";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::SolverSingular: return "SolverSingular";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Matrix3 hat(const Vec3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation so3_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Matrix3 W = hat(omega);
  if (theta < 1e-8) {
    return Rotation::Identity() + W + 0.5 * W * W;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Rotation::Identity() + a * W + b * W * W;
}

Vec3 so3_log(const Rotation& R) {
  const Eigen::AngleAxisd aa(Eigen::Quaterniond(R).normalized());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > M_PI) {
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  return angle * axis;
}

Rotation orthonormalize(const Rotation& R) {
  Eigen::JacobiSVD<Matrix3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Matrix3 U = svd.matrixU();
    U.col(2) *= -1.0;
    out = U * svd.matrixV().transpose();
  }
  return out;
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  Pose p;
  p.rotation = q.normalized().toRotationMatrix();
  p.translation = t;
  return p;
}

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  // canonical hemisphere keeps serialized trajectories stable
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Point3 pose_apply(const Pose& T, const Point3& p) { return T.apply(p); }
Pose pose_compose(const Pose& a, const Pose& b) { return a * b; }
Pose pose_inverse(const Pose& a) { return a.inverse(); }

double translation_error(const Pose& a, const Pose& b) {
  return (a.translation - b.translation).norm();
}

double rotation_error(const Pose& a, const Pose& b) {
  return so3_log(a.rotation.transpose() * b.rotation).norm();
}

Scan transform_scan(const Scan& scan, const Pose& T, Frame frame) {
  Scan out;
  out.timestamp = scan.timestamp;
  out.frame = frame;
  out.points.reserve(scan.points.size());
  for (const auto& p : scan.points) out.points.push_back(T.apply(p));
  return out;
}

bool is_finite(const Point3& p) { return p.allFinite(); }

bool is_rotation(const Rotation& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Matrix3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

}  // namespace llloc
