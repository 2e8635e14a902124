#include "llloc/trajectory.hpp"

#include "llloc/errors.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace llloc {

namespace {

// Left Jacobian of SO(3): integral of Exp(s w) over s in [0, 1].
Matrix3 so3_left_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Matrix3 W = hat(phi);
  if (theta < 1e-6) return Matrix3::Identity() + 0.5 * W + W * W / 6.0;
  const double t2 = theta * theta;
  return Matrix3::Identity() + (1.0 - std::cos(theta)) / t2 * W +
         (theta - std::sin(theta)) / (t2 * theta) * W * W;
}

}  // namespace

ConstantTwistTrajectory::ConstantTwistTrajectory(const Pose& start, const Vec3& omega_body,
                                                 const Vec3& v_body, double duration, double t0)
    : start_(start), omega_(omega_body), v_(v_body), duration_(duration), t0_(t0) {
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidConfig, "trajectory duration must be positive");
}

Pose ConstantTwistTrajectory::pose(double t) const {
  const double s = t - t0_;
  Pose out;
  out.rotation = start_.rotation * so3_exp(omega_ * s);
  out.translation = start_.translation + start_.rotation * (so3_left_jacobian(omega_ * s) * v_ * s);
  return out;
}

Vec3 ConstantTwistTrajectory::velocity(double t) const {
  return start_.rotation * so3_exp(omega_ * (t - t0_)) * v_;
}

struct SplineTrajectory::Splines {
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  std::array<Spline, 4> axes;  // x, y, z, yaw
};

SplineTrajectory::SplineTrajectory(std::vector<Waypoint> waypoints, double segment_time, double t0)
    : waypoints_(std::move(waypoints)), segment_time_(segment_time), t0_(t0) {
  if (waypoints_.size() < 2) throw Error(ErrorCode::InvalidConfig, "spline needs >= 2 waypoints");
  if (!(segment_time > 0.0)) throw Error(ErrorCode::InvalidConfig, "segment_time must be positive");

  // Unwrap yaw so the spline never takes the long way round.
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    double d = waypoints_[i].yaw - waypoints_[i - 1].yaw;
    d = std::remainder(d, 2.0 * M_PI);
    waypoints_[i].yaw = waypoints_[i - 1].yaw + d;
  }
  // boost needs at least 5 knots; a linear resampling keeps the same path.
  std::vector<Waypoint> knots = waypoints_;
  double h = segment_time_;
  while (knots.size() < 5) {
    std::vector<Waypoint> finer;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      finer.push_back(knots[i]);
      finer.push_back({0.5 * (knots[i].position + knots[i + 1].position),
                       0.5 * (knots[i].yaw + knots[i + 1].yaw)});
    }
    finer.push_back(knots.back());
    knots = std::move(finer);
    h *= 0.5;
  }

  auto make = [&](auto get) {
    std::vector<double> v;
    v.reserve(knots.size());
    for (const auto& k : knots) v.push_back(get(k));
    return Splines::Spline(v.begin(), v.end(), t0_, h, 0.0, 0.0);
  };
  splines_ = std::make_unique<Splines>(Splines{{
      make([](const Waypoint& w) { return w.position.x(); }),
      make([](const Waypoint& w) { return w.position.y(); }),
      make([](const Waypoint& w) { return w.position.z(); }),
      make([](const Waypoint& w) { return w.yaw; }),
  }});
}

SplineTrajectory::~SplineTrajectory() = default;
SplineTrajectory::SplineTrajectory(SplineTrajectory&&) noexcept = default;
SplineTrajectory& SplineTrajectory::operator=(SplineTrajectory&&) noexcept = default;

double SplineTrajectory::end_time() const {
  return t0_ + segment_time_ * static_cast<double>(waypoints_.size() - 1);
}

Pose SplineTrajectory::pose(double t) const {
  t = std::clamp(t, start_time(), end_time());
  const auto& a = splines_->axes;
  Pose out;
  out.translation = Vec3(a[0](t), a[1](t), a[2](t));
  out.rotation = Eigen::AngleAxisd(a[3](t), Vec3::UnitZ()).toRotationMatrix();
  return out;
}

Vec3 SplineTrajectory::velocity(double t) const {
  if (t <= start_time() || t >= end_time()) return Vec3::Zero();
  const auto& a = splines_->axes;
  return Vec3(a[0].prime(t), a[1].prime(t), a[2].prime(t));
}

}  // namespace llloc
