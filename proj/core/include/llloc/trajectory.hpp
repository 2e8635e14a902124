#pragma once

#include "llloc/types.hpp"

#include <memory>
#include <vector>

namespace llloc {

/// Analytic body pose over [start_time, end_time], twice differentiable.
class Trajectory {
 public:
  virtual ~Trajectory() = default;
  virtual double start_time() const = 0;
  virtual double end_time() const = 0;
  virtual Pose pose(double t) const = 0;
  /// Map-frame linear velocity.
  virtual Vec3 velocity(double t) const = 0;
};

/// T(t) = T0 * Exp(t * [w, v]) with body-frame twist (w, v).
class ConstantTwistTrajectory final : public Trajectory {
 public:
  ConstantTwistTrajectory(const Pose& start, const Vec3& omega_body, const Vec3& v_body,
                          double duration, double t0 = 0.0);

  double start_time() const override { return t0_; }
  double end_time() const override { return t0_ + duration_; }
  Pose pose(double t) const override;
  Vec3 velocity(double t) const override;

 private:
  Pose start_;
  Vec3 omega_;
  Vec3 v_;
  double duration_;
  double t0_;
};

struct Waypoint {
  Point3 position;
  double yaw = 0.0;  // rad
};

/// Cubic B-spline through evenly timed waypoints (x, y, z and yaw), with zero
/// velocity at both ends. Roll and pitch stay zero.
class SplineTrajectory final : public Trajectory {
 public:
  /// Waypoint i is reached at t0 + i * segment_time. Needs at least 2 waypoints.
  SplineTrajectory(std::vector<Waypoint> waypoints, double segment_time, double t0 = 0.0);
  ~SplineTrajectory() override;
  SplineTrajectory(SplineTrajectory&&) noexcept;
  SplineTrajectory& operator=(SplineTrajectory&&) noexcept;

  double start_time() const override { return t0_; }
  double end_time() const override;
  Pose pose(double t) const override;
  Vec3 velocity(double t) const override;

  const std::vector<Waypoint>& waypoints() const { return waypoints_; }

 private:
  struct Splines;
  std::vector<Waypoint> waypoints_;
  double segment_time_;
  double t0_;
  std::unique_ptr<Splines> splines_;
};

/// A trajectory that holds a fixed pose.
class StationaryTrajectory final : public Trajectory {
 public:
  StationaryTrajectory(const Pose& pose, double duration, double t0 = 0.0)
      : pose_(pose), duration_(duration), t0_(t0) {}
  double start_time() const override { return t0_; }
  double end_time() const override { return t0_ + duration_; }
  Pose pose(double) const override { return pose_; }
  Vec3 velocity(double) const override { return Vec3::Zero(); }

 private:
  Pose pose_;
  double duration_;
  double t0_;
};

}  // namespace llloc
