#pragma once

#include "llloc/imu.hpp"
#include "llloc/map_loading.hpp"
#include "llloc/trajectory.hpp"
#include "llloc/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace llloc {

/// Axis-aligned box or finite rectangle. Rectangles are centered at `center`
/// and spanned by the orthonormal axes u, v with half extents (half_u, half_v).
struct Surface {
  enum class Kind { Rectangle, Box };

  std::string name;
  Kind kind = Kind::Rectangle;
  Point3 center = Point3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
  double half_u = 0.5;
  double half_v = 0.5;
  Point3 box_min = Point3::Zero();
  Point3 box_max = Point3::Ones();
  // Present only for timestamps in [active_from, active_until).
  double active_from = -std::numeric_limits<double>::infinity();
  double active_until = std::numeric_limits<double>::infinity();

  static Surface rectangle(std::string name, const Point3& center, const Vec3& u, const Vec3& v,
                           double half_u, double half_v);
  static Surface box(std::string name, const Point3& min, const Point3& max);
  /// Vertical wall from (x0, y0) to (x1, y1) spanning heights [z0, z1].
  static Surface wall(std::string name, double x0, double y0, double x1, double y1, double z0,
                      double z1);
  /// Horizontal rectangle at height z over [x0, x1] x [y0, y1].
  static Surface slab(std::string name, double x0, double y0, double x1, double y1, double z);

  bool active_at(double t) const { return t >= active_from && t < active_until; }
  /// Smallest ray parameter in [t_min, t_max] at which origin + t dir hits the
  /// surface. dir must be unit length. Boxes are hit from outside and inside.
  std::optional<double> intersect(const Point3& origin, const Vec3& dir, double t_min,
                                  double t_max) const;
  /// Distance from p to the surface (to the nearest face for boxes).
  double distance(const Point3& p) const;
  void translate(const Vec3& offset);
};

struct SurfaceEdit {
  enum class Op { Add, Remove, Translate };
  Op op = Op::Add;
  std::string name;
  Surface surface;  // Add
  Vec3 offset = Vec3::Zero();  // Translate
};

struct WorldSpec {
  std::vector<Surface> surfaces;
  std::uint64_t seed = 0;

  void validate() const;
  const Surface* find(const std::string& name) const;
  /// Copy with the edits applied in order. Throws InvalidConfig when an edit
  /// names a surface that does not exist (or already exists, for Add).
  WorldSpec edited(const std::vector<SurfaceEdit>& edits) const;
};

struct SensorSpec {
  FovMode fov_mode = FovMode::Wide;
  double theta_l = 2.0 * M_PI;  // horizontal field of view, rad
  int horizontal_rays = 360;
  int vertical_rays = 16;
  double elevation_min = -15.0 * M_PI / 180.0;
  double elevation_max = 15.0 * M_PI / 180.0;
  double d_min = 0.5;
  double d_max = 30.0;
  double scan_rate = 10.0;  // Hz
  double range_noise_sigma = 0.01;
  double imu_rate = 200.0;  // Hz, an integer multiple of scan_rate
  double accel_noise_sigma = 0.0;
  double gyro_noise_sigma = 0.0;
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();

  void validate() const;
  /// Unit ray directions in the body frame, elevation-major.
  std::vector<Vec3> ray_directions() const;
};

/// Nearest active hit along a ray within [t_min, t_max], if any.
std::optional<double> raycast(const WorldSpec& world, const Point3& origin, const Vec3& dir,
                              double t_min, double t_max, double time);

/// Body-frame scan from the given pose. Deterministic in seed.
Scan raycast_scan(const WorldSpec& world, const Pose& pose, const SensorSpec& sensor,
                  std::uint64_t seed, double timestamp = 0.0);

/// Measurements at imu_rate over the trajectory span. Each sample is chosen so
/// that one zeroth-order-hold step of imu_propagate lands on the next
/// ground-truth rotation and velocity exactly; noise and biases are added on top.
std::vector<ImuSample> synthesize_imu(const Trajectory& trajectory, const SensorSpec& sensor,
                                      std::uint64_t seed,
                                      const Vec3& gravity = Vec3(0.0, 0.0, -9.81));

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

struct SessionData {
  std::string name;
  std::string world_id;
  std::vector<TimedPose> ground_truth;  // one per scan
  std::vector<Scan> scans;              // body frame
  std::vector<ImuSample> imu;
  NavState initial;  // ground-truth state at the first scan

  void validate() const;
};

/// Scans at scan_rate (on IMU sample times) plus the IMU stream.
SessionData simulate_session(const WorldSpec& world, const Trajectory& trajectory,
                             const SensorSpec& sensor, std::uint64_t seed, std::string name,
                             std::string world_id, const Vec3& gravity = Vec3(0.0, 0.0, -9.81));

}  // namespace llloc
