#include "llloc/simulator.hpp"

#include "llloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace llloc {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kImuStream = 0xFFFF'FFFF'0000'0001ULL;

}  // namespace

Surface Surface::rectangle(std::string name, const Point3& center, const Vec3& u, const Vec3& v,
                           double half_u, double half_v) {
  Surface s;
  s.name = std::move(name);
  s.kind = Kind::Rectangle;
  s.center = center;
  s.u = u.normalized();
  s.v = (v - s.u * s.u.dot(v)).normalized();
  s.half_u = half_u;
  s.half_v = half_v;
  return s;
}

Surface Surface::box(std::string name, const Point3& min, const Point3& max) {
  Surface s;
  s.name = std::move(name);
  s.kind = Kind::Box;
  s.box_min = min.cwiseMin(max);
  s.box_max = min.cwiseMax(max);
  return s;
}

Surface Surface::wall(std::string name, double x0, double y0, double x1, double y1, double z0,
                      double z1) {
  const Vec3 a(x0, y0, 0.0), b(x1, y1, 0.0);
  const Point3 c(0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.5 * (z0 + z1));
  return rectangle(std::move(name), c, b - a, Vec3::UnitZ(), 0.5 * (b - a).norm(),
                   0.5 * std::abs(z1 - z0));
}

Surface Surface::slab(std::string name, double x0, double y0, double x1, double y1, double z) {
  const Point3 c(0.5 * (x0 + x1), 0.5 * (y0 + y1), z);
  return rectangle(std::move(name), c, Vec3::UnitX(), Vec3::UnitY(), 0.5 * std::abs(x1 - x0),
                   0.5 * std::abs(y1 - y0));
}

std::optional<double> Surface::intersect(const Point3& origin, const Vec3& dir, double t_min,
                                         double t_max) const {
  if (kind == Kind::Rectangle) {
    const Vec3 n = u.cross(v);
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double t = n.dot(center - origin) / denom;
    if (!(t >= t_min && t <= t_max)) return std::nullopt;
    const Vec3 rel = origin + t * dir - center;
    if (std::abs(u.dot(rel)) > half_u || std::abs(v.dot(rel)) > half_v) return std::nullopt;
    return t;
  }
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box_min[a] || origin[a] > box_max[a]) return std::nullopt;
      continue;
    }
    double t0 = (box_min[a] - origin[a]) / dir[a];
    double t1 = (box_max[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far) return std::nullopt;
  if (t_near >= t_min && t_near <= t_max) return t_near;
  if (t_far >= t_min && t_far <= t_max) return t_far;
  return std::nullopt;
}

double Surface::distance(const Point3& p) const {
  if (kind == Kind::Rectangle) {
    const Vec3 rel = p - center;
    const double du = std::max(std::abs(u.dot(rel)) - half_u, 0.0);
    const double dv = std::max(std::abs(v.dot(rel)) - half_v, 0.0);
    const double dn = u.cross(v).dot(rel);
    return std::sqrt(du * du + dv * dv + dn * dn);
  }
  const Vec3 below = box_min - p;
  const Vec3 above = p - box_max;
  const Vec3 outside = below.cwiseMax(above).cwiseMax(0.0);
  if (outside.squaredNorm() > 0.0) return outside.norm();
  return std::min((p - box_min).minCoeff(), (box_max - p).minCoeff());
}

void Surface::translate(const Vec3& offset) {
  center += offset;
  box_min += offset;
  box_max += offset;
}

void WorldSpec::validate() const {
  if (surfaces.empty()) throw Error(ErrorCode::InvalidConfig, "world has no surfaces");
}

const Surface* WorldSpec::find(const std::string& name) const {
  for (const auto& s : surfaces) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

WorldSpec WorldSpec::edited(const std::vector<SurfaceEdit>& edits) const {
  WorldSpec out = *this;
  for (const auto& e : edits) {
    auto it = std::find_if(out.surfaces.begin(), out.surfaces.end(),
                           [&](const Surface& s) { return s.name == e.name; });
    switch (e.op) {
      case SurfaceEdit::Op::Add:
        if (it != out.surfaces.end()) {
          throw Error(ErrorCode::InvalidConfig, "surface already exists: " + e.name);
        }
        out.surfaces.push_back(e.surface);
        out.surfaces.back().name = e.name;
        break;
      case SurfaceEdit::Op::Remove:
        if (it == out.surfaces.end()) throw Error(ErrorCode::InvalidConfig, "no surface " + e.name);
        out.surfaces.erase(it);
        break;
      case SurfaceEdit::Op::Translate:
        if (it == out.surfaces.end()) throw Error(ErrorCode::InvalidConfig, "no surface " + e.name);
        it->translate(e.offset);
        break;
    }
  }
  out.validate();
  return out;
}

void SensorSpec::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (horizontal_rays < 1 || vertical_rays < 1) fail("sensor: ray counts must be positive");
  if (!(theta_l > 0.0 && theta_l <= 2.0 * M_PI)) fail("sensor: theta_l must be in (0, 2pi]");
  if (fov_mode == FovMode::Narrow && !(theta_l < M_PI)) fail("sensor: narrow mode needs theta_l < pi");
  if (!(d_min >= 0.0 && d_max > d_min)) fail("sensor: need 0 <= d_min < d_max");
  if (!(elevation_min <= elevation_max)) fail("sensor: elevation_min > elevation_max");
  if (!(scan_rate > 0.0 && imu_rate >= scan_rate)) fail("sensor: need imu_rate >= scan_rate > 0");
  const double ratio = imu_rate / scan_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) fail("sensor: imu_rate must be a multiple of scan_rate");
  if (range_noise_sigma < 0.0 || accel_noise_sigma < 0.0 || gyro_noise_sigma < 0.0) {
    fail("sensor: noise sigmas must be non-negative");
  }
}

std::vector<Vec3> SensorSpec::ray_directions() const {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(horizontal_rays) * vertical_rays);
  const bool wide = fov_mode == FovMode::Wide;
  for (int e = 0; e < vertical_rays; ++e) {
    const double el =
        vertical_rays == 1
            ? 0.5 * (elevation_min + elevation_max)
            : elevation_min + (elevation_max - elevation_min) * e / (vertical_rays - 1);
    for (int h = 0; h < horizontal_rays; ++h) {
      const double az = wide ? theta_l * h / horizontal_rays
                             : -0.5 * theta_l + theta_l * (h + 0.5) / horizontal_rays;
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    }
  }
  return dirs;
}

std::optional<double> raycast(const WorldSpec& world, const Point3& origin, const Vec3& dir,
                              double t_min, double t_max, double time) {
  std::optional<double> best;
  for (const auto& s : world.surfaces) {
    if (!s.active_at(time)) continue;
    const auto t = s.intersect(origin, dir, t_min, best ? *best : t_max);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

Scan raycast_scan(const WorldSpec& world, const Pose& pose, const SensorSpec& sensor,
                  std::uint64_t seed, double timestamp) {
  Scan scan;
  scan.timestamp = timestamp;
  scan.frame = Frame::Body;
  auto rng = make_rng(world.seed ^ seed, 0);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const Vec3& d_body : sensor.ray_directions()) {
    const Vec3 d_map = pose.rotation * d_body;
    const auto t = raycast(world, pose.translation, d_map, sensor.d_min, sensor.d_max, timestamp);
    // draw for every ray so the noise sequence does not depend on hits
    const double n = noise(rng);
    if (!t) continue;
    const double range = *t + (sensor.range_noise_sigma > 0.0 ? sensor.range_noise_sigma * n : 0.0);
    scan.points.push_back(range * d_body);
  }
  return scan;
}

std::vector<ImuSample> synthesize_imu(const Trajectory& trajectory, const SensorSpec& sensor,
                                      std::uint64_t seed, const Vec3& gravity) {
  const double t0 = trajectory.start_time();
  const double dt = 1.0 / sensor.imu_rate;
  const auto count =
      static_cast<std::size_t>(std::floor((trajectory.end_time() - t0) * sensor.imu_rate + 1e-9)) + 1;

  std::vector<double> times(count);
  std::vector<Pose> poses(count);
  std::vector<Vec3> vels(count);
  for (std::size_t i = 0; i < count; ++i) {
    times[i] = t0 + static_cast<double>(i) / sensor.imu_rate;
    poses[i] = trajectory.pose(times[i]);
    vels[i] = trajectory.velocity(times[i]);
  }

  auto rng = make_rng(seed, kImuStream);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw = [&](double sigma) {
    Vec3 n(noise(rng), noise(rng), noise(rng));
    return sigma > 0.0 ? Vec3(sigma * n) : Vec3::Zero();
  };

  std::vector<ImuSample> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    ImuSample& s = out[i];
    s.timestamp = times[i];
    if (i + 1 < count) {
      const Rotation& R = poses[i].rotation;
      s.accel = R.transpose() * ((vels[i + 1] - vels[i]) / dt - gravity);
      s.gyro = so3_log(R.transpose() * poses[i + 1].rotation) / dt;
    } else if (i > 0) {
      // nothing to difference against: repeat the previous clean measurement
      s.accel = out[i - 1].accel;
      s.gyro = out[i - 1].gyro;
    } else {
      s.accel = poses[i].rotation.transpose() * -gravity;
    }
  }
  for (auto& s : out) {
    s.accel += sensor.accel_bias + draw(sensor.accel_noise_sigma);
    s.gyro += sensor.gyro_bias + draw(sensor.gyro_noise_sigma);
  }
  return out;
}

void SessionData::validate() const {
  if (ground_truth.size() != scans.size()) {
    throw Error(ErrorCode::CountMismatch, "ground truth and scan counts differ");
  }
  for (std::size_t i = 1; i < scans.size(); ++i) {
    if (!(scans[i].timestamp > scans[i - 1].timestamp)) {
      throw Error(ErrorCode::InvalidConfig, "scan timestamps must increase");
    }
  }
  for (std::size_t i = 1; i < imu.size(); ++i) {
    if (!(imu[i].timestamp > imu[i - 1].timestamp)) {
      throw Error(ErrorCode::InvalidConfig, "imu timestamps must increase");
    }
  }
  if (!scans.empty() && (imu.empty() || imu.front().timestamp > scans.front().timestamp ||
                         imu.back().timestamp < scans.back().timestamp)) {
    throw Error(ErrorCode::InvalidConfig, "imu stream does not cover the scans");
  }
}

SessionData simulate_session(const WorldSpec& world, const Trajectory& trajectory,
                             const SensorSpec& sensor, std::uint64_t seed, std::string name,
                             std::string world_id, const Vec3& gravity) {
  sensor.validate();
  world.validate();
  SessionData session;
  session.name = std::move(name);
  session.world_id = std::move(world_id);
  session.imu = synthesize_imu(trajectory, sensor, seed, gravity);

  const auto stride = static_cast<std::size_t>(std::llround(sensor.imu_rate / sensor.scan_rate));
  std::vector<std::size_t> scan_samples;
  for (std::size_t i = 0; i < session.imu.size(); i += stride) scan_samples.push_back(i);

  session.scans.resize(scan_samples.size());
  session.ground_truth.resize(scan_samples.size());
  const auto n = static_cast<std::ptrdiff_t>(scan_samples.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const double t = session.imu[scan_samples[k]].timestamp;
    const Pose pose = trajectory.pose(t);
    session.ground_truth[k] = TimedPose{t, pose};
    session.scans[k] = raycast_scan(world, pose, sensor, seed + static_cast<std::uint64_t>(k) + 1, t);
  }

  const double t_start = trajectory.start_time();
  session.initial.pose = trajectory.pose(t_start);
  session.initial.velocity = trajectory.velocity(t_start);
  session.initial.timestamp = t_start;
  return session;
}

}  // namespace llloc
