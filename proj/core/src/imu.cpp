#include "llloc/imu.hpp"

#include "llloc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace llloc {

NavState imu_propagate(const NavState& state, const ImuSample& sample, double dt,
                       const ImuConfig& cfg) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "propagation step must be positive");

  const Rotation& R = state.pose.rotation;
  const Vec3 acc_map = R * (sample.accel - state.accel_bias);

  NavState next = state;
  next.velocity = state.velocity + cfg.gravity * dt + acc_map * dt;
  next.pose.translation = state.pose.translation + state.velocity * dt +
                          0.5 * cfg.gravity * dt * dt + 0.5 * acc_map * dt * dt;
  Rotation Rn = R * so3_exp((sample.gyro - state.gyro_bias) * dt);
  if (!is_rotation(Rn, 1e-9)) Rn = orthonormalize(Rn);
  next.pose.rotation = Rn;
  next.timestamp = state.timestamp + dt;
  return next;
}

NavState propagate_until(const NavState& state, std::span<const ImuSample> samples,
                         double t_target, const ImuConfig& cfg) {
  if (!(t_target > state.timestamp) || samples.empty()) return state;

  // Sample governing the first interval: the latest one at or before the start.
  auto it = std::upper_bound(samples.begin(), samples.end(), state.timestamp,
                             [](double t, const ImuSample& s) { return t < s.timestamp; });
  std::size_t i = it == samples.begin() ? 0 : static_cast<std::size_t>(it - samples.begin()) - 1;

  NavState s = state;
  while (s.timestamp < t_target) {
    const bool has_next = i + 1 < samples.size();
    if (has_next && samples[i + 1].timestamp - samples[i].timestamp > cfg.max_gap) {
      throw Error(ErrorCode::GapTooLarge, "IMU gap exceeds max_gap");
    }
    double t_end = t_target;
    if (has_next && samples[i + 1].timestamp < t_target) t_end = samples[i + 1].timestamp;
    const double dt = t_end - s.timestamp;
    if (dt > 0.0) {
      s = imu_propagate(s, samples[i], dt, cfg);
      s.timestamp = t_end;  // avoid accumulating round-off in the clock
    }
    if (!has_next || samples[i + 1].timestamp >= t_target) break;
    ++i;
  }
  s.timestamp = t_target;
  return s;
}

}  // namespace llloc
