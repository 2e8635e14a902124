#pragma once

#include "llloc/types.hpp"

#include <span>

namespace llloc {

struct ImuSample {
  double timestamp = 0.0;
  Vec3 accel = Vec3::Zero();  // specific force, body frame, m/s^2
  Vec3 gyro = Vec3::Zero();   // body frame, rad/s
};

struct ImuConfig {
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);  // map frame
  // White-noise standard deviations. Propagation treats noise as zero; these
  // drive the simulator's measurement model.
  double accel_noise_sigma = 0.0;
  double gyro_noise_sigma = 0.0;
  double max_gap = 0.1;  // s, largest tolerated spacing between samples
};

/// One zeroth-order-hold step:
///   v+ = v + g dt + R (a - ba) dt
///   p+ = p + v dt + 1/2 g dt^2 + 1/2 R (a - ba) dt^2
///   R+ = R Exp((w - bw) dt)
/// Biases are carried through unchanged. Throws NonPositiveDt.
NavState imu_propagate(const NavState& state, const ImuSample& sample, double dt,
                       const ImuConfig& cfg);

/// Folds imu_propagate from state.timestamp to t_target. Each interval uses the
/// most recent sample at or before its start; the tail after the last sample
/// holds that sample constant. Throws GapTooLarge when consecutive samples
/// inside the window are further apart than cfg.max_gap.
NavState propagate_until(const NavState& state, std::span<const ImuSample> samples,
                         double t_target, const ImuConfig& cfg);

}  // namespace llloc
