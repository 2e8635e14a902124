#pragma once

#include "llloc/imu.hpp"
#include "llloc/io.hpp"
#include "llloc/map_loading.hpp"
#include "llloc/registration.hpp"
#include "llloc/simulator.hpp"
#include "llloc/voxel_map.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace llloc {

struct BenchConfig {
  std::size_t frames = 40;
  std::size_t queries_per_frame = 2000;
  double radius = 0.5;                // m
  std::size_t blocks = 4;             // synthetic workload only
  std::size_t points_per_block = 8000;
  std::size_t inserts_per_frame = 4000;
  std::uint64_t seed = 7;
};

struct PipelineConfig {
  MapConfig map;
  // theta_l, d_min, d_max and fov_mode are copied from `sensor`; phi1/phi2
  // from the factors below; delta and the iteration cap from `registration`.
  LoadingConfig loading;
  double phi1_factor = 0.6;  // phi1 = phi1_factor * d_max
  double phi2_factor = 0.2;  // phi2 = phi2_factor * d_max
  RegistrationConfig registration;
  ImuConfig imu;
  SensorSpec sensor;
  std::optional<Pose> initial_pose;  // overrides the session's initial state
  double scan_voxel = 0.1;           // m, first-wins downsample of each scan; 0 disables
  double prior_voxel = 0.3;          // m, build-prior downsample; 0 disables
  double time_budget_ms = 80.0;
  PlyEncoding map_encoding = PlyEncoding::Ascii;
  BenchConfig bench;

  std::string prior_map;    // optional defaults for the CLI
  std::string session_dir;
  std::string output_dir;

  /// Copies shared fields into the sub-configs and validates everything.
  /// Throws InvalidConfig.
  void finalize();
};

/// Defaults, finalized.
PipelineConfig default_pipeline_config();

/// Tuned for the generated scenarios (see configs/scenario.json).
PipelineConfig scenario_pipeline_config();

/// Unknown keys are rejected; missing keys keep their defaults.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string dump_config(const PipelineConfig& cfg);

}  // namespace llloc
