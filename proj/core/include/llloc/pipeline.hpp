#pragma once

#include "llloc/config.hpp"
#include "llloc/map_update.hpp"
#include "llloc/simulator.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace llloc {

struct FrameRecord {
  double timestamp = 0.0;
  Pose predicted;
  Pose corrected;
  char case_id = '?';
  int H = 0;
  std::int64_t kappa = 0;
  std::int64_t tau = 0;
  bool augmented = false;
  double residual = 0.0;  // value tested against delta
  int iterations = 0;
  bool converged = false;
  std::size_t correspondences = 0;
  std::size_t matched = 0;
  std::size_t unmatched = 0;
  std::size_t blocks_promoted = 0;
  std::size_t blocks_demoted = 0;
  double processing_ms = 0.0;
  // "ok", or the error that made the frame fall back to the predicted pose
  std::string status = "ok";
};

/// First point per grid cell floor(p / voxel) wins; input order is kept.
PointCloud voxel_downsample(std::span<const Point3> points, double voxel);

/// Frame loop: propagate, register against the map, buffer unmatched points.
class Localizer {
 public:
  Localizer(const PipelineConfig& cfg, VoxelMap& map, const NavState& initial);

  /// Processes one body-frame scan. `imu` must cover the interval since the
  /// previous scan (the whole stream may be passed).
  FrameRecord process(const Scan& scan_body, std::span<const ImuSample> imu);

  const NavState& state() const { return state_; }
  const UpdateReport& last_update() const { return last_update_; }

 private:
  const PipelineConfig& cfg_;
  VoxelMap& map_;
  NavState state_;
  bool first_ = true;
  UpdateReport last_update_;
};

struct LocalizeResult {
  std::vector<TimedPose> trajectory;
  std::vector<FrameRecord> frames;
};

using FrameObserver =
    std::function<void(const FrameRecord&, const VoxelMap&, const UpdateReport&)>;

/// Runs every scan of the session through a Localizer over `map`.
LocalizeResult run_localize(const PipelineConfig& cfg, VoxelMap& map, const SessionData& session,
                            const FrameObserver& observer = {});

/// Map from a prior-map cloud.
VoxelMap load_map(const Scan& prior, const MapConfig& cfg);

/// Union of scans placed at their poses, downsampled with voxel (0 disables).
/// Throws CountMismatch when the counts differ.
Scan build_prior(const std::vector<Scan>& scans, const std::vector<Pose>& poses, double voxel);

struct LocalizeOutputs {
  std::filesystem::path trajectory;  // trajectory.txt (TUM)
  std::filesystem::path map;         // map.ply
  std::filesystem::path frame_log;   // frames.csv
};

/// File-level localize: reads the prior map and session, writes the outputs.
LocalizeOutputs run_localize_files(const PipelineConfig& cfg, const std::filesystem::path& prior_map,
                                   const std::filesystem::path& session_dir,
                                   const std::filesystem::path& out_dir,
                                   LocalizeResult* result = nullptr);

void write_frame_log(const std::filesystem::path& path, const std::vector<FrameRecord>& frames);

}  // namespace llloc
