#pragma once

#include "llloc/types.hpp"
#include "llloc/voxel_map.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace llloc {

enum class FovMode { Narrow, Wide };

struct LoadingConfig {
  double phi1 = 18.0;  // m, effective distance outside prior blocks (0.6 d_max)
  double phi2 = 6.0;   // m, effective distance inside prior blocks (0.2 d_max)
  double theta_l = 2.0 * M_PI;  // horizontal field of view, rad
  double d_min = 0.5;           // m
  double d_max = 30.0;          // m
  FovMode fov_mode = FovMode::Wide;
  double delta = 1e-3;  // convergence threshold on the registration residual
  int max_converge_iters = 10;
  double w_n = 1.0;  // normal weight
  double w_g = 2.0;  // greater weight for prior points
  double w_l = 0.5;  // lower weight for temporary points

  /// Throws InvalidConfig when an invariant is violated.
  void validate() const;
};

/// Outcome of the registration convergence test.
enum class ConvergenceFlag : std::uint8_t {
  Diverged = 0,   // residual above threshold after the iteration cap
  Continue = 1,   // residual above threshold, keep iterating
  Converged = 2,  // residual at or below threshold
};

enum class LoadingCase : char { A = 'a', B = 'b', C = 'c', D = 'd' };

struct LoadingDecision {
  LoadingCase case_id = LoadingCase::A;
  int H = 0;
  double phi_star = 0.0;
  double rho = 0.0;
  std::int64_t tau = 0;
  std::int64_t kappa = 0;
  std::int64_t n = 0;
  TierFilter tier_filter;
  bool augmented = false;
};

/// Provenance of one slice of the local map: a block and the tier admitted from it.
struct LocalMapEntry {
  VoxelIndex block;
  Tier tier = Tier::Static;
  double weight = 1.0;
  std::size_t size = 0;  // admitted points in this slice
};

/// The per-scan working subset of the map. Points are not copied; each entry
/// names a block/tier slice that the decision's tier filter admits.
struct LocalMap {
  std::vector<LocalMapEntry> entries;  // non-empty slices, sorted by block index, then tier

  std::size_t total_points() const;
  /// Materializes (point, weight) pairs for every admitted slice.
  std::vector<Neighbor> points(const VoxelMap& map) const;
};

/// 0 if the robot's block is a prior block, 1 otherwise.
int heaviside(const VoxelIndex& robot_block, const VoxelMap& map);

double effective_distance(int H, const LoadingConfig& cfg);

/// Narrow-FoV coverage ratio, clamped to [0, 1]. Throws DegenerateFoV.
double ratio_narrow(double phi_star, int H, const LoadingConfig& cfg);

/// Wide-FoV coverage ratio (circular segment over disk). Throws OutOfRange if
/// phi_star lies outside [0, d_max].
double ratio_wide(double phi_star, const LoadingConfig& cfg);

/// floor(n * rho * s).
std::int64_t threshold_tau(std::int64_t n, double rho, double s);

ConvergenceFlag convergence_flag(double residual, int k, const LoadingConfig& cfg);

/// Tier filter and weights for one of the four loading cases.
TierFilter tier_filter_for(LoadingCase c, bool augmented, const LoadingConfig& cfg);

/// Case selection as a pure function of (H, kappa >= tau).
LoadingCase select_case(int H, bool kappa_reaches_tau);

/// Chooses the local map for a scan already transformed into the map frame.
/// `feedback` carries the convergence outcome of a previous registration
/// round; Diverged enables augmentation in cases c and d.
/// Throws EmptyLocalMap when nothing is admitted near the scan.
std::pair<LoadingDecision, LocalMap> select_local_map(const Scan& scan_world,
                                                      const Pose& robot_pose,
                                                      const VoxelMap& map,
                                                      const LoadingConfig& cfg,
                                                      std::optional<ConvergenceFlag> feedback = {});

/// Same decision without materializing provenance; used inside registration loops.
LoadingDecision decide_loading(const Scan& scan_world, const Pose& robot_pose, const VoxelMap& map,
                               const LoadingConfig& cfg,
                               std::optional<ConvergenceFlag> feedback = {});

LocalMap collect_local_map(const Scan& scan_world, const VoxelMap& map, const TierFilter& filter);

const char* to_string(LoadingCase c);

}  // namespace llloc
