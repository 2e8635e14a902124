#pragma once

#include "llloc/features.hpp"
#include "llloc/map_loading.hpp"
#include "llloc/types.hpp"
#include "llloc/voxel_map.hpp"

#include <vector>

namespace llloc {

enum class ResidualMode {
  MeanPerCorrespondence,  // converged when sum / N_corr <= delta
  RawSum,                 // converged when sum <= delta
};

struct RegistrationConfig {
  double search_radius = 1.0;  // m
  std::size_t min_neighbors = 5;
  std::size_t max_neighbors = 8;  // nearest neighbors kept for feature fitting
  double planarity_ratio = 0.1;
  double linearity_ratio = 0.25;
  double fit_tolerance = 0.1;  // m
  int max_iterations = 10;
  double delta = 1e-4;
  ResidualMode residual_mode = ResidualMode::MeanPerCorrespondence;
  // Levenberg-Marquardt damping, scaled by diag(J^T J)
  double lambda_init = 1e-6;
  double lambda_min = 1e-12;
  double lambda_max = 1e6;
  int max_damping_attempts = 10;

  FitConfig fit() const {
    return FitConfig{min_neighbors, planarity_ratio, linearity_ratio, fit_tolerance};
  }
  void validate() const;
};

struct Correspondence {
  std::size_t point_index = 0;  // into the scan
  Feature feature;
};

struct IterationTrace {
  int k = 0;
  bool augmented_round = false;
  double residual = 0.0;  // sum of squared weighted residuals at the iteration's pose
  std::size_t correspondences = 0;
  double cost_before_step = 0.0;  // same correspondences, before/after the accepted step
  double cost_after_step = 0.0;
  bool step_accepted = false;
};

struct RegistrationResult {
  Pose pose;                   // body -> map
  double final_residual = 0.0; // value compared with delta (mean or raw, per residual_mode)
  double raw_residual = 0.0;   // sum of squared weighted residuals
  int iterations = 0;
  bool converged = false;
  bool augmented = false;
  std::size_t correspondences_used = 0;
  std::vector<IterationTrace> trace;
};

/// Searches the admitted map tiers around every point, fits a plane (or a
/// line, when no plane fits) on the nearest neighbors and weights it by the
/// lowest tier weight among them. Points without a feature are skipped.
std::vector<Correspondence> build_correspondences(std::span<const Point3> world_points,
                                                  const VoxelMap& map, const TierFilter& filter,
                                                  const RegistrationConfig& cfg);

/// Sum of squared weighted residuals of body points under T.
double total_residual(const Pose& T, std::span<const Point3> body_points,
                      std::span<const Correspondence> corr);

/// Damped Gauss-Newton scan-to-map registration with local-map reloading each
/// iteration. When the convergence test reports divergence the local map is
/// reloaded once with augmentation (cases c/d) and a second round runs.
///
/// Throws NoCorrespondences (nothing admitted near the scan, or no feature
/// for any point) and SolverSingular (rank-deficient normal equations). Callers fall back to the predicted pose on any of these.
std::pair<RegistrationResult, LoadingDecision> register_scan(const Scan& scan_body,
                                                             const Pose& predicted,
                                                             const VoxelMap& map,
                                                             const LoadingConfig& loading,
                                                             const RegistrationConfig& cfg);

}  // namespace llloc
