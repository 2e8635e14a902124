#pragma once

#include "llloc/simulator.hpp"

#include <vector>

namespace llloc {

struct ApeResult {
  double rmse = 0.0;  // m
  double max = 0.0;   // m
  std::size_t associated = 0;
  std::vector<double> timestamps;  // of the estimate, per associated pair
  std::vector<double> errors;      // translational error per associated pair
};

/// Translational APE. Each estimate pose is paired with the ground-truth pose
/// nearest in time if they are at most max_dt apart. With align, the estimate
/// is first rigidly aligned (Umeyama, no scale) to the ground truth.
/// Throws NoOverlap when nothing associates.
ApeResult eval_ape(const std::vector<TimedPose>& estimate,
                   const std::vector<TimedPose>& ground_truth, bool align = false,
                   double max_dt = 0.01);

/// Index into sorted poses of the one nearest to t, or -1 if none within max_dt.
std::ptrdiff_t associate(const std::vector<TimedPose>& poses, double t, double max_dt);

/// Path length of a trajectory between indices [begin, end].
double path_length(const std::vector<TimedPose>& poses, std::size_t begin, std::size_t end);

}  // namespace llloc
