#include "llloc/metrics.hpp"

#include "llloc/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace llloc {

std::ptrdiff_t associate(const std::vector<TimedPose>& poses, double t, double max_dt) {
  auto it = std::lower_bound(poses.begin(), poses.end(), t,
                             [](const TimedPose& p, double v) { return p.timestamp < v; });
  std::ptrdiff_t best = -1;
  double best_dt = max_dt;
  for (auto c : {it, it == poses.begin() ? poses.end() : std::prev(it)}) {
    if (c == poses.end()) continue;
    const double d = std::abs(c->timestamp - t);
    if (d <= best_dt) {
      best_dt = d;
      best = c - poses.begin();
    }
  }
  return best;
}

ApeResult eval_ape(const std::vector<TimedPose>& estimate,
                   const std::vector<TimedPose>& ground_truth, bool align, double max_dt) {
  std::vector<TimedPose> gt = ground_truth;
  std::stable_sort(gt.begin(), gt.end(),
                   [](const TimedPose& a, const TimedPose& b) { return a.timestamp < b.timestamp; });

  std::vector<Vec3> est_pts, gt_pts;
  ApeResult out;
  for (const auto& e : estimate) {
    const auto j = associate(gt, e.timestamp, max_dt);
    if (j < 0) continue;
    est_pts.push_back(e.pose.translation);
    gt_pts.push_back(gt[j].pose.translation);
    out.timestamps.push_back(e.timestamp);
  }
  if (est_pts.empty()) throw Error(ErrorCode::NoOverlap, "no estimate pose associates with ground truth");

  if (align && est_pts.size() >= 3) {
    Eigen::Matrix3Xd src(3, est_pts.size()), dst(3, gt_pts.size());
    for (std::size_t i = 0; i < est_pts.size(); ++i) {
      src.col(static_cast<Eigen::Index>(i)) = est_pts[i];
      dst.col(static_cast<Eigen::Index>(i)) = gt_pts[i];
    }
    const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
    for (auto& p : est_pts) p = T.topLeftCorner<3, 3>() * p + T.topRightCorner<3, 1>();
  }

  double sum2 = 0.0;
  for (std::size_t i = 0; i < est_pts.size(); ++i) {
    const double e = (est_pts[i] - gt_pts[i]).norm();
    out.errors.push_back(e);
    sum2 += e * e;
    out.max = std::max(out.max, e);
  }
  out.associated = est_pts.size();
  out.rmse = std::sqrt(sum2 / static_cast<double>(est_pts.size()));
  return out;
}

double path_length(const std::vector<TimedPose>& poses, std::size_t begin, std::size_t end) {
  double len = 0.0;
  for (std::size_t i = begin + 1; i <= end && i < poses.size(); ++i) {
    len += (poses[i].pose.translation - poses[i - 1].pose.translation).norm();
  }
  return len;
}

}  // namespace llloc
