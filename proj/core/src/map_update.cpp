#include "llloc/map_update.hpp"

#include "llloc/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace llloc {

std::optional<double> match_distance(const Point3& q, const VoxelMap& map, const MapConfig& cfg) {
  std::vector<Neighbor> nbrs;
  map.radius_search(q, cfg.match_radius, TierFilter::static_only(), nbrs);
  if (nbrs.size() < cfg.match_min_neighbors) return std::nullopt;

  const std::size_t k = std::min(cfg.match_max_neighbors, nbrs.size());
  std::partial_sort(nbrs.begin(), nbrs.begin() + static_cast<std::ptrdiff_t>(k), nbrs.end(),
                    [&](const Neighbor& a, const Neighbor& b) {
                      const double da = squared_distance(a.point, q), db = squared_distance(b.point, q);
                      if (da != db) return da < db;
                      return std::lexicographical_compare(a.point.data(), a.point.data() + 3,
                                                          b.point.data(), b.point.data() + 3);
                    });
  PointCloud pts;
  pts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) pts.push_back(nbrs[i].point);
  // Only the shape test matters here; the spread of a whole neighborhood is
  // judged by match_max_distance instead.
  FitConfig fit;
  fit.min_neighbors = cfg.match_min_neighbors;
  fit.fit_tolerance = std::numeric_limits<double>::infinity();
  if (auto plane = fit_plane(pts, fit)) {
    return std::abs(plane->normal.dot(q) + plane->intercept);
  }
  if (auto line = fit_line(pts, fit)) {
    return line->direction.cross(q - line->anchor).norm();
  }
  // Neither shape fits (clutter, corners): fall back to the nearest neighbor.
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, squared_distance(p, q));
  return std::sqrt(best);
}

MatchPartition classify_matches(const Scan& scan_world, const VoxelMap& map, const MapConfig& cfg) {
  const auto n = static_cast<std::ptrdiff_t>(scan_world.points.size());
  std::vector<char> matched(scan_world.points.size(), 0);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto d = match_distance(scan_world.points[i], map, cfg);
    matched[i] = d && *d <= cfg.match_max_distance;
  }
  MatchPartition out;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    (matched[i] ? out.matched : out.unmatched).push_back(scan_world.points[i]);
  }
  return out;
}

UpdateReport accumulate_and_promote(VoxelMap& map, std::span<const Point3> unmatched,
                                    const MapConfig& cfg) {
  UpdateReport report;
  report.points_buffered = unmatched.size();
  if (unmatched.empty()) return report;

  // Only blocks that just received points can newly cross the threshold.
  for (const VoxelIndex& idx : map.insert_temporary(unmatched)) {
    VoxelBlock& block = *map.find(idx);
    if (block.temp_points().size() < cfg.promote_threshold) continue;

    PointCloud promoted = block.take_temporary();
    report.blocks_promoted.push_back(idx);
    const std::size_t prior_size = block.prior_points().size();
    const std::size_t static_size = block.static_points().size() + promoted.size();
    if (block.is_prior_block() && static_size > 2 * prior_size) {
      block.demote(std::move(promoted));
      report.blocks_demoted.push_back(idx);
      ++report.trees_rebuilt;
    } else {
      block.append_static(promoted);
    }
  }
  return report;
}

Scan export_static_map(const VoxelMap& map) {
  Scan out;
  out.frame = Frame::Map;
  for (const VoxelIndex& idx : map.sorted_indices()) {
    const auto& pts = map.find(idx)->static_points();
    out.points.insert(out.points.end(), pts.begin(), pts.end());
  }
  return out;
}

}  // namespace llloc
