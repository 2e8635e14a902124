#pragma once

#include "llloc/types.hpp"
#include "llloc/voxel_map.hpp"

#include <vector>

namespace llloc {

struct MatchPartition {
  PointCloud matched;
  PointCloud unmatched;
};

struct UpdateReport {
  std::size_t points_buffered = 0;
  std::vector<VoxelIndex> blocks_promoted;
  std::vector<VoxelIndex> blocks_demoted;  // always a subset of blocks_promoted
  std::size_t trees_rebuilt = 0;
};

/// Distance from q to the plane (or line) fitted on its M^s neighbors, or
/// nullopt when fewer than match_min_neighbors lie within match_radius.
std::optional<double> match_distance(const Point3& q, const VoxelMap& map, const MapConfig& cfg);

/// Splits a map-frame scan into points explained by M^s and the rest.
/// Order within each partition follows the scan.
MatchPartition classify_matches(const Scan& scan_world, const VoxelMap& map, const MapConfig& cfg);

/// Buffers unmatched points into M^t, promotes full buffers into M^s and
/// demotes prior blocks whose promoted content outgrows M^p.
UpdateReport accumulate_and_promote(VoxelMap& map, std::span<const Point3> unmatched,
                                    const MapConfig& cfg);

/// Concatenated M^s of every block in lexicographic block order.
Scan export_static_map(const VoxelMap& map);

}  // namespace llloc
