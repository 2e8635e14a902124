#pragma once

#include "llloc/config.hpp"
#include "llloc/simulator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace llloc {

struct BenchFrame {
  PointCloud inserts;  // map-frame points added before the frame's queries
  PointCloud queries;
};

struct BenchWorkload {
  std::string name;
  PointCloud initial;  // map content before the first frame
  std::vector<BenchFrame> frames;
  double radius = 1.0;
};

struct MethodTiming {
  std::string method;
  std::vector<double> frame_ms;  // update + search per frame
  double mean_ms = 0.0;
  double over_budget_pct = 0.0;
};

struct BenchReport {
  std::string sequence;
  MethodTiming ioctree;
  MethodTiming traversal;
  MethodTiming static_octree;
  std::size_t queries = 0;
  std::size_t mismatched_queries = 0;  // result sets that differ between methods
  std::size_t min_block_points = 0;    // smallest searched block at the end
  bool outputs_identical() const { return mismatched_queries == 0; }
};

/// Random points in a row of blocks plus uniformly spread inserts and queries.
BenchWorkload synthetic_workload(const BenchConfig& cfg, double resolution);

/// Scans placed at their ground-truth poses: the first scan seeds the map and
/// every later scan is inserted and queried.
BenchWorkload session_workload(const SessionData& session, const BenchConfig& cfg, double voxel);

/// Runs the workload through blocks backed by (a) i-Octrees with incremental
/// insertion, (b) static octrees rebuilt whenever their block changes and
/// (c) plain point lists searched linearly. Every method keeps the same
/// downsampled point set, and result sets are compared query by query.
BenchReport bench_structures(const BenchWorkload& workload, const MapConfig& map_cfg,
                             double budget_ms);

/// Columns: sequence, then mean ms and % over budget for i-Octree, traverse,
/// static Octree.
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchReport>& reports);

}  // namespace llloc
