#include "llloc/bench.hpp"

#include "llloc/errors.hpp"
#include "llloc/ioctree.hpp"
#include "llloc/pipeline.hpp"
#include "llloc/static_octree.hpp"
#include "llloc/voxel_map.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <unordered_set>

namespace llloc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// One block as seen by the list-based methods. Dedup reuses the i-Octree grid
// so every method holds the same retained points.
struct ListBlock {
  explicit ListBlock(const Box& bounds, const OctreeConfig& oc)
      : grid(bounds, oc), tree(oc.bucket_size, oc.min_extent) {}
  IOctree grid;  // only cell_of() is used
  std::unordered_set<std::uint64_t> cells;
  PointCloud points;
  StaticOctree tree;
  bool dirty = false;

  void insert(const Point3& p) {
    const auto c = grid.cell_of(p);
    const std::uint64_t key = (std::uint64_t(std::uint32_t(c[0])) << 42) |
                              (std::uint64_t(std::uint32_t(c[1])) << 21) | std::uint32_t(c[2]);
    if (cells.insert(key).second) {
      points.push_back(p);
      dirty = true;
    }
  }
};

template <typename Block>
using BlockTable = std::map<VoxelIndex, std::unique_ptr<Block>>;

template <typename Block, typename Make>
Block& block_for(BlockTable<Block>& table, const VoxelIndex& idx, Make&& make) {
  auto it = table.find(idx);
  if (it == table.end()) it = table.emplace(idx, make(idx)).first;
  return *it->second;
}

template <typename Table, typename Fn>
void for_blocks_in_ball(const Table& table, const Point3& q, double r, double s, Fn&& fn) {
  const VoxelIndex lo = voxel_index(q - Vec3::Constant(r), s);
  const VoxelIndex hi = voxel_index(q + Vec3::Constant(r), s);
  for (int x = lo.x; x <= hi.x; ++x) {
    for (int y = lo.y; y <= hi.y; ++y) {
      for (int z = lo.z; z <= hi.z; ++z) {
        auto it = table.find(VoxelIndex{x, y, z});
        if (it != table.end()) fn(*it->second);
      }
    }
  }
}

void finish(MethodTiming& m, double budget_ms) {
  if (m.frame_ms.empty()) return;
  double sum = 0.0;
  std::size_t over = 0;
  for (double t : m.frame_ms) {
    sum += t;
    over += t > budget_ms;
  }
  m.mean_ms = sum / static_cast<double>(m.frame_ms.size());
  m.over_budget_pct = 100.0 * static_cast<double>(over) / static_cast<double>(m.frame_ms.size());
}

using Results = std::vector<std::vector<Point3>>;

void canonicalize(Results& r) {
  for (auto& v : r) {
    std::sort(v.begin(), v.end(), [](const Point3& a, const Point3& b) {
      return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
  }
}

}  // namespace

BenchWorkload synthetic_workload(const BenchConfig& cfg, double s) {
  BenchWorkload w;
  w.name = "synthetic";
  w.radius = cfg.radius;
  std::mt19937_64 rng(cfg.seed);
  const double length = s * static_cast<double>(cfg.blocks);
  std::uniform_real_distribution<double> ux(0.0, length), uyz(0.0, s);
  auto draw = [&] { return Point3(ux(rng), uyz(rng), uyz(rng)); };
  const std::size_t total = cfg.blocks * cfg.points_per_block;
  // slight oversampling so dedup still leaves points_per_block per block
  for (std::size_t i = 0; i < total + total / 20; ++i) w.initial.push_back(draw());
  w.frames.resize(cfg.frames);
  for (auto& f : w.frames) {
    for (std::size_t i = 0; i < cfg.inserts_per_frame; ++i) f.inserts.push_back(draw());
    for (std::size_t i = 0; i < cfg.queries_per_frame; ++i) f.queries.push_back(draw());
  }
  return w;
}

BenchWorkload session_workload(const SessionData& session, const BenchConfig& cfg, double voxel) {
  if (session.scans.size() != session.ground_truth.size()) {
    throw Error(ErrorCode::CountMismatch, "bench workload needs one ground-truth pose per scan");
  }
  BenchWorkload w;
  w.name = session.name.empty() ? "session" : session.name;
  w.radius = cfg.radius;
  if (session.scans.empty()) return w;
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t k = 0; k < session.scans.size() && w.frames.size() < cfg.frames + 1; ++k) {
    PointCloud pts = voxel_downsample(session.scans[k].points, voxel);
    for (auto& p : pts) p = session.ground_truth[k].pose.apply(p);
    if (k == 0) {
      w.initial = std::move(pts);
      continue;
    }
    BenchFrame f;
    f.queries = pts;
    std::shuffle(f.queries.begin(), f.queries.end(), rng);
    if (f.queries.size() > cfg.queries_per_frame) f.queries.resize(cfg.queries_per_frame);
    f.inserts = std::move(pts);
    w.frames.push_back(std::move(f));
  }
  return w;
}

BenchReport bench_structures(const BenchWorkload& w, const MapConfig& mc, double budget_ms) {
  const double s = mc.resolution;
  const double r = w.radius;
  VoxelMap probe(mc);  // for padded block bounds
  BlockTable<IOctree> io_blocks;
  BlockTable<ListBlock> static_blocks, list_blocks;
  auto make_io = [&](const VoxelIndex& i) { return std::make_unique<IOctree>(probe.block_bounds(i), mc.octree); };
  auto make_list = [&](const VoxelIndex& i) { return std::make_unique<ListBlock>(probe.block_bounds(i), mc.octree); };

  BenchReport rep;
  rep.sequence = w.name;
  rep.ioctree.method = "ioctree";
  rep.traversal.method = "traverse";
  rep.static_octree.method = "static_octree";

  auto insert_all = [&](const PointCloud& pts, bool io, bool st, bool li) {
    for (const auto& p : pts) {
      const VoxelIndex idx = voxel_index(p, s);
      if (io) block_for(io_blocks, idx, make_io).insert_one(p);
      if (st) block_for(static_blocks, idx, make_list).insert(p);
      if (li) block_for(list_blocks, idx, make_list).insert(p);
    }
  };
  insert_all(w.initial, true, true, true);
  for (auto& [idx, b] : static_blocks) {
    b->tree.build(b->points);
    b->dirty = false;
  }

  // Result buffers keep their capacity across frames so allocation stays out of
  // the timings; the method order rotates per frame to spread cache effects.
  Results res_io, res_st, res_li;
  auto reset = [](Results& res, std::size_t n) {
    res.resize(n);
    for (auto& v : res) v.clear();
  };
  std::size_t frame_no = 0;
  for (const BenchFrame& f : w.frames) {
    reset(res_io, f.queries.size());
    reset(res_st, f.queries.size());
    reset(res_li, f.queries.size());

    auto run_io = [&] {
      const auto t0 = Clock::now();
      insert_all(f.inserts, true, false, false);
      for (std::size_t i = 0; i < f.queries.size(); ++i) {
        auto& out = res_io[i];
        for_blocks_in_ball(io_blocks, f.queries[i], r, s, [&](const IOctree& t) {
          t.for_each_in_radius(f.queries[i], r, [&](const TaggedPoint& tp) { out.push_back(tp.point); });
        });
      }
      rep.ioctree.frame_ms.push_back(ms_since(t0));
    };
    auto run_traversal = [&] {
      const auto t0 = Clock::now();
      insert_all(f.inserts, false, false, true);
      const double r2 = r * r;
      for (std::size_t i = 0; i < f.queries.size(); ++i) {
        auto& out = res_li[i];
        const Point3& q = f.queries[i];
        for_blocks_in_ball(list_blocks, q, r, s, [&](const ListBlock& b) {
          for (const auto& p : b.points) {
            if (squared_distance(p, q) < r2) out.push_back(p);
          }
        });
      }
      rep.traversal.frame_ms.push_back(ms_since(t0));
    };
    auto run_static = [&] {
      const auto t0 = Clock::now();
      insert_all(f.inserts, false, true, false);
      for (auto& [idx, b] : static_blocks) {
        if (!b->dirty) continue;
        b->tree.build(b->points);
        b->dirty = false;
      }
      for (std::size_t i = 0; i < f.queries.size(); ++i) {
        auto& out = res_st[i];
        for_blocks_in_ball(static_blocks, f.queries[i], r, s, [&](const ListBlock& b) {
          b.tree.for_each_in_radius(f.queries[i], r, [&](const Point3& p) { out.push_back(p); });
        });
      }
      rep.static_octree.frame_ms.push_back(ms_since(t0));
    };
    const std::array<std::function<void()>, 3> methods{run_io, run_traversal, run_static};
    for (std::size_t k = 0; k < 3; ++k) methods[(frame_no + k) % 3]();
    ++frame_no;

    canonicalize(res_io);
    canonicalize(res_st);
    canonicalize(res_li);
    for (std::size_t i = 0; i < f.queries.size(); ++i) {
      if (res_io[i] != res_st[i] || res_io[i] != res_li[i]) ++rep.mismatched_queries;
    }
    rep.queries += f.queries.size();
  }

  rep.min_block_points = std::numeric_limits<std::size_t>::max();
  for (const auto& [idx, b] : io_blocks) rep.min_block_points = std::min(rep.min_block_points, b->size());
  if (io_blocks.empty()) rep.min_block_points = 0;

  finish(rep.ioctree, budget_ms);
  finish(rep.traversal, budget_ms);
  finish(rep.static_octree, budget_ms);
  return rep;
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchReport>& reports) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "sequence,ioctree_mean_ms,ioctree_over_80ms_pct,traverse_mean_ms,traverse_over_80ms_pct,"
         "static_octree_mean_ms,static_octree_over_80ms_pct\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.2f,%.3f,%.2f,%.3f,%.2f\n", r.sequence.c_str(),
                  r.ioctree.mean_ms, r.ioctree.over_budget_pct, r.traversal.mean_ms,
                  r.traversal.over_budget_pct, r.static_octree.mean_ms,
                  r.static_octree.over_budget_pct);
    out << buf;
  }
}

}  // namespace llloc
