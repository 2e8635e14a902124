// Micro benchmarks for the block-level search structures.

#include "llloc/ioctree.hpp"
#include "llloc/static_octree.hpp"
#include "llloc/voxel_map.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace llloc;

namespace {

PointCloud uniform_block(std::size_t n, std::uint64_t seed, double side = 5.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  PointCloud out(n);
  for (auto& p : out) p = Point3(u(rng), u(rng), u(rng));
  return out;
}

const Box kBlock{Point3::Zero(), Point3::Constant(5.0)};

void BM_IOctreeInsert(benchmark::State& state) {
  const auto pts = uniform_block(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    IOctree t(kBlock);
    benchmark::DoNotOptimize(t.insert(pts));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IOctreeInsert)->Arg(1000)->Arg(8000)->Arg(32000);

void BM_IOctreeIncrementalInsert(benchmark::State& state) {
  const auto base = uniform_block(8000, 2);
  const auto extra = uniform_block(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    state.PauseTiming();
    IOctree t(kBlock);
    t.insert(base);
    state.ResumeTiming();
    benchmark::DoNotOptimize(t.insert(extra));
  }
}
BENCHMARK(BM_IOctreeIncrementalInsert)->Arg(100)->Arg(400);

void BM_StaticOctreeBuild(benchmark::State& state) {
  const auto pts = uniform_block(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    StaticOctree s;
    s.build(pts);
    benchmark::DoNotOptimize(s.size());
  }
}
BENCHMARK(BM_StaticOctreeBuild)->Arg(1000)->Arg(8000)->Arg(32000);

void BM_IOctreeRadius(benchmark::State& state) {
  IOctree t(kBlock);
  t.insert(uniform_block(8000, 4));
  const auto queries = uniform_block(1024, 5);
  const double r = static_cast<double>(state.range(0)) / 10.0;
  std::size_t i = 0, hits = 0;
  for (auto _ : state) {
    t.for_each_in_radius(queries[i++ & 1023], r, [&](const TaggedPoint&) { ++hits; });
  }
  benchmark::DoNotOptimize(hits);
}
BENCHMARK(BM_IOctreeRadius)->Arg(5)->Arg(10)->Arg(20);

void BM_StaticOctreeRadius(benchmark::State& state) {
  const auto pts = uniform_block(8000, 4);
  StaticOctree s;
  s.build(pts);
  const auto queries = uniform_block(1024, 5);
  const double r = static_cast<double>(state.range(0)) / 10.0;
  std::size_t i = 0, hits = 0;
  for (auto _ : state) {
    s.for_each_in_radius(queries[i++ & 1023], r, [&](const Point3&) { ++hits; });
  }
  benchmark::DoNotOptimize(hits);
}
BENCHMARK(BM_StaticOctreeRadius)->Arg(5)->Arg(10)->Arg(20);

void BM_TraversalRadius(benchmark::State& state) {
  const auto pts = uniform_block(8000, 4);
  const auto queries = uniform_block(1024, 5);
  const double r = static_cast<double>(state.range(0)) / 10.0;
  std::size_t i = 0, hits = 0;
  for (auto _ : state) {
    const Point3& q = queries[i++ & 1023];
    for (const auto& p : pts) hits += squared_distance(p, q) < r * r;
  }
  benchmark::DoNotOptimize(hits);
}
BENCHMARK(BM_TraversalRadius)->Arg(5)->Arg(10)->Arg(20);

void BM_VoxelMapScanSearch(benchmark::State& state) {
  VoxelMap m;
  Scan prior;
  prior.frame = Frame::Map;
  prior.points = uniform_block(40000, 6, 20.0);
  m.load_prior_map(prior);
  const auto scan = uniform_block(static_cast<std::size_t>(state.range(0)), 7, 20.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.radius_search_scan(scan, 1.0, TierFilter::static_only()));
  }
}
BENCHMARK(BM_VoxelMapScanSearch)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
