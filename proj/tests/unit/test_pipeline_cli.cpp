#include "doctest.h"
#include "llloc/bench.hpp"
#include "llloc/config.hpp"
#include "llloc/errors.hpp"
#include "llloc/io.hpp"
#include "llloc/map_update.hpp"
#include "llloc/metrics.hpp"
#include "llloc/pipeline.hpp"
#include "llloc/scenarios.hpp"
#include "oracles.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace llloc;
namespace fs = std::filesystem;

namespace {

using Bag = std::multiset<std::array<double, 3>>;

Bag bag(const PointCloud& pts) {
  Bag b;
  for (const auto& p : pts) b.insert(oracle::key(p));
  return b;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("llloc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

// A small room with a few crates, enough structure to pin all six DOF.
WorldSpec small_world() {
  WorldSpec w;
  w.surfaces.push_back(Surface::box("room", Point3(0, 0, 0.5), Point3(16, 10, 4.5)));
  w.surfaces.push_back(Surface::box("crate_a", Point3(4, 2, 0.5), Point3(5, 3.5, 2.0)));
  w.surfaces.push_back(Surface::box("crate_b", Point3(10, 6, 0.5), Point3(11.5, 7, 3.0)));
  w.surfaces.push_back(Surface::box("pillar", Point3(7.5, 7.5, 0.5), Point3(8, 8, 4.5)));
  w.seed = 4;
  return w;
}

struct SmallRun {
  PipelineConfig cfg = scenario_pipeline_config();
  SessionData prior;
  SessionData test;
  Scan prior_map;

  SmallRun() {
    const WorldSpec w = small_world();
    const SplineTrajectory survey = planar_path({{3, 5}, {8, 4}, {13, 5}, {8, 6}, {3, 5}}, 2.0);
    prior = simulate_session(w, survey, cfg.sensor, 1, "prior", "small");
    const SplineTrajectory path = planar_path({{4, 5}, {9, 4.5}, {12, 6}}, 1.5);
    test = simulate_session(w, path, cfg.sensor, 2, "test", "small");
    std::vector<Pose> poses;
    for (const auto& g : prior.ground_truth) poses.push_back(g.pose);
    prior_map = build_prior(prior.scans, poses, cfg.prior_voxel);
  }
};

const SmallRun& small_run() {
  static const SmallRun run;
  return run;
}

#ifdef LLLOC_CLI_PATH
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + LLLOC_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
#ifdef WEXITSTATUS
  return WEXITSTATUS(rc);
#else
  return rc;
#endif
}
#endif

}  // namespace

TEST_SUITE("pipeline_cli") {
  TEST_CASE("config round trip and strict keys") {
    PipelineConfig c = default_pipeline_config();
    c.map.promote_threshold = 77;
    c.registration.delta = 2.5e-3;
    c.registration.residual_mode = ResidualMode::RawSum;
    c.sensor.fov_mode = FovMode::Narrow;
    c.sensor.theta_l = 1.2;
    c.phi1_factor = 0.7;
    c.map_encoding = PlyEncoding::BinaryFloat32;
    c.initial_pose = Pose{so3_exp(Vec3(0, 0, 0.4)), Vec3(1, 2, 3)};
    c.finalize();
    const PipelineConfig back = parse_config(dump_config(c));
    CHECK(dump_config(back) == dump_config(c));
    CHECK(back.map.promote_threshold == 77);
    CHECK(back.loading.theta_l == doctest::Approx(1.2));
    CHECK(back.loading.fov_mode == FovMode::Narrow);
    CHECK(back.loading.phi1 == doctest::Approx(0.7 * back.sensor.d_max));
    CHECK(back.loading.delta == doctest::Approx(2.5e-3));
    REQUIRE(back.initial_pose);
    CHECK(translation_error(*back.initial_pose, *c.initial_pose) < 1e-12);

    CHECK(code_of([] { parse_config(R"({"map": {"resolutoin": 3}})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_config(R"({"mapp": {}})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_config(R"({"map": {"resolution": -1}})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_config("{not json"); }) == ErrorCode::InvalidConfig);
    // missing keys keep defaults
    CHECK(dump_config(parse_config("{}")) == dump_config(default_pipeline_config()));
  }

  TEST_CASE("shipped example config lists every default") {
    const fs::path example = fs::path(LLLOC_SOURCE_DIR) / "configs" / "example.json";
    REQUIRE(fs::exists(example));
    const auto shipped = nlohmann::json::parse(slurp(example));
    const auto defaults = nlohmann::json::parse(dump_config(default_pipeline_config()));
    CHECK(shipped == defaults);
    const fs::path scen = fs::path(LLLOC_SOURCE_DIR) / "configs" / "scenario.json";
    CHECK(dump_config(load_config(scen)) == dump_config(scenario_pipeline_config()));
  }

  TEST_CASE("ply round trips") {
    const fs::path dir = scratch("ply");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    Scan s;
    s.timestamp = 12.3456789;
    for (int i = 0; i < 1000; ++i) s.points.emplace_back(u(rng), u(rng), u(rng));
    write_ply(dir / "a.ply", s);
    const Scan back = read_ply(dir / "a.ply");
    CHECK(bag(back.points) == bag(s.points));
    CHECK(back.timestamp == s.timestamp);

    write_ply(dir / "b.ply", s, PlyEncoding::BinaryFloat32);
    const Scan fb = read_ply(dir / "b.ply");
    REQUIRE(fb.points.size() == s.points.size());
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      CHECK((fb.points[i] - s.points[i]).norm() < 1e-4);
    }

    write_ply(dir / "empty.ply", Scan{});
    CHECK(read_ply(dir / "empty.ply").points.empty());
    CHECK(code_of([&] { read_ply(dir / "missing.ply"); }) == ErrorCode::Io);
  }

  TEST_CASE("tum round trip") {
    const fs::path dir = scratch("tum");
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<TimedPose> poses;
    for (int i = 0; i < 50; ++i) {
      poses.push_back({0.1 * i, Pose{so3_exp(Vec3(u(rng), u(rng), u(rng))), Vec3(u(rng), u(rng), u(rng))}});
    }
    write_tum(dir / "t.txt", poses);
    const auto back = read_tum(dir / "t.txt");
    REQUIRE(back.size() == poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
      CHECK(back[i].timestamp == poses[i].timestamp);
      CHECK(translation_error(back[i].pose, poses[i].pose) < 1e-12);
      CHECK(rotation_error(back[i].pose, poses[i].pose) < 1e-12);
    }
    const std::string line = format_tum_line({1.5, Pose::identity()});
    std::istringstream fields(line);
    std::vector<double> v;
    for (double x; fields >> x;) v.push_back(x);
    CHECK(v == std::vector<double>{1.5, 0, 0, 0, 0, 0, 0, 1});
  }

  TEST_CASE("build_prior examples") {
    Scan one;
    one.points = {Point3(1, 2, 3), Point3(-1, 0.5, 2)};
    const Scan m = build_prior({one}, {Pose::identity()}, 0.0);
    CHECK(bag(m.points) == bag(one.points));
    CHECK(m.frame == Frame::Map);

    CHECK(code_of([&] { build_prior({one, one}, {Pose::identity()}, 0.0); }) == ErrorCode::CountMismatch);

    // overlapping scans: the union is no bigger than one point per occupied voxel
    const SmallRun& run = small_run();
    const double voxel = run.cfg.prior_voxel;
    std::set<std::tuple<long, long, long>> cells;
    for (std::size_t i = 0; i < run.prior.scans.size(); ++i) {
      for (const auto& p : run.prior.scans[i].points) {
        const Point3 w = run.prior.ground_truth[i].pose.apply(p);
        cells.insert({static_cast<long>(std::floor(w.x() / voxel)), static_cast<long>(std::floor(w.y() / voxel)),
                      static_cast<long>(std::floor(w.z() / voxel))});
      }
    }
    CHECK(run.prior_map.points.size() == cells.size());

    // save / load keeps the multiset and block layout
    const fs::path dir = scratch("prior");
    write_ply(dir / "map.ply", run.prior_map);
    const Scan back = read_ply(dir / "map.ply");
    CHECK(bag(back.points) == bag(run.prior_map.points));
    const VoxelMap a = load_map(run.prior_map, MapConfig{});
    const VoxelMap b = load_map(back, MapConfig{});
    CHECK(a.sorted_indices() == b.sorted_indices());
  }

  TEST_CASE("eval_ape examples") {
    std::vector<TimedPose> gt;
    for (int i = 0; i < 20; ++i) gt.push_back({0.1 * i, Pose{Rotation::Identity(), Vec3(i, 0, 0)}});
    const auto same = eval_ape(gt, gt);
    CHECK(same.rmse == 0.0);
    CHECK(same.max == 0.0);
    CHECK(same.associated == gt.size());

    auto shifted = gt;
    for (auto& p : shifted) p.pose.translation += Vec3(0, 1, 0);
    const auto off = eval_ape(shifted, gt);
    CHECK(off.rmse == doctest::Approx(1.0));
    CHECK(off.max == doctest::Approx(1.0));
    CHECK(eval_ape(shifted, gt, true).rmse < 1e-9);

    std::vector<TimedPose> late = gt;
    for (auto& p : late) p.timestamp += 100.0;
    CHECK(code_of([&] { eval_ape(late, gt); }) == ErrorCode::NoOverlap);

    // random pair against the independent script
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0), jitter(-0.004, 0.004);
    std::vector<TimedPose> est, ref;
    std::vector<oracle::StampedPosition> est_o, ref_o;
    for (int i = 0; i < 300; ++i) {
      const Vec3 p(u(rng), u(rng), u(rng));
      ref.push_back({0.05 * i, Pose{Rotation::Identity(), p}});
      ref_o.push_back({0.05 * i, p});
      if (i % 7 == 3) continue;  // gaps in the estimate
      const Vec3 q = p + Vec3(jitter(rng), jitter(rng), jitter(rng)) * 10.0;
      const double t = 0.05 * i + jitter(rng);
      est.push_back({t, Pose{Rotation::Identity(), q}});
      est_o.push_back({t, q});
    }
    const auto got = eval_ape(est, ref);
    const auto [rmse, mx, n] = oracle::ape(est_o, ref_o);
    CHECK(got.associated == n);
    CHECK(got.rmse == doctest::Approx(rmse).epsilon(1e-12));
    CHECK(got.max == doctest::Approx(mx).epsilon(1e-12));
  }

  TEST_CASE("zero-scan session leaves the map unchanged") {
    const SmallRun& run = small_run();
    VoxelMap map = load_map(run.prior_map, run.cfg.map);
    const Scan before = export_static_map(map);
    SessionData empty;
    empty.initial = run.test.initial;
    const LocalizeResult res = run_localize(run.cfg, map, empty);
    CHECK(res.trajectory.empty());
    CHECK(res.frames.empty());
    CHECK(bag(export_static_map(map).points) == bag(before.points));
  }

  TEST_CASE("small session localizes and writes its outputs") {
    const SmallRun& run = small_run();
    const fs::path dir = scratch("localize");
    write_ply(dir / "prior.ply", run.prior_map);
    write_session(dir / "session", run.test);
    const SessionData reread = read_session(dir / "session");
    CHECK(reread.scans.size() == run.test.scans.size());
    CHECK(reread.imu.size() == run.test.imu.size());

    LocalizeResult res;
    const auto outs = run_localize_files(run.cfg, dir / "prior.ply", dir / "session", dir / "out", &res);
    CHECK(res.frames.size() == run.test.scans.size());
    CHECK(fs::exists(outs.trajectory));
    CHECK(fs::exists(outs.map));
    CHECK(fs::exists(outs.frame_log));
    CHECK(read_tum(outs.trajectory).size() == res.trajectory.size());
    const auto ape = eval_ape(res.trajectory, run.test.ground_truth);
    CHECK(ape.rmse <= 0.05);
    for (const auto& f : res.frames) {
      CHECK(f.status == "ok");
      CHECK(f.processing_ms >= 0.0);
      CHECK(f.matched + f.unmatched > 0);
    }
    // one header plus one row per frame
    std::ifstream log(outs.frame_log);
    std::size_t lines = 0;
    for (std::string l; std::getline(log, l);) ++lines;
    CHECK(lines == res.frames.size() + 1);

    // same inputs, same bytes
    run_localize_files(run.cfg, dir / "prior.ply", dir / "session", dir / "out2");
    CHECK(slurp(dir / "out" / "trajectory.txt") == slurp(dir / "out2" / "trajectory.txt"));
    CHECK(slurp(dir / "out" / "map.ply") == slurp(dir / "out2" / "map.ply"));

    // count mismatch between scans and ground truth is rejected
    fs::remove(dir / "session" / "scans" / "000000.ply");
    CHECK(code_of([&] { read_session(dir / "session"); }) == ErrorCode::CountMismatch);
  }

  TEST_CASE("bench methods agree on tiny blocks") {
    BenchConfig bc;
    bc.frames = 5;
    bc.queries_per_frame = 200;
    bc.blocks = 3;
    bc.points_per_block = 40;
    bc.inserts_per_frame = 5;
    const BenchWorkload w = synthetic_workload(bc, 5.0);
    const BenchReport r = bench_structures(w, MapConfig{}, 80.0);
    CHECK(r.outputs_identical());
    CHECK(r.queries == bc.frames * bc.queries_per_frame);
    CHECK(r.min_block_points <= 50);
    CHECK(r.ioctree.frame_ms.size() == bc.frames);

    const fs::path dir = scratch("bench");
    write_bench_csv(dir / "t.csv", {r});
    std::ifstream in(dir / "t.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header ==
          "sequence,ioctree_mean_ms,ioctree_over_80ms_pct,traverse_mean_ms,traverse_over_80ms_pct,"
          "static_octree_mean_ms,static_octree_over_80ms_pct");
    CHECK(std::count(row.begin(), row.end(), ',') == 6);
  }

#ifdef LLLOC_CLI_PATH
  TEST_CASE("cli smoke test") {
    const SmallRun& run = small_run();
    const fs::path dir = scratch("cli");
    write_session(dir / "session", run.test);
    std::ofstream(dir / "config.json") << dump_config(run.cfg);

    CHECK(run_cli("--help", dir / "help.log") == 0);
    CHECK(run_cli("simulate nowhere --out \"" + (dir / "x").string() + "\"", dir / "sim.log") != 0);
    CHECK(slurp(dir / "sim.log").find("UnknownScenario") != std::string::npos);

    // build a prior from the test session itself and localize against it
    CHECK(run_cli("build-prior --scans \"" + (dir / "session" / "scans").string() + "\" --poses \"" +
                      (dir / "session" / "groundtruth.txt").string() + "\" --out \"" +
                      (dir / "prior.ply").string() + "\"",
                  dir / "bp.log") == 0);
    REQUIRE(fs::exists(dir / "prior.ply"));
    CHECK(run_cli("localize --config \"" + (dir / "config.json").string() + "\" --prior \"" +
                      (dir / "prior.ply").string() + "\" --session \"" + (dir / "session").string() +
                      "\" --out \"" + (dir / "out").string() + "\"",
                  dir / "loc.log") == 0);
    REQUIRE(fs::exists(dir / "out" / "trajectory.txt"));
    CHECK(run_cli("eval --traj \"" + (dir / "out" / "trajectory.txt").string() + "\" --gt \"" +
                      (dir / "session" / "groundtruth.txt").string() + "\"",
                  dir / "eval.log") == 0);
    CHECK(slurp(dir / "eval.log").find("rmse") != std::string::npos);

    PipelineConfig small = run.cfg;
    small.bench.frames = 3;
    small.bench.points_per_block = 300;
    small.bench.queries_per_frame = 100;
    std::ofstream(dir / "bench.json") << dump_config(small);
    CHECK(run_cli("bench --config \"" + (dir / "bench.json").string() + "\" --workload synthetic --out \"" +
                      (dir / "bench.csv").string() + "\"",
                  dir / "bench.log") == 0);
    CHECK(fs::exists(dir / "bench.csv"));
    CHECK(run_cli("eval --traj \"" + (dir / "nope.txt").string() + "\" --gt \"" +
                      (dir / "nope.txt").string() + "\"",
                  dir / "bad.log") != 0);
  }
#endif
}
