// llloc command line: simulate, build-prior, localize, eval, bench, run-scenario, dump-config.

#include "llloc/bench.hpp"
#include "llloc/config.hpp"
#include "llloc/errors.hpp"
#include "llloc/io.hpp"
#include "llloc/metrics.hpp"
#include "llloc/pipeline.hpp"
#include "llloc/scenarios.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace llloc;

namespace {

PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? scenario_pipeline_config() : load_config(path);
}

void print_ape(const ApeResult& ape) {
  std::printf("associated %zu  rmse %.6f m  max %.6f m\n", ape.associated, ape.rmse, ape.max);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Life-long LiDAR-inertial localization on a voxel-block map"};
  app.require_subcommand(1);

  // simulate
  std::string scenario, out_dir, config_path;
  std::uint64_t seed = 1;
  bool binary_scans = false;
  auto* sim = app.add_subcommand("simulate", "Generate a scenario: prior session, prior map, test sessions");
  sim->add_option("scenario", scenario, "mapped_static | changed_wall | unmapped_loop | reentry")->required();
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--seed", seed, "Random seed");
  sim->add_option("--config", config_path, "Pipeline config (sensor and prior_voxel are used)");
  sim->add_flag("--binary-scans", binary_scans, "Write scans as float32 binary PLY");

  // build-prior
  std::string scans_dir, poses_path, map_out;
  double prior_voxel = -1.0;
  auto* bp = app.add_subcommand("build-prior", "Merge posed scans into a prior map");
  bp->add_option("--scans", scans_dir, "Directory of NNNNNN.ply body-frame scans")->required();
  bp->add_option("--poses", poses_path, "TUM trajectory, one pose per scan")->required();
  bp->add_option("--out", map_out, "Output map (PLY)")->required();
  bp->add_option("--voxel", prior_voxel, "Downsample voxel in m (default: config prior_voxel)");
  bp->add_option("--config", config_path, "Pipeline config");

  // localize
  std::string prior_path, session_dir;
  auto* loc = app.add_subcommand("localize", "Localize a session against a prior map");
  loc->add_option("--config", config_path, "Pipeline config")->required();
  loc->add_option("--prior", prior_path, "Prior map (PLY)");
  loc->add_option("--session", session_dir, "Session directory");
  loc->add_option("--out", out_dir, "Output directory");

  // eval
  std::string traj_path, gt_path;
  bool align = false;
  double max_dt = 0.01;
  auto* ev = app.add_subcommand("eval", "Absolute pose error of a trajectory");
  ev->add_option("--traj", traj_path, "Estimated trajectory (TUM)")->required();
  ev->add_option("--gt", gt_path, "Ground truth (TUM)")->required();
  ev->add_flag("--align", align, "Rigidly align before measuring");
  ev->add_option("--max-dt", max_dt, "Association window in s");

  // bench
  std::string workload_dir, csv_out;
  auto* be = app.add_subcommand("bench", "Compare i-Octree, traversal and static octree blocks");
  be->add_option("--config", config_path, "Pipeline config")->required();
  be->add_option("--workload", workload_dir,
                 "Session directory, or 'synthetic' for random blocks")->required();
  be->add_option("--out", csv_out, "Output CSV")->required();

  // run-scenario
  auto* rs = app.add_subcommand("run-scenario", "Simulate and localize a scenario in memory");
  rs->add_option("scenario", scenario, "Scenario name")->required();
  rs->add_option("--seed", seed, "Random seed");
  rs->add_option("--config", config_path, "Pipeline config");
  rs->add_option("--out", out_dir, "Optional output directory for trajectory and frame log");

  // dump-config
  bool scenario_defaults = false;
  auto* dc = app.add_subcommand("dump-config", "Print the default config as JSON");
  dc->add_flag("--scenario", scenario_defaults, "Print the scenario-tuned config instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const PipelineConfig cfg = config_or_default(config_path);
      ScenarioOptions opt;
      opt.seed = seed;
      opt.sensor = cfg.sensor;
      const Scenario sc = make_scenario(scenario, opt);
      const auto enc = binary_scans ? PlyEncoding::BinaryFloat32 : PlyEncoding::Ascii;
      const fs::path root(out_dir);
      write_session(root / "prior_session", sc.prior, enc);
      std::vector<Pose> poses;
      for (const auto& tp : sc.prior.ground_truth) poses.push_back(tp.pose);
      write_ply(root / "prior_map.ply", build_prior(sc.prior.scans, poses, cfg.prior_voxel),
                cfg.map_encoding);
      for (std::size_t i = 0; i < sc.tests.size(); ++i) {
        write_session(root / ("session_" + std::to_string(i)), sc.tests[i], enc);
      }
      std::printf("wrote %s: prior session (%zu scans), %zu test session(s)\n", root.c_str(),
                  sc.prior.scans.size(), sc.tests.size());
    } else if (*bp) {
      const PipelineConfig cfg = config_or_default(config_path);
      std::vector<Scan> scans;
      for (const auto& f : list_scan_files(scans_dir)) scans.push_back(read_ply(f, Frame::Body));
      std::vector<Pose> poses;
      for (const auto& tp : read_tum(poses_path)) poses.push_back(tp.pose);
      const Scan map = build_prior(scans, poses, prior_voxel >= 0.0 ? prior_voxel : cfg.prior_voxel);
      write_ply(map_out, map, cfg.map_encoding);
      std::printf("prior map: %zu points from %zu scans\n", map.points.size(), scans.size());
    } else if (*loc) {
      const PipelineConfig cfg = load_config(config_path);
      const std::string prior = prior_path.empty() ? cfg.prior_map : prior_path;
      const std::string session = session_dir.empty() ? cfg.session_dir : session_dir;
      const std::string out = out_dir.empty() ? cfg.output_dir : out_dir;
      if (prior.empty() || session.empty() || out.empty()) {
        throw Error(ErrorCode::InvalidConfig, "localize needs --prior, --session and --out (or config paths)");
      }
      LocalizeResult res;
      const auto outs = run_localize_files(cfg, prior, session, out, &res);
      std::size_t fallbacks = 0, over = 0;
      for (const auto& f : res.frames) {
        fallbacks += f.status != "ok";
        over += f.processing_ms > cfg.time_budget_ms;
      }
      std::printf("%zu frames, %zu fallback(s), %zu over %.0f ms\n", res.frames.size(), fallbacks,
                  over, cfg.time_budget_ms);
      std::printf("trajectory %s\nmap %s\nframe log %s\n", outs.trajectory.c_str(), outs.map.c_str(),
                  outs.frame_log.c_str());
      if (fs::exists(fs::path(session) / "groundtruth.txt")) {
        print_ape(eval_ape(res.trajectory, read_tum(fs::path(session) / "groundtruth.txt")));
      }
    } else if (*ev) {
      print_ape(eval_ape(read_tum(traj_path), read_tum(gt_path), align, max_dt));
    } else if (*be) {
      const PipelineConfig cfg = load_config(config_path);
      const BenchWorkload w = workload_dir == "synthetic"
                                  ? synthetic_workload(cfg.bench, cfg.map.resolution)
                                  : session_workload(read_session(workload_dir), cfg.bench, cfg.scan_voxel);
      const BenchReport rep = bench_structures(w, cfg.map, cfg.time_budget_ms);
      write_bench_csv(csv_out, {rep});
      std::printf("%-14s %10s %10s\n", "method", "mean ms", "% over");
      for (const auto* m : {&rep.ioctree, &rep.traversal, &rep.static_octree}) {
        std::printf("%-14s %10.3f %10.2f\n", m->method.c_str(), m->mean_ms, m->over_budget_pct);
      }
      std::printf("%zu queries, %zu mismatched\n", rep.queries, rep.mismatched_queries);
      if (!rep.outputs_identical()) return 2;
    } else if (*dc) {
      std::cout << dump_config(scenario_defaults ? scenario_pipeline_config() : default_pipeline_config());
    } else if (*rs) {
      const PipelineConfig cfg = config_or_default(config_path);
      ScenarioOptions opt;
      opt.seed = seed;
      opt.sensor = cfg.sensor;
      const Scenario sc = make_scenario(scenario, opt);
      std::vector<Pose> poses;
      for (const auto& tp : sc.prior.ground_truth) poses.push_back(tp.pose);
      for (std::size_t i = 0; i < sc.tests.size(); ++i) {
        VoxelMap map = load_map(build_prior(sc.prior.scans, poses, cfg.prior_voxel), cfg.map);
        const LocalizeResult res = run_localize(cfg, map, sc.tests[i]);
        std::size_t fallbacks = 0;
        double ms = 0.0;
        for (const auto& f : res.frames) {
          fallbacks += f.status != "ok";
          ms += f.processing_ms;
        }
        std::printf("session %zu: %zu frames, %zu fallback(s), mean %.1f ms/frame\n", i,
                    res.frames.size(), fallbacks, res.frames.empty() ? 0.0 : ms / res.frames.size());
        print_ape(eval_ape(res.trajectory, sc.tests[i].ground_truth));
        if (!out_dir.empty()) {
          const fs::path dir = fs::path(out_dir) / ("session_" + std::to_string(i));
          write_tum(dir / "trajectory.txt", res.trajectory);
          write_tum(dir / "groundtruth.txt", sc.tests[i].ground_truth);
          write_frame_log(dir / "frames.csv", res.frames);
        }
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
