// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Every threshold used for a verdict is a named constant below.

#include "llloc/bench.hpp"
#include "llloc/config.hpp"
#include "llloc/errors.hpp"
#include "llloc/features.hpp"
#include "llloc/imu.hpp"
#include "llloc/io.hpp"
#include "llloc/ioctree.hpp"
#include "llloc/map_loading.hpp"
#include "llloc/map_update.hpp"
#include "llloc/metrics.hpp"
#include "llloc/pipeline.hpp"
#include "llloc/registration.hpp"
#include "llloc/scenarios.hpp"
#include "llloc/simulator.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace llloc;
namespace fs = std::filesystem;

namespace {

// AC1
constexpr int kAc1Maps = 100;
constexpr std::size_t kAc1MaxPoints = 20000;
constexpr int kAc1Queries = 1000;
constexpr double kAc1TimeLimitS = 60.0;
// AC2
constexpr int kAc2GridPoints = 1000;
constexpr double kAc2Tol = 1e-9;
// AC3
constexpr double kAc3Duration = 10.0;
constexpr double kAc3ImuRate = 200.0;
constexpr double kAc3StationaryTol = 1e-6;
constexpr double kAc3TwistTransTol = 1e-3;
constexpr double kAc3TwistRotTol = 0.01;
// AC4
constexpr int kAc4Trials = 50;
constexpr double kAc4MaxTrans = 0.3;
constexpr double kAc4MaxRotDeg = 5.0;
constexpr double kAc4TransTol = 1e-3;
constexpr double kAc4RotTolDeg = 0.02;
constexpr double kAc4SuccessRate = 0.95;
constexpr double kAc4JacobianStep = 1e-6;
constexpr double kAc4JacobianRelTol = 1e-6;
// AC6: the moved wall's block holds ~960 prior points, so one promotion can only
// exceed it with a threshold above that
constexpr std::size_t kAc6PromoteThreshold = 1200;
// AC7
constexpr double kAc7StaticRmse = 0.05;
constexpr double kAc7ReentryTol = 0.05;
constexpr int kAc7ReentryFrames = 10;
constexpr double kAc7DriftFraction = 0.01;
constexpr double kAc7TimeLimitS = 120.0;
// AC8
constexpr std::size_t kAc8MinBlockPoints = 5000;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Scan map_scan(PointCloud pts) {
  Scan s;
  s.points = std::move(pts);
  s.frame = Frame::Map;
  return s;
}

using Key = std::array<double, 3>;

std::vector<Key> sorted_keys(const PointCloud& pts) {
  std::vector<Key> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(oracle::key(p));
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- AC1

Verdict ac1_radius_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> npts(1000, kAc1MaxPoints);
  const std::size_t buckets[] = {1, 4, 16, 32, 128};
  const double extents[] = {0.005, 0.02, 0.05, 0.1};

  std::size_t mismatches = 0, dedup_mismatches = 0, queries = 0, hits = 0;
  for (int m = 0; m < kAc1Maps; ++m) {
    const Point3 lo(u01(rng) * 20 - 10, u01(rng) * 20 - 10, u01(rng) * 20 - 10);
    const Vec3 ext(0.5 + 9.5 * u01(rng), 0.5 + 9.5 * u01(rng), 0.5 + 9.5 * u01(rng));
    const Box box{lo, lo + ext};
    const OctreeConfig oc{extents[m % 4], buckets[m % 5]};
    IOctree tree(box, oc);

    // half the maps are uniform, half are points on a few random planes
    const std::size_t n = npts(rng);
    PointCloud all;
    all.reserve(n);
    const bool planar = m % 2 == 1;
    std::vector<std::pair<Vec3, Point3>> planes;
    for (int k = 0; k < 4; ++k) {
      planes.push_back({oracle::random_unit(rng), lo + Vec3(u01(rng) * ext.x(), u01(rng) * ext.y(), u01(rng) * ext.z())});
    }
    while (all.size() < n) {
      Point3 p(lo.x() + u01(rng) * ext.x(), lo.y() + u01(rng) * ext.y(), lo.z() + u01(rng) * ext.z());
      if (planar) {
        const auto& [nrm, c] = planes[all.size() % planes.size()];
        p -= nrm * nrm.dot(p - c);
        if (!box.contains(p)) continue;
      }
      all.push_back(p);
    }
    // incremental insertion in batches
    for (std::size_t b = 0; b < all.size(); b += 2500) {
      const std::size_t e = std::min(all.size(), b + 2500);
      tree.insert(std::span<const Point3>(all.data() + b, e - b));
    }

    PointCloud kept;
    for (const auto& tp : tree.points()) kept.push_back(tp.point);
    if (sorted_keys(kept) != sorted_keys(oracle::grid_dedup(all, box.min, box.max, oc.min_extent)))
      ++dedup_mismatches;

    const double diag = ext.norm();
    for (int q = 0; q < kAc1Queries; ++q) {
      Point3 c;
      double r;
      if (q % 10 == 0 && !kept.empty()) {
        // radius exactly at a retained point's distance
        c = Point3(lo.x() + u01(rng) * ext.x(), lo.y() + u01(rng) * ext.y(), lo.z() + u01(rng) * ext.z());
        r = std::sqrt(squared_distance(c, kept[static_cast<std::size_t>(u01(rng) * kept.size()) % kept.size()]));
      } else {
        c = Point3(lo.x() - 0.2 * ext.x() + 1.4 * u01(rng) * ext.x(),
                   lo.y() - 0.2 * ext.y() + 1.4 * u01(rng) * ext.y(),
                   lo.z() - 0.2 * ext.z() + 1.4 * u01(rng) * ext.z());
        r = diag * (0.002 + 0.25 * u01(rng) * u01(rng));
      }
      const auto got = tree.radius_search(c, r);
      std::vector<Key> want;
      for (const auto& p : kept)
        if (oracle::sq_dist(p, c) < r * r) want.push_back(oracle::key(p));
      std::sort(want.begin(), want.end());
      if (sorted_keys(got) != want) ++mismatches;
      hits += want.size();
      ++queries;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && dedup_mismatches == 0 && secs < kAc1TimeLimitS,
          fmt("radius search vs brute force: %d maps, %zu queries (%zu hits), %zu mismatched queries, "
              "%zu retained-set mismatches, %.1f s (limit %.0f s)",
              kAc1Maps, queries, hits, mismatches, dedup_mismatches, secs, kAc1TimeLimitS)};
}

// ---------------------------------------------------------------- AC2

Verdict ac2_rho_wide() {
  double worst = 0.0;
  bool spots = true;
  for (double d_max : {30.0, 100.0}) {
    LoadingConfig c;
    c.d_max = d_max;
    for (int i = 0; i < kAc2GridPoints; ++i) {
      const double phi = d_max * i / (kAc2GridPoints - 1);
      worst = std::max(worst, std::abs(ratio_wide(phi, c) - oracle::rho_w_quadrature(phi, d_max)));
    }
    spots = spots && ratio_wide(0.0, c) == 0.5 && ratio_wide(d_max, c) == 0.0;
  }
  return {worst <= kAc2Tol && spots,
          fmt("wide ratio vs quadrature on %d grid points, d_max in {30, 100}: max |diff| %.2e "
              "(tol %.0e), rho(0) = 0.5 and rho(d_max) = 0 exact: %s",
              kAc2GridPoints, worst, kAc2Tol, spots ? "yes" : "no")};
}

// ---------------------------------------------------------------- AC3

SensorSpec quiet_imu() {
  SensorSpec s;
  s.imu_rate = kAc3ImuRate;
  s.range_noise_sigma = 0.0;
  return s;
}

Verdict ac3_imu() {
  double stationary = 0.0;
  for (const Pose& p : {Pose{Rotation::Identity(), Point3(1, 2, 3)},
                        Pose{so3_exp(Vec3(0.3, -0.2, 1.1)), Point3(-4, 0.5, 2)}}) {
    const StationaryTrajectory traj(p, kAc3Duration);
    const auto imu = synthesize_imu(traj, quiet_imu(), 1);
    NavState s;
    s.pose = p;
    const NavState end = propagate_until(s, imu, kAc3Duration, ImuConfig{});
    stationary = std::max(stationary, translation_error(end.pose, p));
  }

  double trans = 0.0, rot = 0.0;
  const std::pair<Vec3, Vec3> twists[] = {{Vec3(0, 0, 0.5), Vec3(2.0, 0, 0)},
                                          {Vec3(0.1, -0.05, 0.3), Vec3(1.0, 0.2, 0.1)}};
  for (const auto& [w, v] : twists) {
    const ConstantTwistTrajectory traj(Pose{so3_exp(Vec3(0.05, 0.0, 0.4)), Point3(0, 0, 1)}, w, v,
                                       kAc3Duration);
    const auto imu = synthesize_imu(traj, quiet_imu(), 1);
    NavState s;
    s.pose = traj.pose(0.0);
    s.velocity = traj.velocity(0.0);
    const NavState end = propagate_until(s, imu, kAc3Duration, ImuConfig{});
    trans = std::max(trans, translation_error(end.pose, traj.pose(kAc3Duration)));
    rot = std::max(rot, rotation_error(end.pose, traj.pose(kAc3Duration)));
  }
  return {stationary <= kAc3StationaryTol && trans <= kAc3TwistTransTol && rot <= kAc3TwistRotTol,
          fmt("stationary %.0f s at %.0f Hz drift %.2e m (tol %.0e); constant twist round trip "
              "%.2e m / %.2e rad (tol %.0e m / %.2f rad)",
              kAc3Duration, kAc3ImuRate, stationary, kAc3StationaryTol, trans, rot,
              kAc3TwistTransTol, kAc3TwistRotTol)};
}

// ---------------------------------------------------------------- AC4

Verdict ac4_registration() {
  const fixture::Room room;
  VoxelMap map{MapConfig{}};
  map.load_prior_map(map_scan(room.grid(0.1)));
  LoadingConfig loading;
  loading.phi1 = 24.0;
  loading.phi2 = 18.0;
  RegistrationConfig cfg;
  cfg.delta = 1e-14;
  cfg.max_iterations = 30;

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u01(0.0, 1.0), yaw(-M_PI, M_PI);
  int ok = 0, failed = 0;
  double worst_t = 0.0, worst_r = 0.0;
  for (int trial = 0; trial < kAc4Trials; ++trial) {
    const Pose truth{so3_exp(Vec3(0, 0, yaw(rng))),
                     room.center() + Vec3(u01(rng) - 0.5, u01(rng) - 0.5, 0.4 * (u01(rng) - 0.5))};
    Scan body;
    const Pose inv = truth.inverse();
    for (const auto& p : room.random(rng, 150, 0.6)) body.points.push_back(inv.apply(p));
    const Vec3 dt = oracle::random_unit(rng) * (kAc4MaxTrans * u01(rng));
    const Vec3 dr = oracle::random_unit(rng) * (kAc4MaxRotDeg * M_PI / 180.0 * u01(rng));
    const Pose start{so3_exp(dr) * truth.rotation, truth.translation + dt};
    try {
      const auto res = register_scan(body, start, map, loading, cfg).first;
      const double et = translation_error(res.pose, truth);
      const double er = rotation_error(res.pose, truth) * 180.0 / M_PI;
      worst_t = std::max(worst_t, et);
      worst_r = std::max(worst_r, er);
      ok += et <= kAc4TransTol && er <= kAc4RotTolDeg;
    } catch (const Error&) {
      ++failed;
    }
  }
  const double rate = static_cast<double>(ok) / kAc4Trials;

  // Jacobians vs central differences; relative to max(1, |J|)
  std::mt19937_64 jr(99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst_j = 0.0;
  const double h = kAc4JacobianStep;
  for (int i = 0; i < 200; ++i) {
    const Pose T{so3_exp(Vec3(u(jr), u(jr), u(jr))), Vec3(u(jr), u(jr), u(jr))};
    const Point3 p(u(jr), u(jr), u(jr));
    const PlaneFeature pf{oracle::random_unit(jr), u(jr), 1.0 + std::abs(u(jr))};
    const LineFeature lf{oracle::random_unit(jr), Point3(u(jr), u(jr), u(jr)), 1.0 + std::abs(u(jr))};
    const auto Jp = plane_jacobian(T, p, pf);
    const auto Jl = line_jacobian(T, p, lf);
    for (int k = 0; k < 6; ++k) {
      Vector6 e = Vector6::Zero();
      e[k] = h;
      const Pose Tp = apply_increment(T, e), Tm = apply_increment(T, -e);
      const double dp = (oracle::plane_residual(Tp.rotation, Tp.translation, p, pf.normal, pf.intercept, pf.weight) -
                         oracle::plane_residual(Tm.rotation, Tm.translation, p, pf.normal, pf.intercept, pf.weight)) /
                        (2 * h);
      const Vec3 dl = (oracle::line_residual(Tp.rotation, Tp.translation, p, lf.direction, lf.anchor, lf.weight) -
                       oracle::line_residual(Tm.rotation, Tm.translation, p, lf.direction, lf.anchor, lf.weight)) /
                      (2 * h);
      worst_j = std::max(worst_j, std::abs(dp - Jp(0, k)) / std::max(1.0, std::abs(Jp(0, k))));
      worst_j = std::max(worst_j, (dl - Jl.col(k)).norm() / std::max(1.0, Jl.col(k).norm()));
    }
  }
  return {rate >= kAc4SuccessRate && worst_j <= kAc4JacobianRelTol,
          fmt("box room, %d perturbations <= %.1f m / %.0f deg: %d within %.0e m and %.2f deg "
              "(%.0f%%, need %.0f%%), %d threw, worst %.2e m / %.2e deg; Jacobian vs central "
              "differences max rel %.2e (tol %.0e)",
              kAc4Trials, kAc4MaxTrans, kAc4MaxRotDeg, ok, kAc4TransTol, kAc4RotTolDeg, 100 * rate,
              100 * kAc4SuccessRate, failed, worst_t, worst_r, worst_j, kAc4JacobianRelTol)};
}

// ---------------------------------------------------------------- AC5

// Dense grid filling block (bx, 0, 0) of side 5.
PointCloud fill_block(int bx, double step = 0.5) {
  PointCloud out;
  for (double x = 0.25; x < 5.0; x += step)
    for (double y = 0.25; y < 5.0; y += step)
      for (double z = 0.25; z < 5.0; z += step) out.emplace_back(bx * 5.0 + x, y, z);
  return out;
}

// Expected admissions per case, written out as a table:
// [prior block?][tier] -> weight, or 0 when not admitted.
using Admit = std::array<std::array<double, 3>, 2>;

Admit expected_admission(char c, bool aug, const LoadingConfig& w) {
  Admit a{};  // a[is_prior][Prior/Static/Temporary]
  switch (c) {
    case 'a':
      a[1][0] = w.w_n;
      break;
    case 'b':
      a[1][0] = w.w_g;
      a[0][1] = w.w_n;
      break;
    case 'c':
      a[1][0] = aug ? w.w_g : w.w_n;
      if (aug) a[0][1] = w.w_n;
      break;
    case 'd':
      a[1][1] = a[0][1] = w.w_n;
      if (aug) a[1][2] = a[0][2] = w.w_l;
      break;
  }
  return a;
}

Verdict ac5_loading_cases() {
  VoxelMap m(MapConfig{.resolution = 5.0});
  PointCloud prior;
  for (int b = 0; b < 4; ++b) {
    const auto pts = fill_block(b);
    prior.insert(prior.end(), pts.begin(), pts.end());
  }
  m.load_prior_map(map_scan(prior));
  m.get_or_create(VoxelIndex{4, 0, 0}).append_static(fill_block(4));
  m.insert_temporary(fill_block(5, 1.0));

  LoadingConfig c;
  c.d_max = 30.0;
  c.phi1 = 25.0;
  c.phi2 = 20.0;
  const double s = 5.0;

  auto scan_over = [](std::initializer_list<int> blocks) {
    PointCloud pts;
    for (int b : blocks)
      for (int i = 0; i < 100; ++i) pts.emplace_back(b * 5.0 + 0.1 + 0.048 * i, 2.5, 2.5);
    return map_scan(pts);
  };
  struct Setup {
    int H;
    bool reach;
    double robot_x;
    std::initializer_list<int> blocks;
  };
  const Setup setups[] = {{0, true, 2.5, {0, 1, 2}},
                          {0, false, 17.5, {3, 4, 5, 6, 7}},
                          {1, true, 22.5, {2, 3, 4}},
                          {1, false, 22.5, {4, 5, 6}}};
  const char table[2][2] = {{'b', 'a'}, {'d', 'c'}};  // [H][kappa >= tau]

  int good = 0;
  std::string bad;
  for (const auto& st : setups) {
    const Scan scan = scan_over(st.blocks);
    const Pose robot{Rotation::Identity(), Point3(st.robot_x, 2.5, 2.5)};
    // independent kappa / tau
    std::int64_t kappa = 0;
    std::set<VoxelIndex> touched;
    for (const auto& p : scan.points) {
      const VoxelIndex idx{static_cast<int>(std::floor(p.x() / s)), static_cast<int>(std::floor(p.y() / s)),
                           static_cast<int>(std::floor(p.z() / s))};
      touched.insert(idx);
      kappa += m.is_prior_block(idx);
    }
    const double phi = st.H ? c.phi1 : c.phi2;
    const auto n = static_cast<std::int64_t>(scan.points.size());
    const auto tau = static_cast<std::int64_t>(std::floor(n * oracle::rho_w_quadrature(phi, c.d_max) * s));

    for (bool diverged : {false, true}) {
      const char want = table[st.H][st.reach];
      const bool want_aug = diverged && st.H == 1;
      bool ok = (kappa >= tau) == st.reach;
      for (auto fb : {std::optional<ConvergenceFlag>{}, std::optional<ConvergenceFlag>{ConvergenceFlag::Converged}}) {
        const auto feedback = diverged ? std::optional<ConvergenceFlag>{ConvergenceFlag::Diverged} : fb;
        const auto [d, lm] = select_local_map(scan, robot, m, c, feedback);
        ok = ok && d.H == st.H && d.kappa == kappa && d.tau == tau && d.n == n &&
             static_cast<char>(d.case_id) == want && d.augmented == want_aug;
        const Admit admit = expected_admission(want, want_aug, c);
        std::set<std::pair<bool, int>> seen;
        for (const auto& e : lm.entries) {
          const bool ip = m.is_prior_block(e.block);
          const int tier = static_cast<int>(e.tier);
          ok = ok && admit[ip][tier] != 0.0 && e.weight == admit[ip][tier] && e.size > 0;
          seen.insert({ip, tier});
        }
        // every admitted tier that is non-empty in a touched block shows up
        for (const auto& idx : touched) {
          const VoxelBlock* b = m.find(idx);
          if (!b) continue;
          const bool ip = b->is_prior_block();
          const std::size_t sizes[3] = {b->prior_points().size(), b->static_points().size(),
                                        b->temp_points().size()};
          for (int tier = 0; tier < 3; ++tier)
            if (admit[ip][tier] != 0.0 && sizes[tier] > 0) ok = ok && seen.count({ip, tier});
        }
        if (diverged) break;
      }
      if (ok) {
        ++good;
      } else {
        bad += fmt(" (H=%d reach=%d diverged=%d)", st.H, st.reach, diverged);
      }
    }
  }
  return {good == 8, fmt("loading decision over (H, kappa>=tau, divergence): %d/8 combinations match "
                         "the case table, tiers and weights%s",
                         good, bad.c_str())};
}

// ---------------------------------------------------------------- scenarios

struct ScenarioRun {
  Scenario sc;
  std::set<VoxelIndex> prior_blocks;  // right after loading
  LocalizeResult res;
  ApeResult ape;
  std::vector<double> errors;  // per frame, against ground truth
  double seconds = 0.0;
};

ScenarioRun run_scenario(const std::string& name, const PipelineConfig& cfg,
                         const FrameObserver& observer = {}) {
  ScenarioRun run;
  const auto t0 = Clock::now();
  ScenarioOptions opt;
  opt.sensor = cfg.sensor;
  run.sc = make_scenario(name, opt);
  std::vector<Pose> poses;
  for (const auto& tp : run.sc.prior.ground_truth) poses.push_back(tp.pose);
  VoxelMap map = load_map(build_prior(run.sc.prior.scans, poses, cfg.prior_voxel), cfg.map);
  map.for_each_block([&](const VoxelBlock& b) {
    if (b.is_prior_block()) run.prior_blocks.insert(b.index());
  });
  run.res = run_localize(cfg, map, run.sc.tests.at(0), observer);
  run.seconds = seconds_since(t0);
  run.ape = eval_ape(run.res.trajectory, run.sc.tests[0].ground_truth);
  const auto& gt = run.sc.tests[0].ground_truth;
  for (std::size_t i = 0; i < run.res.trajectory.size(); ++i)
    run.errors.push_back(translation_error(run.res.trajectory[i].pose, gt.at(i).pose));
  return run;
}

// ---------------------------------------------------------------- AC6

struct BlockState {
  bool prior = false;
  std::size_t np = 0, ns = 0, nt = 0;
};

std::map<VoxelIndex, BlockState> snapshot(const VoxelMap& m) {
  std::map<VoxelIndex, BlockState> out;
  m.for_each_block([&](const VoxelBlock& b) {
    out[b.index()] = {b.is_prior_block(), b.prior_points().size(), b.static_points().size(),
                      b.temp_points().size()};
  });
  return out;
}

bool tree_fresh(const VoxelMap& m, const VoxelIndex& idx) {
  const VoxelBlock& b = *m.find(idx);
  const Box box = m.block_bounds(idx);
  PointCloud in_tree;
  for (const auto& tp : b.tree().points()) in_tree.push_back(tp.point);
  return sorted_keys(in_tree) ==
         sorted_keys(oracle::grid_dedup(b.static_points(), box.min, box.max, m.config().octree.min_extent));
}

Verdict ac6_map_update(PipelineConfig cfg) {
  cfg.map.promote_threshold = kAc6PromoteThreshold;
  std::map<VoxelIndex, BlockState> prev;  // state after the previous frame
  std::set<VoxelIndex> demoted;
  std::size_t frames = 0, promotions = 0, demotions = 0, rule_checks = 0;
  std::size_t rule_bad = 0, equiv_bad = 0, conserve_bad = 0, fresh_bad = 0, h_bad = 0, h_checked = 0,
              untouched_bad = 0, subset_bad = 0;

  const FrameObserver obs = [&](const FrameRecord& rec, const VoxelMap& m, const UpdateReport& up) {
    ++frames;
    auto now = snapshot(m);
    std::set<VoxelIndex> promoted(up.blocks_promoted.begin(), up.blocks_promoted.end());
    std::set<VoxelIndex> dem(up.blocks_demoted.begin(), up.blocks_demoted.end());
    for (const auto& idx : dem) subset_bad += !promoted.count(idx);
    promotions += promoted.size();
    demotions += dem.size();

    // conservation: buffered points all land in M^t or, after promotion, M^s
    std::int64_t arrived = 0;
    for (const auto& [idx, st] : now) {
      const auto it = prev.find(idx);
      const BlockState before = it == prev.end() ? BlockState{} : it->second;
      const auto live_after = static_cast<std::int64_t>(st.nt + st.ns - st.np);
      const auto live_before = static_cast<std::int64_t>(before.nt + before.ns - before.np);
      if (dem.count(idx)) {
        // M^s now holds only what was just promoted: old M^t plus arrivals
        arrived += static_cast<std::int64_t>(st.ns) - static_cast<std::int64_t>(before.nt);
      } else {
        arrived += live_after - live_before;
      }
      if (!promoted.count(idx) && (st.ns != before.ns || st.np != before.np || st.prior != before.prior))
        ++untouched_bad;
    }
    conserve_bad += arrived != static_cast<std::int64_t>(rec.unmatched) ||
                    up.points_buffered != rec.unmatched;

    // the doubling rule and its |M^t| > |M^p| reading
    for (const auto& idx : promoted) {
      const auto it = prev.find(idx);
      const BlockState before = it == prev.end() ? BlockState{} : it->second;
      const BlockState& after = now.at(idx);
      const std::size_t moved = dem.count(idx) ? after.ns : after.ns - before.ns;
      const bool expect = before.prior && before.ns + moved > 2 * before.np;
      rule_bad += expect != static_cast<bool>(dem.count(idx));
      if (before.prior && before.ns == before.np) equiv_bad += expect != (moved > before.np);
      ++rule_checks;
      fresh_bad += !tree_fresh(m, idx);
      if (after.nt != 0) ++conserve_bad;
    }
    for (const auto& idx : dem) {
      const BlockState& after = now.at(idx);
      if (after.prior || after.np != 0) ++rule_bad;
      demoted.insert(idx);
    }
    // demoted blocks stay non-prior; frames whose robot sits in one see H = 1
    for (const auto& idx : demoted) h_bad += heaviside(idx, m) != 1;
    if (demoted.count(m.index_of(rec.predicted.translation)) && !dem.count(m.index_of(rec.predicted.translation))) {
      ++h_checked;
      h_bad += rec.H != 1;
    }
    prev = std::move(now);
  };

  ScenarioOptions opt;
  opt.sensor = cfg.sensor;
  const Scenario sc = make_scenario("changed_wall", opt);
  std::vector<Pose> poses;
  for (const auto& tp : sc.prior.ground_truth) poses.push_back(tp.pose);
  VoxelMap map = load_map(build_prior(sc.prior.scans, poses, cfg.prior_voxel), cfg.map);
  prev = snapshot(map);
  // the prior itself must be fresh
  for (const auto& [idx, st] : prev) fresh_bad += !tree_fresh(map, idx);
  run_localize(cfg, map, sc.tests.at(0), obs);

  const bool pass = promotions > 0 && demotions > 0 && rule_bad == 0 && equiv_bad == 0 &&
                    conserve_bad == 0 && fresh_bad == 0 && h_bad == 0 && untouched_bad == 0 &&
                    subset_bad == 0;
  return {pass,
          fmt("changed_wall (threshold %zu), %zu frames: %zu promotions, %zu demotions over %zu blocks; doubling rule "
              "violations %zu (of %zu checks), formulation disagreements %zu, conservation failures %zu, "
              "stale trees %zu, untouched blocks changed %zu, demoted-not-promoted %zu, H != 1 after "
              "demotion %zu (%zu frames in demoted blocks)",
              kAc6PromoteThreshold, frames, promotions, demotions, demoted.size(), rule_bad, rule_checks, equiv_bad, conserve_bad,
              fresh_bad, untouched_bad, subset_bad, h_bad, h_checked)};
}

// ---------------------------------------------------------------- AC7

bool in_prior(const ScenarioRun& r, const Point3& p, double s) {
  return r.prior_blocks.count(voxel_index(p, s)) > 0;
}

Verdict ac7_scenarios(const PipelineConfig& cfg, ScenarioRun* keep_static) {
  const double s = cfg.map.resolution;
  std::string detail;
  bool pass = true;

  ScenarioRun ms = run_scenario("mapped_static", cfg);
  {
    const bool ok = ms.ape.rmse <= kAc7StaticRmse && ms.seconds <= kAc7TimeLimitS;
    pass = pass && ok;
    detail += fmt("mapped_static rmse %.4f m (tol %.2f), %zu frames, %.1f s", ms.ape.rmse, kAc7StaticRmse,
                  ms.res.frames.size(), ms.seconds);
  }

  ScenarioRun re = run_scenario("reentry", cfg);
  {
    const auto& gt = re.sc.tests[0].ground_truth;
    std::ptrdiff_t left = -1, back = -1;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const bool inside = in_prior(re, gt[i].pose.translation, s);
      if (!inside && left < 0) left = static_cast<std::ptrdiff_t>(i);
      if (inside && left >= 0) {
        back = static_cast<std::ptrdiff_t>(i);
        break;
      }
    }
    int recovered_after = -1;
    double max_after = 0.0;
    if (back >= 0) {
      for (int k = 0; k <= kAc7ReentryFrames && back + k < static_cast<std::ptrdiff_t>(re.errors.size()); ++k) {
        if (re.errors[back + k] <= kAc7ReentryTol) {
          recovered_after = k;
          break;
        }
      }
      for (std::size_t i = back + kAc7ReentryFrames; i < re.errors.size(); ++i) {
        if (in_prior(re, gt[i].pose.translation, s)) max_after = std::max(max_after, re.errors[i]);
      }
    }
    const bool ok = back >= 0 && recovered_after >= 0 && re.seconds <= kAc7TimeLimitS;
    pass = pass && ok;
    detail += fmt("; reentry at frame %td, error at re-entry %.3f m, <= %.2f m after %d frame(s) "
                  "(limit %d), max %.3f m over later in-prior frames, %.1f s",
                  back, back >= 0 ? re.errors[back] : -1.0, kAc7ReentryTol, recovered_after, kAc7ReentryFrames,
                  max_after, re.seconds);
  }

  ScenarioRun ul = run_scenario("unmapped_loop", cfg);
  {
    const auto& gt = ul.sc.tests[0].ground_truth;
    std::size_t failures = 0;
    for (const auto& f : ul.res.frames) failures += f.status != "ok";
    // longest contiguous stretch outside the prior blocks
    std::size_t best_b = 0, best_e = 0;
    for (std::size_t i = 0; i < gt.size();) {
      if (in_prior(ul, gt[i].pose.translation, s)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < gt.size() && !in_prior(ul, gt[j + 1].pose.translation, s)) ++j;
      if (j - i > best_e - best_b) best_b = i, best_e = j;
      i = j + 1;
    }
    const double length = best_e > best_b ? path_length(gt, best_b, best_e) : 0.0;
    double max_err = 0.0;
    for (std::size_t i = best_b; i <= best_e && i < ul.errors.size(); ++i) max_err = std::max(max_err, ul.errors[i]);
    const double drift = length > 0.0 ? max_err / length : 1.0;
    const bool ok = failures == 0 && drift < kAc7DriftFraction && ul.seconds <= kAc7TimeLimitS;
    pass = pass && ok;
    detail += fmt("; unmapped_loop %zu frame failures, unmapped segment %.1f m (frames %zu-%zu), max error "
                  "%.3f m = %.2f%% of distance (limit %.0f%%), %.1f s",
                  failures, length, best_b, best_e, max_err, 100 * drift, 100 * kAc7DriftFraction, ul.seconds);
  }
  detail += fmt("; time limit %.0f s per run", kAc7TimeLimitS);
  if (keep_static) *keep_static = std::move(ms);
  return {pass, detail};
}

// ---------------------------------------------------------------- AC8

Verdict ac8_bench(const PipelineConfig& cfg, const fs::path& dir) {
  const BenchWorkload w = synthetic_workload(cfg.bench, cfg.map.resolution);
  const BenchReport r = bench_structures(w, cfg.map, cfg.time_budget_ms);
  const fs::path csv = dir / "bench.csv";
  write_bench_csv(csv, {r});
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  const std::string want =
      "sequence,ioctree_mean_ms,ioctree_over_80ms_pct,traverse_mean_ms,traverse_over_80ms_pct,"
      "static_octree_mean_ms,static_octree_over_80ms_pct";
  const bool order = r.ioctree.mean_ms < r.static_octree.mean_ms && r.static_octree.mean_ms < r.traversal.mean_ms;
  const bool pass = r.min_block_points >= kAc8MinBlockPoints && order && r.outputs_identical() && header == want;
  return {pass, fmt("synthetic blocks (smallest %zu points, need %zu): mean ms i-Octree %.3f, static octree "
                    "%.3f, traversal %.3f; ordering %s; %zu/%zu query results differ; CSV header %s",
                    r.min_block_points, kAc8MinBlockPoints, r.ioctree.mean_ms, r.static_octree.mean_ms,
                    r.traversal.mean_ms, order ? "holds" : "violated", r.mismatched_queries, r.queries,
                    header == want ? "ok" : "wrong")};
}

// ---------------------------------------------------------------- AC9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict ac9_determinism(const PipelineConfig& cfg, const ScenarioRun& ms, const fs::path& dir) {
  // a shortened mapped_static session keeps the two runs quick
  SessionData session = ms.sc.tests.at(0);
  const std::size_t keep = std::min<std::size_t>(40, session.scans.size());
  session.scans.resize(keep);
  session.ground_truth.resize(keep);
  const double t_end = session.scans.back().timestamp;
  std::erase_if(session.imu, [&](const ImuSample& s) { return s.timestamp > t_end + 1e-9; });
  write_session(dir / "session", session);
  std::vector<Pose> poses;
  for (const auto& tp : ms.sc.prior.ground_truth) poses.push_back(tp.pose);
  write_ply(dir / "prior_map.ply", build_prior(ms.sc.prior.scans, poses, cfg.prior_voxel));

  const auto a = run_localize_files(cfg, dir / "prior_map.ply", dir / "session", dir / "run_a");
  const auto b = run_localize_files(cfg, dir / "prior_map.ply", dir / "session", dir / "run_b");
  const std::string ta = slurp(a.trajectory), tb = slurp(b.trajectory);
  const bool same_traj = !ta.empty() && ta == tb;
  const bool same_map = slurp(a.map) == slurp(b.map);
  return {same_traj && same_map,
          fmt("two localize runs over %zu scans: trajectory files %s (%zu bytes), exported maps %s", keep,
              same_traj ? "byte-identical" : "differ", ta.size(), same_map ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  const PipelineConfig cfg = scenario_pipeline_config();
  const fs::path dir = fs::temp_directory_path() / ("llloc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  int failed = 0;
  auto report = [&](const char* id, const std::function<Verdict()>& fn) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s  %s  [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  ScenarioRun mapped_static;
  report("AC1", ac1_radius_oracle);
  report("AC2", ac2_rho_wide);
  report("AC3", ac3_imu);
  report("AC4", ac4_registration);
  report("AC5", ac5_loading_cases);
  report("AC6", [&] { return ac6_map_update(cfg); });
  report("AC7", [&] { return ac7_scenarios(cfg, &mapped_static); });
  report("AC8", [&] { return ac8_bench(cfg, dir); });
  report("AC9", [&] {
    if (mapped_static.sc.tests.empty()) return Verdict{false, "mapped_static run unavailable"};
    return ac9_determinism(cfg, mapped_static, dir);
  });

  std::error_code ec;
  fs::remove_all(dir, ec);
  std::printf("%d of 9 criteria failed\n", failed);
  return failed ? 1 : 0;
}
