#include "llloc/pipeline.hpp"

#include "llloc/errors.hpp"
#include "llloc/io.hpp"
#include "llloc/registration.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <unordered_set>

namespace llloc {

namespace fs = std::filesystem;

PointCloud voxel_downsample(std::span<const Point3> points, double voxel) {
  if (!(voxel > 0.0)) return PointCloud(points.begin(), points.end());
  std::unordered_set<VoxelIndex, VoxelIndexHasher> seen;
  seen.reserve(points.size());
  PointCloud out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (seen.insert(voxel_index(p, voxel)).second) out.push_back(p);
  }
  return out;
}

Localizer::Localizer(const PipelineConfig& cfg, VoxelMap& map, const NavState& initial)
    : cfg_(cfg), map_(map), state_(initial) {}

FrameRecord Localizer::process(const Scan& scan_body, std::span<const ImuSample> imu) {
  const auto t_start = std::chrono::steady_clock::now();
  FrameRecord rec;
  rec.timestamp = scan_body.timestamp;

  const double dt = scan_body.timestamp - state_.timestamp;
  if (!first_ && dt > 0.0) state_ = propagate_until(state_, imu, scan_body.timestamp, cfg_.imu);
  state_.timestamp = scan_body.timestamp;
  rec.predicted = state_.pose;

  Scan body;
  body.timestamp = scan_body.timestamp;
  body.frame = Frame::Body;
  body.points = voxel_downsample(scan_body.points, cfg_.scan_voxel);

  Pose corrected = rec.predicted;
  LoadingDecision decision;
  bool have_decision = false;
  try {
    auto [res, dec] = register_scan(body, rec.predicted, map_, cfg_.loading, cfg_.registration);
    corrected = res.pose;
    decision = std::move(dec);
    have_decision = true;
    rec.residual = res.final_residual;
    rec.iterations = res.iterations;
    rec.converged = res.converged;
    rec.correspondences = res.correspondences_used;
    rec.augmented = res.augmented;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCorrespondences && e.code() != ErrorCode::EmptyLocalMap &&
        e.code() != ErrorCode::SolverSingular) {
      throw;
    }
    rec.status = to_string(e.code());
  }
  if (!have_decision && !body.points.empty()) {
    decision = decide_loading(transform_scan(body, rec.predicted, Frame::Map), rec.predicted, map_,
                              cfg_.loading);
    have_decision = true;
  }
  if (have_decision) {
    rec.case_id = static_cast<char>(decision.case_id);
    rec.H = decision.H;
    rec.kappa = decision.kappa;
    rec.tau = decision.tau;
  }

  // Registration only corrects the pose; feed the position correction back
  // into the velocity so the next prediction does not repeat the error.
  if (rec.status == "ok" && !first_ && dt > 0.0) {
    state_.velocity += (corrected.translation - rec.predicted.translation) / dt;
  }
  state_.pose = corrected;
  rec.corrected = corrected;
  first_ = false;

  const Scan world = transform_scan(body, corrected, Frame::Map);
  MatchPartition parts = classify_matches(world, map_, map_.config());
  rec.matched = parts.matched.size();
  rec.unmatched = parts.unmatched.size();
  last_update_ = accumulate_and_promote(map_, parts.unmatched, map_.config());
  rec.blocks_promoted = last_update_.blocks_promoted.size();
  rec.blocks_demoted = last_update_.blocks_demoted.size();

  rec.processing_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

LocalizeResult run_localize(const PipelineConfig& cfg, VoxelMap& map, const SessionData& session,
                            const FrameObserver& observer) {
  NavState initial = session.initial;
  if (cfg.initial_pose) initial.pose = *cfg.initial_pose;
  if (!session.scans.empty() && initial.timestamp > session.scans.front().timestamp) {
    initial.timestamp = session.scans.front().timestamp;
  }
  Localizer loc(cfg, map, initial);
  LocalizeResult out;
  for (const Scan& scan : session.scans) {
    FrameRecord rec = loc.process(scan, session.imu);
    out.trajectory.push_back({rec.timestamp, rec.corrected});
    if (observer) observer(rec, map, loc.last_update());
    out.frames.push_back(std::move(rec));
  }
  return out;
}

VoxelMap load_map(const Scan& prior, const MapConfig& cfg) {
  VoxelMap map(cfg);
  Scan cloud = prior;
  cloud.frame = Frame::Map;
  map.load_prior_map(cloud);
  return map;
}

Scan build_prior(const std::vector<Scan>& scans, const std::vector<Pose>& poses, double voxel) {
  if (scans.size() != poses.size()) {
    throw Error(ErrorCode::CountMismatch, "build_prior: " + std::to_string(scans.size()) +
                                              " scans but " + std::to_string(poses.size()) +
                                              " poses");
  }
  PointCloud all;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    for (const auto& p : scans[i].points) all.push_back(poses[i].apply(p));
  }
  Scan out;
  out.frame = Frame::Map;
  out.points = voxel_downsample(all, voxel);
  return out;
}

void write_frame_log(const fs::path& path, const std::vector<FrameRecord>& frames) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "timestamp,pred_x,pred_y,pred_z,x,y,z,qx,qy,qz,qw,case,H,kappa,tau,augmented,residual,"
         "iterations,converged,correspondences,matched,unmatched,promoted,demoted,processing_ms,"
         "status\n";
  char buf[512];
  for (const auto& f : frames) {
    const auto q = f.corrected.quaternion();
    const Vec3& p = f.predicted.translation;
    const Vec3& c = f.corrected.translation;
    std::snprintf(buf, sizeof buf,
                  "%.9f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.9f,%.9f,%.9f,%.9f,%c,%d,%lld,%lld,%d,%.6e,%d,"
                  "%d,%zu,%zu,%zu,%zu,%zu,%.3f,%s\n",
                  f.timestamp, p.x(), p.y(), p.z(), c.x(), c.y(), c.z(), q.x(), q.y(), q.z(), q.w(),
                  f.case_id, f.H, static_cast<long long>(f.kappa), static_cast<long long>(f.tau),
                  f.augmented ? 1 : 0, f.residual, f.iterations, f.converged ? 1 : 0,
                  f.correspondences, f.matched, f.unmatched, f.blocks_promoted, f.blocks_demoted,
                  f.processing_ms, f.status.c_str());
    out << buf;
  }
}

LocalizeOutputs run_localize_files(const PipelineConfig& cfg, const fs::path& prior_map,
                                   const fs::path& session_dir, const fs::path& out_dir,
                                   LocalizeResult* result) {
  const SessionData session = read_session(session_dir);
  VoxelMap map = load_map(read_ply(prior_map, Frame::Map), cfg.map);
  LocalizeResult res = run_localize(cfg, map, session);

  LocalizeOutputs outs{out_dir / "trajectory.txt", out_dir / "map.ply", out_dir / "frames.csv"};
  fs::create_directories(out_dir);
  write_tum(outs.trajectory, res.trajectory);
  write_ply(outs.map, export_static_map(map), cfg.map_encoding);
  write_frame_log(outs.frame_log, res.frames);
  if (result) *result = std::move(res);
  return outs;
}

}  // namespace llloc
