#include "llloc/map_loading.hpp"

#include "llloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace llloc {

void LoadingConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(phi1 > phi2 && phi2 > 0.0)) fail("loading: need phi1 > phi2 > 0");
  if (!(d_min >= 0.0 && d_min < d_max)) fail("loading: need 0 <= d_min < d_max");
  if (!(theta_l > 0.0 && theta_l <= 2.0 * M_PI + 1e-12)) fail("loading: theta_l must be in (0, 2pi]");
  if (!(w_g >= w_n && w_n >= w_l && w_l > 0.0)) fail("loading: need w_g >= w_n >= w_l > 0");
  if (max_converge_iters < 1) fail("loading: max_converge_iters must be >= 1");
  if (!(delta >= 0.0)) fail("loading: delta must be non-negative");
}

std::size_t LocalMap::total_points() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.size;
  return n;
}

std::vector<Neighbor> LocalMap::points(const VoxelMap& map) const {
  std::vector<Neighbor> out;
  for (const auto& e : entries) {
    const VoxelBlock* b = map.find(e.block);
    if (b == nullptr) continue;
    switch (e.tier) {
      case Tier::Prior:
        for (const auto& tp : b->tree().points()) {
          if (tp.tag == kPriorTag) out.push_back({tp.point, e.weight, Tier::Prior});
        }
        break;
      case Tier::Static:
        for (const auto& tp : b->tree().points()) out.push_back({tp.point, e.weight, Tier::Static});
        break;
      case Tier::Temporary:
        for (const auto& p : b->temp_points()) out.push_back({p, e.weight, Tier::Temporary});
        break;
    }
  }
  return out;
}

int heaviside(const VoxelIndex& robot_block, const VoxelMap& map) {
  return map.is_prior_block(robot_block) ? 0 : 1;
}

double effective_distance(int H, const LoadingConfig& cfg) {
  return cfg.phi2 + (cfg.phi1 - cfg.phi2) * H;
}

double ratio_narrow(double phi_star, int H, const LoadingConfig& cfg) {
  const double phi_e = cfg.d_max * cfg.d_max - cfg.d_min * cfg.d_min;
  if (!(cfg.theta_l > 0.0) || !(cfg.theta_l < M_PI) || !(phi_e > 0.0)) {
    throw Error(ErrorCode::DegenerateFoV, "narrow ratio needs 0 < theta_l < pi and d_max > d_min");
  }
  const double base = phi_star * phi_star * std::tan(0.5 * cfg.theta_l) / (0.5 * phi_e * cfg.theta_l);
  const double rho = base * (1.0 - 2.0 * H) + H;
  return std::clamp(rho, 0.0, 1.0);
}

double ratio_wide(double phi_star, const LoadingConfig& cfg) {
  const double d = cfg.d_max;
  if (!(phi_star >= 0.0) || phi_star > d) {
    throw Error(ErrorCode::OutOfRange, "wide ratio needs 0 <= phi* <= d_max");
  }
  const double d2 = d * d;
  const double u = std::clamp(phi_star / d, 0.0, 1.0);
  const double segment = d2 * std::acos(u) - phi_star * std::sqrt(std::max(0.0, d2 - phi_star * phi_star));
  return std::clamp(segment / (M_PI * d2), 0.0, 1.0);
}

std::int64_t threshold_tau(std::int64_t n, double rho, double s) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(n) * rho * s));
}

ConvergenceFlag convergence_flag(double residual, int k, const LoadingConfig& cfg) {
  if (residual <= cfg.delta) return ConvergenceFlag::Converged;
  return k <= cfg.max_converge_iters ? ConvergenceFlag::Continue : ConvergenceFlag::Diverged;
}

LoadingCase select_case(int H, bool kappa_reaches_tau) {
  if (H == 0) return kappa_reaches_tau ? LoadingCase::A : LoadingCase::B;
  return kappa_reaches_tau ? LoadingCase::C : LoadingCase::D;
}

TierFilter tier_filter_for(LoadingCase c, bool augmented, const LoadingConfig& cfg) {
  TierFilter f;
  auto& in = f.prior_blocks;
  auto& out = f.other_blocks;
  switch (c) {
    case LoadingCase::A:
      in.prior = true;
      in.prior_weight = cfg.w_n;
      break;
    case LoadingCase::B:
      in.prior = true;
      in.prior_weight = cfg.w_g;
      out.static_ = true;
      out.static_weight = cfg.w_n;
      break;
    case LoadingCase::C:
      in.prior = true;
      in.prior_weight = augmented ? cfg.w_g : cfg.w_n;
      if (augmented) {
        out.static_ = true;
        out.static_weight = cfg.w_n;
      }
      break;
    case LoadingCase::D:
      in.static_ = out.static_ = true;
      in.static_weight = out.static_weight = cfg.w_n;
      if (augmented) {
        in.temporary = out.temporary = true;
        in.temporary_weight = out.temporary_weight = cfg.w_l;
      }
      break;
  }
  return f;
}

LoadingDecision decide_loading(const Scan& scan_world, const Pose& robot_pose, const VoxelMap& map,
                               const LoadingConfig& cfg, std::optional<ConvergenceFlag> feedback) {
  LoadingDecision d;
  d.H = heaviside(map.index_of(robot_pose.translation), map);
  d.phi_star = effective_distance(d.H, cfg);
  d.rho = cfg.fov_mode == FovMode::Narrow ? ratio_narrow(d.phi_star, d.H, cfg)
                                          : ratio_wide(d.phi_star, cfg);
  d.n = static_cast<std::int64_t>(scan_world.points.size());
  d.tau = threshold_tau(d.n, d.rho, map.resolution());

  std::int64_t kappa = 0;
  VoxelIndex last{};
  bool last_prior = false;
  bool have_last = false;
  for (const auto& p : scan_world.points) {
    const VoxelIndex idx = map.index_of(p);
    if (!have_last || idx != last) {
      last = idx;
      last_prior = map.is_prior_block(idx);
      have_last = true;
    }
    kappa += last_prior ? 1 : 0;
  }
  d.kappa = kappa;

  d.case_id = select_case(d.H, d.kappa >= d.tau);
  const bool diverged = feedback.has_value() && *feedback == ConvergenceFlag::Diverged;
  d.augmented = diverged && (d.case_id == LoadingCase::C || d.case_id == LoadingCase::D);
  d.tier_filter = tier_filter_for(d.case_id, d.augmented, cfg);
  return d;
}

LocalMap collect_local_map(const Scan& scan_world, const VoxelMap& map, const TierFilter& filter) {
  std::unordered_map<VoxelIndex, bool, VoxelIndexHasher> seen(64, VoxelIndexHasher{map.config().primes});
  std::vector<VoxelIndex> blocks;
  for (const auto& p : scan_world.points) {
    const VoxelIndex c = map.index_of(p);
    if (!seen.try_emplace(c, true).second) continue;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const VoxelIndex n{c.x + dx, c.y + dy, c.z + dz};
          if (map.find(n) != nullptr) blocks.push_back(n);
        }
      }
    }
  }
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());

  LocalMap local;
  // empty slices are left out
  auto add = [&](const VoxelIndex& idx, Tier tier, double w, std::size_t n) {
    if (n > 0) local.entries.push_back({idx, tier, w, n});
  };
  for (const auto& idx : blocks) {
    const VoxelBlock& b = *map.find(idx);
    const TierAdmission& admit = filter.for_block(b.is_prior_block());
    if (admit.static_) {
      add(idx, Tier::Static, admit.static_weight, b.static_points().size());
    } else if (admit.prior) {
      add(idx, Tier::Prior, admit.prior_weight, b.prior_points().size());
    }
    if (admit.temporary) add(idx, Tier::Temporary, admit.temporary_weight, b.temp_points().size());
  }
  return local;
}

std::pair<LoadingDecision, LocalMap> select_local_map(const Scan& scan_world, const Pose& robot_pose,
                                                      const VoxelMap& map, const LoadingConfig& cfg,
                                                      std::optional<ConvergenceFlag> feedback) {
  LoadingDecision d = decide_loading(scan_world, robot_pose, map, cfg, feedback);
  LocalMap local = collect_local_map(scan_world, map, d.tier_filter);
  if (local.total_points() == 0) {
    throw Error(ErrorCode::EmptyLocalMap, "no admitted map points near the scan");
  }
  return {std::move(d), std::move(local)};
}

const char* to_string(LoadingCase c) {
  switch (c) {
    case LoadingCase::A: return "a";
    case LoadingCase::B: return "b";
    case LoadingCase::C: return "c";
    case LoadingCase::D: return "d";
  }
  return "?";
}

}  // namespace llloc
