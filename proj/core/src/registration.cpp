#include "llloc/registration.hpp"

#include "llloc/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>

namespace llloc {

void RegistrationConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(search_radius > 0.0)) fail("registration: search_radius must be positive");
  if (min_neighbors < 3) fail("registration: min_neighbors must be >= 3");
  if (max_neighbors < min_neighbors) fail("registration: max_neighbors < min_neighbors");
  if (max_iterations < 1) fail("registration: max_iterations must be >= 1");
  if (!(delta >= 0.0)) fail("registration: delta must be non-negative");
  if (!(lambda_min > 0.0 && lambda_min <= lambda_init && lambda_init <= lambda_max)) {
    fail("registration: need 0 < lambda_min <= lambda_init <= lambda_max");
  }
}

std::vector<Correspondence> build_correspondences(std::span<const Point3> world_points,
                                                  const VoxelMap& map, const TierFilter& filter,
                                                  const RegistrationConfig& cfg) {
  const FitConfig fit = cfg.fit();
  const auto n = static_cast<std::ptrdiff_t>(world_points.size());
  std::vector<std::optional<Feature>> features(world_points.size());

#pragma omp parallel
  {
    std::vector<Neighbor> nbrs;
    std::vector<std::pair<double, std::size_t>> order;
    std::vector<Point3> pts;
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const Point3& q = world_points[i];
      nbrs.clear();
      map.radius_search(q, cfg.search_radius, filter, nbrs);
      if (nbrs.size() < cfg.min_neighbors) continue;

      order.clear();
      for (std::size_t j = 0; j < nbrs.size(); ++j) {
        order.emplace_back(squared_distance(nbrs[j].point, q), j);
      }
      const std::size_t k = std::min(cfg.max_neighbors, order.size());
      // ties broken by coordinates so the kept set never depends on search order
      std::partial_sort(order.begin(), order.begin() + k, order.end(),
                        [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          const Point3& pa = nbrs[a.second].point;
                          const Point3& pb = nbrs[b.second].point;
                          return std::lexicographical_compare(pa.data(), pa.data() + 3, pb.data(),
                                                              pb.data() + 3);
                        });
      pts.clear();
      double weight = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        pts.push_back(nbrs[order[j].second].point);
        weight = std::min(weight, nbrs[order[j].second].weight);
      }
      if (auto plane = fit_plane(pts, fit)) {
        plane->weight = weight;
        features[i] = *plane;
      } else if (auto line = fit_line(pts, fit)) {
        line->weight = weight;
        features[i] = *line;
      }
    }
  }

  std::vector<Correspondence> out;
  out.reserve(world_points.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i]) out.push_back(Correspondence{i, *features[i]});
  }
  return out;
}

double total_residual(const Pose& T, std::span<const Point3> body_points,
                      std::span<const Correspondence> corr) {
  double sum = 0.0;
  for (const auto& c : corr) sum += point_residuals(T, body_points[c.point_index], c.feature).squared_norm();
  return sum;
}

namespace {

// Steps shorter than this (m and rad combined) count as a stalled round.
constexpr double kStallStep = 1e-6;

struct NormalEquations {
  Matrix6 H = Matrix6::Zero();
  Vector6 g = Vector6::Zero();
};

NormalEquations assemble(const Pose& T, std::span<const Point3> body,
                         std::span<const Correspondence> corr) {
  NormalEquations ne;
  for (const auto& c : corr) {
    const Point3& p = body[c.point_index];
    if (const auto* plane = std::get_if<PlaneFeature>(&c.feature)) {
      const auto J = plane_jacobian(T, p, *plane);
      const double r = plane_residual(T, p, *plane);
      ne.H.noalias() += J.transpose() * J;
      ne.g.noalias() += J.transpose() * r;
    } else {
      const auto& line = std::get<LineFeature>(c.feature);
      const auto J = line_jacobian(T, p, line);
      const Vec3 r = line_residual(T, p, line);
      ne.H.noalias() += J.transpose() * J;
      ne.g.noalias() += J.transpose() * r;
    }
  }
  return ne;
}

struct StepOutcome {
  Pose pose;
  double cost_before = 0.0;
  double cost_after = 0.0;
  bool accepted = false;
  double step_norm = 0.0;
};

StepOutcome damped_step(const Pose& T, std::span<const Point3> body,
                        std::span<const Correspondence> corr, double cost, double& lambda,
                        const RegistrationConfig& cfg) {
  const NormalEquations ne = assemble(T, body, corr);
  Eigen::SelfAdjointEigenSolver<Matrix6> es(ne.H, Eigen::EigenvaluesOnly);
  const double emax = es.eigenvalues().maxCoeff();
  const double emin = es.eigenvalues().minCoeff();
  if (!(emax > 0.0) || emin <= 1e-12 * emax) {
    throw Error(ErrorCode::SolverSingular, "normal equations are rank deficient");
  }

  StepOutcome out{T, cost, cost, false, 0.0};
  const Vector6 diag = ne.H.diagonal();
  for (int attempt = 0; attempt < cfg.max_damping_attempts; ++attempt) {
    Matrix6 A = ne.H;
    A.diagonal() += lambda * diag;
    const Vector6 xi = A.ldlt().solve(-ne.g);
    const Pose candidate = apply_increment(T, xi);
    const double c = total_residual(candidate, body, corr);
    if (c <= cost) {
      out.pose = candidate;
      out.cost_after = c;
      out.accepted = true;
      out.step_norm = xi.norm();
      lambda = std::max(lambda * 0.1, cfg.lambda_min);
      return out;
    }
    lambda = std::min(lambda * 10.0, cfg.lambda_max);
  }
  return out;
}

}  // namespace

std::pair<RegistrationResult, LoadingDecision> register_scan(const Scan& scan_body,
                                                             const Pose& predicted,
                                                             const VoxelMap& map,
                                                             const LoadingConfig& loading,
                                                             const RegistrationConfig& cfg) {
  if (scan_body.points.empty()) throw Error(ErrorCode::NoCorrespondences, "empty scan");

  LoadingConfig conv = loading;
  conv.delta = cfg.delta;
  conv.max_converge_iters = cfg.max_iterations;
  const std::span<const Point3> body(scan_body.points);

  RegistrationResult best;
  double best_mean = std::numeric_limits<double>::infinity();
  bool have_best = false;
  LoadingDecision decision;
  std::vector<IterationTrace> trace;
  int total_iterations = 0;

  Pose pose = predicted;
  std::optional<ConvergenceFlag> feedback;

  for (int round = 0; round < 2; ++round) {
    const bool augmented_round = round == 1;
    double lambda = cfg.lambda_init;
    for (int k = 1;; ++k) {
      const Scan world = transform_scan(scan_body, pose, Frame::Map);
      // an empty local map means no point can find a feature
      try {
        decision = select_local_map(world, pose, map, loading, feedback).first;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyLocalMap) throw;
        if (!have_best) throw Error(ErrorCode::NoCorrespondences, "nothing admitted near the scan");
        break;
      }

      const auto corr = build_correspondences(world.points, map, decision.tier_filter, cfg);
      if (corr.empty()) {
        if (!have_best) throw Error(ErrorCode::NoCorrespondences, "no point found a feature");
        break;
      }
      ++total_iterations;

      IterationTrace it;
      it.k = k;
      it.augmented_round = augmented_round;
      it.correspondences = corr.size();
      const double r_before = total_residual(pose, body, corr);
      StepOutcome step;
      try {
        step = damped_step(pose, body, corr, r_before, lambda, cfg);
      } catch (const Error&) {
        if (!have_best) throw;
        break;
      }
      it.cost_before_step = step.cost_before;
      it.cost_after_step = step.cost_after;
      it.step_accepted = step.accepted;
      pose = step.pose;

      // r_k is evaluated after the step, on this iteration's correspondences.
      const double r = step.cost_after;
      const double mean = r / static_cast<double>(corr.size());
      const double tested = cfg.residual_mode == ResidualMode::MeanPerCorrespondence ? mean : r;
      it.residual = r;
      trace.push_back(it);

      if (!have_best || mean < best_mean) {
        have_best = true;
        best_mean = mean;
        best.pose = pose;
        best.final_residual = tested;
        best.raw_residual = r;
        best.correspondences_used = corr.size();
      }

      const ConvergenceFlag flag = convergence_flag(tested, k, conv);
      if (flag == ConvergenceFlag::Converged) {
        RegistrationResult res;
        res.pose = pose;
        res.final_residual = tested;
        res.raw_residual = r;
        res.iterations = total_iterations;
        res.converged = true;
        res.augmented = augmented_round;
        res.correspondences_used = corr.size();
        res.trace = std::move(trace);
        return {std::move(res), std::move(decision)};
      }
      if (flag == ConvergenceFlag::Diverged || k >= cfg.max_iterations) break;
      // A rejected or vanishing step leaves the pose, and hence every later
      // iteration of this round, unchanged; skip straight to the cap.
      if (!step.accepted || step.step_norm < kStallStep) break;
    }

    if (round == 0) {
      feedback = ConvergenceFlag::Diverged;
      const Scan world = transform_scan(scan_body, pose, Frame::Map);
      if (!decide_loading(world, pose, map, loading, feedback).augmented) break;
      // continue the augmented round from the best pose so far
      pose = best.pose;
    }
  }

  best.iterations = total_iterations;
  best.converged = false;
  best.augmented = feedback.has_value() && decision.augmented;
  best.trace = std::move(trace);
  return {std::move(best), std::move(decision)};
}

}  // namespace llloc
