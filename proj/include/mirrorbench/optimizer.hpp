// Derivative-free maximization of the placement objective over mirror pose
// (x, y, theta) subject to a minimum route clearance. Default strategy is
// seeded uniform search followed by Gaussian hill-climb refinement around
// the incumbent; a pure random strategy is kept for baselines.

#ifndef MIRRORBENCH_OPTIMIZER_HPP
#define MIRRORBENCH_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/io_util.hpp"
#include "mirrorbench/rng.hpp"

namespace mirrorbench {

struct MirrorPlacement {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // nominal yaw, radians
};

/// Axis-aligned pose box plus the standoff constraint: candidates closer to
/// the route than min_route_distance are infeasible.
struct SearchSpace {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double theta_min = 0.0, theta_max = 0.0;
  double min_route_distance = 1.5;

  bool valid() const {
    return x_max > x_min && y_max > y_min && theta_max > theta_min && min_route_distance >= 0.0;
  }

  bool in_bounds(const MirrorPlacement& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max && p.theta >= theta_min &&
           p.theta <= theta_max;
  }
};

enum class OptimizerStrategy { RandomThenRefine, PureRandom };

// RNG stream tags so the optimizer and the baseline sampler never share a
// sequence even when handed the same user seed.
inline constexpr std::uint64_t kOptimizerStream = 101;
inline constexpr std::uint64_t kBaselineSamplerStream = 102;

struct OptimizerConfig {
  int budget = 300;                 // objective evaluations, exactly
  std::uint64_t seed = 0;
  OptimizerStrategy strategy = OptimizerStrategy::RandomThenRefine;
  double refine_fraction = 0.5;     // share of the budget spent refining
  double sigma_x = 0.5;             // refinement perturbation scales
  double sigma_y = 0.5;
  double sigma_theta = deg_to_rad(5.0);

  bool valid() const {
    return budget >= 1 && refine_fraction > 0.0 && refine_fraction < 1.0 && sigma_x > 0.0 &&
           sigma_y > 0.0 && sigma_theta > 0.0;
  }
};

struct OptimizerHistoryEntry {
  MirrorPlacement params;
  double score = 0.0;  // -inf when infeasible
  bool feasible = false;
};

struct OptimizationResult {
  MirrorPlacement best_params;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<OptimizerHistoryEntry> history;
};

inline bool placement_feasible(const SearchSpace& space, const Polyline& route,
                               const MirrorPlacement& p) {
  if (!space.in_bounds(p)) return false;
  return route_distance_xy(route, p.x, p.y) >= space.min_route_distance;
}

namespace detail {

inline MirrorPlacement uniform_placement(const SearchSpace& space, Rng& rng) {
  MirrorPlacement p;
  p.x = rng.uniform(space.x_min, space.x_max);
  p.y = rng.uniform(space.y_min, space.y_max);
  p.theta = rng.uniform(space.theta_min, space.theta_max);
  return p;
}

}  // namespace detail

/// Maximizes `objective` (a callable MirrorPlacement -> double) within the
/// space. Spends exactly config.budget objective evaluations; infeasible
/// refinement samples are recorded with score -inf and do not consume
/// evaluations' feasible-phase rejection budget. Deterministic per seed.
template <typename ObjectiveFn>
OptimizationResult optimize_placement(const SearchSpace& space, const Polyline& route,
                                      const OptimizerConfig& config, ObjectiveFn&& objective) {
  if (!space.valid()) throw std::invalid_argument("optimize_placement: invalid search space");
  if (!config.valid()) throw std::invalid_argument("optimize_placement: invalid config");

  Rng rng(mix_seed(config.seed, kOptimizerStream));
  OptimizationResult result;
  result.history.reserve(static_cast<std::size_t>(config.budget));

  const int uniform_budget =
      config.strategy == OptimizerStrategy::PureRandom
          ? config.budget
          : std::min(config.budget,
                     static_cast<int>(std::ceil((1.0 - config.refine_fraction) * config.budget)));

  const long long max_rejections = 10LL * config.budget;
  long long rejections = 0;

  auto commit = [&](const MirrorPlacement& p, double score, bool feasible) {
    result.history.push_back({p, score, feasible});
    if (feasible && score > result.best_score) {
      result.best_score = score;
      result.best_params = p;
    }
  };

  // Phase 1: uniform feasible exploration (rejection sampling over the box).
  for (int i = 0; i < uniform_budget; ++i) {
    MirrorPlacement p;
    for (;;) {
      p = detail::uniform_placement(space, rng);
      if (placement_feasible(space, route, p)) break;
      if (++rejections > max_rejections) {
        throw InfeasibleSpaceError(
            "optimize_placement: no feasible placement found by rejection sampling");
      }
    }
    commit(p, objective(p), true);
  }

  // Phase 2: Gaussian perturbation around the incumbent, clipped to bounds.
  // Infeasible draws still consume budget -- they are legitimate (wasted)
  // objective decisions, recorded as -inf without calling the objective.
  for (int i = uniform_budget; i < config.budget; ++i) {
    MirrorPlacement p = result.best_params;
    p.x = std::clamp(p.x + rng.normal(0.0, config.sigma_x), space.x_min, space.x_max);
    p.y = std::clamp(p.y + rng.normal(0.0, config.sigma_y), space.y_min, space.y_max);
    p.theta =
        std::clamp(p.theta + rng.normal(0.0, config.sigma_theta), space.theta_min, space.theta_max);
    if (!placement_feasible(space, route, p)) {
      commit(p, -std::numeric_limits<double>::infinity(), false);
      continue;
    }
    commit(p, objective(p), true);
  }
  return result;
}

/// Uniform random placement at an exact standoff from the route: picks a
/// route arc length and a side, walks out along the horizontal normal, and
/// keeps the draw when it lands inside bounds at the requested distance.
/// Used by the random-placement baseline so it fights at the same range as
/// the optimized mirror.
inline MirrorPlacement sample_random_placement(const SearchSpace& space, const Polyline& route,
                                               double fixed_distance, std::uint64_t seed) {
  if (!route.valid()) {
    throw std::invalid_argument("sample_random_placement: invalid route");
  }
  if (!(fixed_distance > 0.0)) {
    throw std::invalid_argument("sample_random_placement: fixed_distance must be > 0");
  }
  Rng rng(mix_seed(seed, kBaselineSamplerStream));
  const double total_len = route.length();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double s = rng.uniform(0.0, total_len);
    const double side = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    const Vec3 base = route.point_at(s);
    const Vec3 tangent = route.tangent_at(s);
    const double t_norm = std::hypot(tangent.x(), tangent.y());
    if (t_norm < 1e-9) continue;  // vertical segment, no horizontal normal
    const Vec3 normal(-tangent.y() / t_norm, tangent.x() / t_norm, 0.0);

    MirrorPlacement p;
    p.x = base.x() + side * fixed_distance * normal.x();
    p.y = base.y() + side * fixed_distance * normal.y();
    p.theta = rng.uniform(space.theta_min, space.theta_max);
    if (!space.in_bounds(p)) continue;
    // Walking out along one segment's normal can land closer to a different
    // segment; enforce the exact standoff against the whole route.
    if (std::abs(route_distance_xy(route, p.x, p.y) - fixed_distance) > 1e-6) continue;
    return p;
  }
  throw InfeasibleSpaceError(
      "sample_random_placement: no placement at the requested distance inside bounds");
}

/// CSV history (`trial, x, y, theta, feasible, score`) with a best-candidate
/// summary line.
inline void write_optimizer_history_csv(std::ostream& os, const OptimizationResult& result) {
  os << "trial,x,y,theta,feasible,score\n";
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const OptimizerHistoryEntry& e = result.history[i];
    os << i << ',' << format_g9(e.params.x) << ',' << format_g9(e.params.y) << ','
       << format_g9(e.params.theta) << ',' << (e.feasible ? 1 : 0) << ','
       << (std::isinf(e.score) ? "-inf" : format_g9(e.score)) << '\n';
  }
  os << "# best x=" << format_g9(result.best_params.x) << " y=" << format_g9(result.best_params.y)
     << " theta=" << format_g9(result.best_params.theta)
     << " score=" << format_g9(result.best_score) << '\n';
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_OPTIMIZER_HPP
