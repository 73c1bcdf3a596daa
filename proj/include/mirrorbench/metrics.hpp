// Trajectory and point-cloud error metrics: APE RMSE, maximum heading error,
// and the symmetric Chamfer distance.

#ifndef MIRRORBENCH_METRICS_HPP
#define MIRRORBENCH_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/trajectory.hpp"

namespace mirrorbench {

struct MetricReport {
  double ape_rmse = 0.0;               // meters
  double max_heading_error_deg = 0.0;  // degrees
  std::vector<double> per_frame_errors;
};

namespace detail {

/// Pairs each est pose with the nearest-timestamp ref pose. Throws unless the
/// association is a bijection with gaps below half the frame spacing.
inline std::vector<std::size_t> associate_by_timestamp(const Trajectory& est,
                                                       const Trajectory& ref) {
  if (est.empty() || ref.empty()) {
    throw std::invalid_argument("trajectory metrics: empty trajectory");
  }
  if (est.size() != ref.size()) {
    throw std::invalid_argument("trajectory metrics: length mismatch");
  }
  double min_spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < ref.size(); ++i) {
    min_spacing = std::min(min_spacing, ref.poses[i].timestamp - ref.poses[i - 1].timestamp);
  }
  std::vector<std::size_t> match(est.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est.poses[i].timestamp;
    while (j + 1 < ref.size() &&
           std::abs(ref.poses[j + 1].timestamp - t) <= std::abs(ref.poses[j].timestamp - t)) {
      ++j;
    }
    if (ref.size() > 1 && std::abs(ref.poses[j].timestamp - t) > 0.5 * min_spacing) {
      throw std::invalid_argument("trajectory metrics: timestamps do not associate");
    }
    match[i] = j;
  }
  for (std::size_t i = 1; i < match.size(); ++i) {
    if (match[i] <= match[i - 1]) {
      throw std::invalid_argument("trajectory metrics: association is not one-to-one");
    }
  }
  return match;
}

}  // namespace detail

/// Per-frame translational errors between timestamp-associated poses.
inline std::vector<double> per_frame_translation_errors(const Trajectory& est,
                                                        const Trajectory& ref) {
  const auto match = detail::associate_by_timestamp(est, ref);
  std::vector<double> errors;
  errors.reserve(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    errors.push_back((est.poses[i].translation - ref.poses[match[i]].translation).norm());
  }
  return errors;
}

/// Root-mean-square translational error over associated frames. No global
/// alignment is applied: both trajectories are expected to share their start
/// frame, so attack-induced drift stays visible.
inline double ape_rmse(const Trajectory& est, const Trajectory& ref) {
  const auto errors = per_frame_translation_errors(est, ref);
  double sum_sq = 0.0;
  for (double e : errors) sum_sq += e * e;
  return std::sqrt(sum_sq / static_cast<double>(errors.size()));
}

/// Maximum absolute yaw difference in degrees, wrapped to +-180.
inline double max_heading_error(const Trajectory& est, const Trajectory& ref) {
  const auto match = detail::associate_by_timestamp(est, ref);
  double worst = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = wrap_to_pi(est.poses[i].yaw() - ref.poses[match[i]].yaw());
    worst = std::max(worst, std::abs(d));
  }
  return rad_to_deg(worst);
}

inline MetricReport build_metric_report(const Trajectory& est, const Trajectory& ref) {
  MetricReport report;
  report.per_frame_errors = per_frame_translation_errors(est, ref);
  double sum_sq = 0.0;
  for (double e : report.per_frame_errors) sum_sq += e * e;
  report.ape_rmse = std::sqrt(sum_sq / static_cast<double>(report.per_frame_errors.size()));
  report.max_heading_error_deg = max_heading_error(est, ref);
  return report;
}

// ---------------------------------------------------------------------------
// Chamfer distance

namespace detail {

/// Exact nearest-neighbor queries over a uniform grid with expanding-shell
/// search. Distinct from (and cross-checked against) the brute-force oracle
/// used in tests.
class GridNn {
 public:
  explicit GridNn(const std::vector<Vec3>& points) : points_(points) {
    Vec3 lo = points.front(), hi = points.front();
    for (const Vec3& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double extent = (hi - lo).maxCoeff();
    // Aim for ~1 point per cell; a degenerate extent (all points coincident)
    // gets an arbitrary positive cell so the walk below stays bounded.
    const double per_cell = extent / std::cbrt(static_cast<double>(points.size()));
    cell_ = per_cell > 1e-9 ? per_cell : 1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      cells_[voxel_key_of(points[i], cell_)].push_back(static_cast<std::uint32_t>(i));
    }
    cell_lo_ = voxel_key_of(lo, cell_);
    cell_hi_ = voxel_key_of(hi, cell_);
  }

  double min_squared_distance(const Vec3& q) const {
    const VoxelKey c = voxel_key_of(q, cell_);
    // Shells closer than the occupied bounding box are empty, so the walk
    // starts at the box and stops at its far corner.
    const std::int64_t k_start =
        std::max({axis_gap(c.x, cell_lo_.x, cell_hi_.x), axis_gap(c.y, cell_lo_.y, cell_hi_.y),
                  axis_gap(c.z, cell_lo_.z, cell_hi_.z)});
    const std::int64_t k_limit =
        std::max({axis_span(c.x, cell_lo_.x, cell_hi_.x), axis_span(c.y, cell_lo_.y, cell_hi_.y),
                  axis_span(c.z, cell_lo_.z, cell_hi_.z)});
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t k = k_start; k <= k_limit; ++k) {
      // A cell at Chebyshev distance k can hold points as close as
      // (k-1)*cell, so unscanned shells >= k are ruled out only once the
      // best hit beats that bound.
      const double reachable = static_cast<double>(k > 0 ? k - 1 : 0) * cell_;
      if (reachable * reachable >= best) break;
      scan_shell(q, c, k, best);
    }
    return best;
  }

 private:
  static std::int64_t axis_span(std::int64_t c, std::int64_t lo, std::int64_t hi) {
    return std::max(std::llabs(c - lo), std::llabs(c - hi));
  }

  static std::int64_t axis_gap(std::int64_t c, std::int64_t lo, std::int64_t hi) {
    if (c < lo) return lo - c;
    if (c > hi) return c - hi;
    return 0;
  }

  void scan_shell(const Vec3& q, const VoxelKey& c, std::int64_t k, double& best) const {
    const std::int64_t x0 = std::max(c.x - k, cell_lo_.x), x1 = std::min(c.x + k, cell_hi_.x);
    const std::int64_t y0 = std::max(c.y - k, cell_lo_.y), y1 = std::min(c.y + k, cell_hi_.y);
    const std::int64_t z0 = std::max(c.z - k, cell_lo_.z), z1 = std::min(c.z + k, cell_hi_.z);
    for (std::int64_t x = x0; x <= x1; ++x) {
      for (std::int64_t y = y0; y <= y1; ++y) {
        for (std::int64_t z = z0; z <= z1; ++z) {
          if (std::max({std::llabs(x - c.x), std::llabs(y - c.y), std::llabs(z - c.z)}) != k) {
            continue;
          }
          const auto it = cells_.find(VoxelKey{x, y, z});
          if (it == cells_.end()) continue;
          for (std::uint32_t idx : it->second) {
            best = std::min(best, (points_[idx] - q).squaredNorm());
          }
        }
      }
    }
  }

  const std::vector<Vec3>& points_;
  double cell_ = 1.0;
  VoxelKey cell_lo_, cell_hi_;
  std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> cells_;
};

}  // namespace detail

/// Symmetric Chamfer distance: mean-of-minimum squared distances A->B plus
/// B->A. Units are square meters (no square root is taken).
inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("chamfer_distance: empty input");
  }
  const detail::GridNn nn_b(b.points);
  double sum_ab = 0.0;
  for (const Vec3& p : a.points) sum_ab += nn_b.min_squared_distance(p);
  const detail::GridNn nn_a(a.points);
  double sum_ba = 0.0;
  for (const Vec3& p : b.points) sum_ba += nn_a.min_squared_distance(p);
  return sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size());
}

/// Square root of chamfer_distance, for comparisons against tools that
/// report the metric in meters.
inline double chamfer_distance_root(const PointCloud& a, const PointCloud& b) {
  return std::sqrt(chamfer_distance(a, b));
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_METRICS_HPP
