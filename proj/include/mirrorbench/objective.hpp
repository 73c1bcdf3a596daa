// Attacker-side placement score: per-frame occlusion/reflection point
// ratios, EMA smoothing, and the accumulated objective J. Runs no odometry;
// the score only needs the planned route and the raw scans, so it stays
// valid when the victim's pipeline is unknown.

#ifndef MIRRORBENCH_OBJECTIVE_HPP
#define MIRRORBENCH_OBJECTIVE_HPP

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/io_util.hpp"
#include "mirrorbench/mirror.hpp"
#include "mirrorbench/world.hpp"

namespace mirrorbench {

/// EMA accumulator for the two disturbance channels. Both start at zero.
struct ObjectiveState {
  double alpha = 0.3;
  double ema_occ = 0.0;
  double ema_refl = 0.0;
};

/// Per-frame breakdown of the objective.
struct ObjectiveFrameRecord {
  double eta_occ = 0.0;
  double eta_refl = 0.0;
  double ema_occ = 0.0;
  double ema_refl = 0.0;
};

struct ObjectiveTrace {
  std::vector<ObjectiveFrameRecord> per_frame;
  double score = 0.0;  // J
};

/// Fraction of the downsampled raw cloud's occupancy that the corrupted
/// part covers: |D(part)| / |D(raw)|, both downsampled independently.
inline double point_ratio(const PointCloud& corrupted_part, const PointCloud& raw,
                          double d_voxel) {
  const std::size_t denom = occupied_voxel_count(raw, d_voxel);
  if (denom == 0) {
    throw std::invalid_argument("point_ratio: raw cloud empty after downsampling");
  }
  if (corrupted_part.empty()) return 0.0;
  return static_cast<double>(occupied_voxel_count(corrupted_part, d_voxel)) /
         static_cast<double>(denom);
}

/// One EMA update of both channels.
inline ObjectiveState ema_step(const ObjectiveState& state, double eta_occ, double eta_refl) {
  if (!(state.alpha > 0.0 && state.alpha <= 1.0)) {
    throw std::invalid_argument("ema_step: alpha must be in (0, 1]");
  }
  ObjectiveState next = state;
  next.ema_occ = state.alpha * eta_occ + (1.0 - state.alpha) * state.ema_occ;
  next.ema_refl = state.alpha * eta_refl + (1.0 - state.alpha) * state.ema_refl;
  return next;
}

/// Evaluates J for one candidate mirror over a scan sequence. Per frame:
/// advance the actuation schedule, place the raw scan in the world at its
/// ground-truth pose, split out the occluded and reflected sets, convert
/// both to point ratios, and push them through the EMA. J sums both EMA
/// channels over all frames.
inline ObjectiveTrace evaluate_objective(const std::vector<ScanFrame>& frames,
                                         const Mirror& mirror, const ActuationSchedule& schedule,
                                         double alpha, double d_voxel, double sensor_max_range) {
  if (frames.empty()) {
    throw std::invalid_argument("evaluate_objective: need at least one frame");
  }
  ObjectiveTrace trace;
  trace.per_frame.reserve(frames.size());
  ObjectiveState state;
  state.alpha = alpha;

  for (const ScanFrame& frame : frames) {
    const double yawed = mirror_yaw_at(schedule, mirror.yaw, frame.gt_pose.timestamp);
    const Mirror posed = mirror.with_yaw(yawed);

    PointCloud world = transform_cloud(frame.raw, frame.gt_pose);
    world.frame = Frame::World;
    const Vec3 sensor = frame.gt_pose.translation;

    const PointCloud occ = occluded_set(world, sensor, posed);
    const PointCloud refl = reflected_set(world, sensor, posed, sensor_max_range);

    const double eta_occ = point_ratio(occ, world, d_voxel);
    const double eta_refl = point_ratio(refl, world, d_voxel);
    state = ema_step(state, eta_occ, eta_refl);

    trace.per_frame.push_back({eta_occ, eta_refl, state.ema_occ, state.ema_refl});
    trace.score += state.ema_occ + state.ema_refl;
  }
  return trace;
}

/// Precomputed per-frame world clouds and raw-occupancy denominators, so
/// repeated candidate evaluations skip the transform and the denominator
/// count. Produces traces bitwise identical to evaluate_objective.
class ObjectiveContext {
 public:
  ObjectiveContext(const std::vector<ScanFrame>& frames, double alpha, double d_voxel,
                   double sensor_max_range)
      : alpha_(alpha), d_voxel_(d_voxel), sensor_max_range_(sensor_max_range) {
    if (frames.empty()) {
      throw std::invalid_argument("ObjectiveContext: need at least one frame");
    }
    cached_.reserve(frames.size());
    for (const ScanFrame& frame : frames) {
      CachedFrame c;
      c.world = transform_cloud(frame.raw, frame.gt_pose);
      c.world.frame = Frame::World;
      c.sensor = frame.gt_pose.translation;
      c.timestamp = frame.gt_pose.timestamp;
      c.raw_voxels = occupied_voxel_count(c.world, d_voxel);
      if (c.raw_voxels == 0) {
        throw std::invalid_argument("ObjectiveContext: raw cloud empty after downsampling");
      }
      cached_.push_back(std::move(c));
    }
  }

  double alpha() const { return alpha_; }
  double d_voxel() const { return d_voxel_; }
  double sensor_max_range() const { return sensor_max_range_; }
  std::size_t frame_count() const { return cached_.size(); }

  ObjectiveTrace evaluate(const Mirror& mirror, const ActuationSchedule& schedule) const {
    ObjectiveTrace trace;
    trace.per_frame.reserve(cached_.size());
    ObjectiveState state;
    state.alpha = alpha_;

    for (const CachedFrame& c : cached_) {
      const Mirror posed = mirror.with_yaw(mirror_yaw_at(schedule, mirror.yaw, c.timestamp));
      const PointCloud occ = occluded_set(c.world, c.sensor, posed);
      const PointCloud refl = reflected_set(c.world, c.sensor, posed, sensor_max_range_);

      const double denom = static_cast<double>(c.raw_voxels);
      const double eta_occ =
          occ.empty() ? 0.0 : static_cast<double>(occupied_voxel_count(occ, d_voxel_)) / denom;
      const double eta_refl =
          refl.empty() ? 0.0 : static_cast<double>(occupied_voxel_count(refl, d_voxel_)) / denom;
      state = ema_step(state, eta_occ, eta_refl);

      trace.per_frame.push_back({eta_occ, eta_refl, state.ema_occ, state.ema_refl});
      trace.score += state.ema_occ + state.ema_refl;
    }
    return trace;
  }

  double score(const Mirror& mirror, const ActuationSchedule& schedule) const {
    return evaluate(mirror, schedule).score;
  }

 private:
  struct CachedFrame {
    PointCloud world{Frame::World};
    Vec3 sensor = Vec3::Zero();
    double timestamp = 0.0;
    std::size_t raw_voxels = 0;
  };

  double alpha_;
  double d_voxel_;
  double sensor_max_range_;
  std::vector<CachedFrame> cached_;
};

/// CSV dump: one row per frame, then the accumulated score as a trailing
/// comment so the file stays machine-greppable.
inline void write_objective_trace_csv(std::ostream& os, const ObjectiveTrace& trace) {
  os << "frame,eta_occ,eta_refl,ema_occ,ema_refl\n";
  for (std::size_t i = 0; i < trace.per_frame.size(); ++i) {
    const ObjectiveFrameRecord& r = trace.per_frame[i];
    os << i << ',' << format_g9(r.eta_occ) << ',' << format_g9(r.eta_refl) << ','
       << format_g9(r.ema_occ) << ',' << format_g9(r.ema_refl) << '\n';
  }
  os << "# J=" << format_g9(trace.score) << '\n';
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_OBJECTIVE_HPP
