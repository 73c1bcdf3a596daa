// Planar-mirror physics: occlusion culling of sight lines through the mirror
// extent, ghost-point synthesis via the virtual-sensor construction, and the
// periodic yaw actuation schedule with its correspondence-distance bound.

#ifndef MIRRORBENCH_MIRROR_HPP
#define MIRRORBENCH_MIRROR_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mirrorbench/geometry.hpp"

namespace mirrorbench {

/// Vertical planar reflective rectangle in the world frame. The normal is
/// derived from yaw: n = (cos yaw, sin yaw, 0); the reflective side is the
/// half-space the normal points into.
struct Mirror {
  Vec3 center = Vec3::Zero();  // C
  double yaw = 0.0;            // radians, normal direction in the ground plane
  double width = 1.8;          // lateral extent, meters
  double height = 0.9;         // vertical extent, meters

  Vec3 normal() const { return Vec3(std::cos(yaw), std::sin(yaw), 0.0); }
  /// In-plane lateral axis of the mirror frame.
  Vec3 lateral() const { return Vec3(-std::sin(yaw), std::cos(yaw), 0.0); }

  Mirror with_yaw(double new_yaw) const {
    Mirror m = *this;
    m.yaw = new_yaw;
    return m;
  }

  bool valid() const { return width > 0.0 && height > 0.0 && center.allFinite(); }
};

/// Triangular yaw oscillation: constant |angular speed| everywhere except
/// the turning points.
struct ActuationSchedule {
  double angular_speed = deg_to_rad(7.0);  // omega, rad/s
  double amplitude = deg_to_rad(10.0);     // radians; 0 disables motion
  double phase = 0.0;

  bool valid() const { return angular_speed >= 0.0 && amplitude >= 0.0; }
};

/// Unit triangle wave with period 4: 0 -> 1 -> 0 -> -1 -> 0, slope +-1.
inline double triangle_wave(double s) {
  const double m = s - 4.0 * std::floor(s * 0.25);
  if (m < 1.0) return m;
  if (m < 3.0) return 2.0 - m;
  return m - 4.0;
}

/// Mirror yaw at time t under the schedule. With zero amplitude the mirror
/// holds its nominal yaw.
inline double mirror_yaw_at(const ActuationSchedule& schedule, double nominal_yaw, double t) {
  if (schedule.amplitude == 0.0 || schedule.angular_speed == 0.0) {
    return nominal_yaw + (schedule.amplitude == 0.0
                              ? 0.0
                              : schedule.amplitude * triangle_wave(schedule.phase));
  }
  const double s = schedule.angular_speed * t / schedule.amplitude + schedule.phase;
  return nominal_yaw + schedule.amplitude * triangle_wave(s);
}

// ---------------------------------------------------------------------------
// Ray/plane geometry

/// Ray-plane intersection parameter u for the sight line S -> p, where u=0
/// is the sensor and u=1 the measured point. Absent when the ray is parallel
/// to the mirror plane.
inline std::optional<double> ray_plane_u(const Vec3& sensor, const Vec3& point,
                                         const Mirror& mirror) {
  const Vec3 n = mirror.normal();
  const double denom = (point - sensor).dot(n);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return (mirror.center - sensor).dot(n) / denom;
}

namespace detail {

/// Extent test on a point already known to lie on the mirror plane.
/// Boundaries are inclusive.
inline bool extent_contains(const Vec3& on_plane, const Mirror& mirror) {
  const Vec3 offset = on_plane - mirror.center;
  return std::abs(offset.dot(mirror.lateral())) <= 0.5 * mirror.width &&
         std::abs(offset.z()) <= 0.5 * mirror.height;
}

}  // namespace detail

/// Whether a world point on the mirror plane falls within the physical
/// extent. Throws if the point is off-plane by more than 1e-6.
inline bool in_extent(const Vec3& i_world, const Mirror& mirror) {
  const double off_plane = (i_world - mirror.center).dot(mirror.normal());
  if (std::abs(off_plane) > 1e-6) {
    throw std::invalid_argument("in_extent: point is not on the mirror plane");
  }
  return detail::extent_contains(i_world, mirror);
}

/// Indices of cloud points whose sight line from the sensor passes through
/// the mirror extent with 0 < u <= 1: the points the mirror hides.
inline std::vector<std::size_t> occluded_indices(const PointCloud& cloud, const Vec3& sensor,
                                                 const Mirror& mirror) {
  std::vector<std::size_t> indices;
  const Vec3 n = mirror.normal();
  const double plane_offset = (mirror.center - sensor).dot(n);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const double denom = (p - sensor).dot(n);
    if (std::abs(denom) < 1e-12) continue;
    const double u = plane_offset / denom;
    if (!(u > 0.0 && u <= 1.0)) continue;
    const Vec3 crossing = sensor + u * (p - sensor);
    if (detail::extent_contains(crossing, mirror)) {
      indices.push_back(i);
    }
  }
  return indices;
}

/// The occluded point set P_occ.
inline PointCloud occluded_set(const PointCloud& cloud, const Vec3& sensor, const Mirror& mirror) {
  PointCloud out(cloud.frame);
  for (std::size_t i : occluded_indices(cloud, sensor, mirror)) {
    out.points.push_back(cloud.points[i]);
  }
  return out;
}

/// Virtual sensor S_v, the reflection of the sensor across the mirror plane.
inline Vec3 virtual_sensor(const Vec3& sensor, const Mirror& mirror) {
  const Vec3 n = mirror.normal();
  return sensor - 2.0 * (sensor - mirror.center).dot(n) * n;
}

/// Reflection g(p) of a point across the mirror plane.
inline Vec3 reflect_point(const Vec3& p, const Mirror& mirror) {
  const Vec3 n = mirror.normal();
  return p - 2.0 * (p - mirror.center).dot(n) * n;
}

/// Ghost points produced by specular reflection. Empty unless the sensor
/// faces the reflective side ((S - C) . n > 0). A source point contributes
/// when it lies on the reflective side, the segment from the virtual sensor
/// to it crosses the mirror extent with 0 < u < 1, and the folded path length
/// fits inside the sensor's range gate.
inline PointCloud reflected_set(const PointCloud& cloud, const Vec3& sensor, const Mirror& mirror,
                                double sensor_max_range) {
  PointCloud out(cloud.frame);
  const Vec3 n = mirror.normal();
  if ((sensor - mirror.center).dot(n) <= 0.0) return out;

  const Vec3 s_virtual = virtual_sensor(sensor, mirror);
  const double plane_offset = (mirror.center - s_virtual).dot(n);
  for (const Vec3& p : cloud.points) {
    if ((p - mirror.center).dot(n) <= 0.0) continue;
    const double denom = (p - s_virtual).dot(n);
    if (std::abs(denom) < 1e-12) continue;
    const double u = plane_offset / denom;
    if (!(u > 0.0 && u < 1.0)) continue;
    const Vec3 crossing = s_virtual + u * (p - s_virtual);
    if (!detail::extent_contains(crossing, mirror)) continue;
    const Vec3 ghost = reflect_point(p, mirror);
    if ((ghost - sensor).norm() > sensor_max_range) continue;
    out.points.push_back(ghost);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scan composition

enum class MirrorMode { Full, OcclusionOnly, ReflectionOnly };

/// P_sim plus the diagnostic sets that produced it.
struct MirrorSimOutput {
  PointCloud p_sim{Frame::World};
  PointCloud p_occ{Frame::World};
  PointCloud p_refl{Frame::World};
};

/// Composes the simulated cloud: Full removes the occluded points and adds
/// the ghosts; OcclusionOnly/ReflectionOnly isolate the two effects. The
/// diagnostic sets are always populated.
inline MirrorSimOutput simulate_mirror(const PointCloud& cloud, const Vec3& sensor,
                                       const Mirror& mirror, MirrorMode mode,
                                       double sensor_max_range) {
  MirrorSimOutput out;
  out.p_sim.frame = out.p_occ.frame = out.p_refl.frame = cloud.frame;

  const std::vector<std::size_t> occ = occluded_indices(cloud, sensor, mirror);
  for (std::size_t i : occ) out.p_occ.points.push_back(cloud.points[i]);
  out.p_refl = reflected_set(cloud, sensor, mirror, sensor_max_range);

  const bool drop_occluded = mode != MirrorMode::ReflectionOnly;
  const bool add_ghosts = mode != MirrorMode::OcclusionOnly;

  out.p_sim.points.reserve(cloud.size() + out.p_refl.size());
  if (drop_occluded) {
    std::size_t next_occ = 0;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      if (next_occ < occ.size() && occ[next_occ] == i) {
        ++next_occ;
        continue;
      }
      out.p_sim.points.push_back(cloud.points[i]);
    }
  } else {
    out.p_sim.points = cloud.points;
  }
  if (add_ghosts) {
    out.p_sim.points.insert(out.p_sim.points.end(), out.p_refl.points.begin(),
                            out.p_refl.points.end());
  }
  return out;
}

/// Applies the mirror to one raw sensor-frame scan. Surviving raw points are
/// passed through untouched (bitwise), so a non-interacting mirror leaves
/// the scan identical; ghosts are mapped back into the sensor frame.
struct CorruptedScan {
  PointCloud scan{Frame::Sensor};   // what the victim receives
  PointCloud occ_world{Frame::World};
  PointCloud refl_world{Frame::World};
};

inline CorruptedScan corrupt_scan(const PointCloud& raw_sensor, const RigidPose& gt_pose,
                                  const Mirror& mirror, MirrorMode mode, double sensor_max_range) {
  PointCloud world = transform_cloud(raw_sensor, gt_pose);
  world.frame = Frame::World;
  const Vec3 sensor = gt_pose.translation;

  CorruptedScan out;
  const std::vector<std::size_t> occ = occluded_indices(world, sensor, mirror);
  for (std::size_t i : occ) out.occ_world.points.push_back(world.points[i]);
  out.refl_world = reflected_set(world, sensor, mirror, sensor_max_range);

  const bool drop_occluded = mode != MirrorMode::ReflectionOnly;
  const bool add_ghosts = mode != MirrorMode::OcclusionOnly;

  out.scan.points.reserve(raw_sensor.size() + out.refl_world.size());
  if (drop_occluded) {
    std::size_t next_occ = 0;
    for (std::size_t i = 0; i < raw_sensor.points.size(); ++i) {
      if (next_occ < occ.size() && occ[next_occ] == i) {
        ++next_occ;
        continue;
      }
      out.scan.points.push_back(raw_sensor.points[i]);
    }
  } else {
    out.scan.points = raw_sensor.points;
  }
  if (add_ghosts) {
    const RigidPose world_to_sensor = gt_pose.inverse();
    for (const Vec3& g : out.refl_world.points) {
      out.scan.points.push_back(world_to_sensor.apply(g));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Actuation bound

/// Inter-frame displacement of a ghost point at range r when the mirror yaws
/// by delta_theta between frames: L_v = 2 r sin(delta_theta).
inline double ghost_displacement(double r, double delta_theta) {
  return 2.0 * r * std::sin(delta_theta);
}

/// Largest per-frame yaw step that keeps every ghost within the
/// correspondence threshold M: arcsin(M / (2 r_max)), capped at pi/2 when
/// any step would satisfy the bound.
inline double max_delta_theta(double correspondence_threshold, double r_max) {
  if (!(correspondence_threshold > 0.0) || !(r_max > 0.0)) {
    throw std::invalid_argument("max_delta_theta: M and r_max must be > 0");
  }
  const double arg = std::min(correspondence_threshold / (2.0 * r_max), 1.0);
  return std::asin(arg);
}

/// Maximum horizontal distance from the mirror's rotation axis over a ghost
/// cloud; the r_max that the actuation bound is evaluated against.
inline double max_ghost_range(const PointCloud& ghosts_world, const Vec3& mirror_center) {
  double r_max = 0.0;
  for (const Vec3& g : ghosts_world.points) {
    const double dx = g.x() - mirror_center.x();
    const double dy = g.y() - mirror_center.y();
    r_max = std::max(r_max, std::hypot(dx, dy));
  }
  return r_max;
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_MIRROR_HPP
