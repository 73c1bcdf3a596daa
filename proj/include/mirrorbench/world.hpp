// Synthetic environment and raycast LiDAR sensor model. Produces per-frame
// raw scans along a scripted ground-truth route.

#ifndef MIRRORBENCH_WORLD_HPP
#define MIRRORBENCH_WORLD_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/io_util.hpp"
#include "mirrorbench/rng.hpp"

namespace mirrorbench {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool valid() const { return (max.array() > min.array()).all(); }
};

/// Axis-aligned boxes plus an optional ground plane; enough structure for
/// scan matching without a full scene model.
struct WorldModel {
  std::vector<Aabb> obstacles;
  std::optional<double> ground_z;

  bool valid() const {
    for (const Aabb& b : obstacles) {
      if (!b.valid()) return false;
    }
    return true;
  }
};

struct LidarModel {
  double horizontal_fov = deg_to_rad(180.0);  // front-facing default
  double vertical_fov = deg_to_rad(40.0);
  int azimuth_steps = 360;
  int elevation_channels = 32;
  double max_range = 50.0;       // meters
  double scan_period = 0.1;      // seconds per frame
  double range_noise_sigma = 0.0;  // optional isotropic range noise, meters

  bool valid() const {
    return horizontal_fov > 0.0 && horizontal_fov <= 2.0 * M_PI + 1e-12 &&
           vertical_fov > 0.0 && vertical_fov <= M_PI + 1e-12 && azimuth_steps >= 1 &&
           elevation_channels >= 1 && max_range > 0.0 && scan_period > 0.0 &&
           range_noise_sigma >= 0.0;
  }
};

/// One simulated frame: ground-truth pose plus the raw scan in the sensor frame.
struct ScanFrame {
  int index = 0;
  RigidPose gt_pose;
  PointCloud raw{Frame::Sensor};
};

namespace detail {

/// Slab test. Returns the entry distance of the ray into the box, if any.
inline std::optional<double> ray_aabb_entry(const Vec3& origin, const Vec3& dir, const Aabb& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double o = origin[axis];
    const double d = dir[axis];
    if (std::abs(d) < 1e-15) {
      if (o < box.min[axis] || o > box.max[axis]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d;
    double ta = (box.min[axis] - o) * inv;
    double tb = (box.max[axis] - o) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 1e-9) return std::nullopt;  // behind or starting inside
  return t0;
}

}  // namespace detail

/// Casts one ray expressed in world coordinates; returns the hit range.
inline std::optional<double> raycast_range(const WorldModel& world, const Vec3& origin,
                                           const Vec3& dir, double max_range) {
  double best = max_range;
  bool hit = false;
  for (const Aabb& box : world.obstacles) {
    const auto t = detail::ray_aabb_entry(origin, dir, box);
    if (t && *t <= best) {
      best = *t;
      hit = true;
    }
  }
  if (world.ground_z && std::abs(dir.z()) > 1e-15) {
    const double t = (*world.ground_z - origin.z()) / dir.z();
    if (t > 1e-9 && t <= best) {
      best = t;
      hit = true;
    }
  }
  return hit ? std::optional<double>(best) : std::nullopt;
}

/// One full scan on the regular azimuth x elevation grid, in the sensor
/// frame. Azimuth samples sit at fractional offset `azimuth_phase` within
/// each cell (0.5 = cell center) so every ray stays strictly inside the
/// horizontal FoV; elevation channels span the vertical FoV inclusively,
/// like the line layout of a spinning lidar.
inline PointCloud raycast_scan(const WorldModel& world, const RigidPose& sensor_pose,
                               const LidarModel& lidar, Rng* noise_rng = nullptr,
                               double azimuth_phase = 0.5) {
  if (!world.valid()) throw ConfigError("raycast_scan: invalid world");
  if (!lidar.valid()) throw ConfigError("raycast_scan: invalid lidar model");

  PointCloud cloud(Frame::Sensor);
  cloud.points.reserve(static_cast<std::size_t>(lidar.azimuth_steps) * lidar.elevation_channels / 4);
  const Vec3 origin = sensor_pose.translation;
  for (int ch = 0; ch < lidar.elevation_channels; ++ch) {
    const double elevation =
        lidar.elevation_channels == 1
            ? 0.0
            : -0.5 * lidar.vertical_fov +
                  lidar.vertical_fov * static_cast<double>(ch) / (lidar.elevation_channels - 1);
    const double cos_el = std::cos(elevation);
    const double sin_el = std::sin(elevation);
    for (int step = 0; step < lidar.azimuth_steps; ++step) {
      const double azimuth = -0.5 * lidar.horizontal_fov +
                             lidar.horizontal_fov * (static_cast<double>(step) + azimuth_phase) /
                                 lidar.azimuth_steps;
      const Vec3 dir_sensor(cos_el * std::cos(azimuth), cos_el * std::sin(azimuth), sin_el);
      const Vec3 dir_world = sensor_pose.rotation * dir_sensor;
      const auto range = raycast_range(world, origin, dir_world, lidar.max_range);
      if (!range) continue;
      double r = *range;
      if (noise_rng && lidar.range_noise_sigma > 0.0) {
        r += noise_rng->normal(0.0, lidar.range_noise_sigma);
        if (r <= 1e-6 || r > lidar.max_range) continue;
      }
      cloud.points.push_back(dir_sensor * r);
    }
  }
  return cloud;
}

/// Samples ground-truth poses along the route at speed * scan_period spacing
/// (yaw follows the route tangent) and raycasts one scan per pose. With
/// range noise enabled, per-frame generators are seeded from noise_seed so
/// identical inputs reproduce identical scans.
///
/// The azimuth phase drifts by the golden ratio each revolution, as the
/// free-running spin of a real scanner does against the frame clock.
/// Without the drift, a static world is resampled at identical ray
/// directions every frame and scan matching locks onto the zero-motion
/// solution instead of the true one.
inline std::vector<ScanFrame> generate_route_frames(const WorldModel& world, const Polyline& route,
                                                    double speed, const LidarModel& lidar,
                                                    std::uint64_t noise_seed = 0) {
  if (!route.valid()) throw ConfigError("generate_route_frames: invalid route");
  if (!(speed > 0.0)) throw ConfigError("generate_route_frames: speed must be > 0");
  if (!lidar.valid()) throw ConfigError("generate_route_frames: invalid lidar model");

  const double step = speed * lidar.scan_period;
  const double total = route.length();
  if (total < step) {
    throw ConfigError("generate_route_frames: route shorter than one step");
  }
  const int frame_count = static_cast<int>(std::floor(total / step + 1e-9)) + 1;

  std::vector<ScanFrame> frames;
  frames.reserve(frame_count);
  const bool noisy = lidar.range_noise_sigma > 0.0;
  for (int i = 0; i < frame_count; ++i) {
    const double s = std::min(static_cast<double>(i) * step, total);
    const Vec3 position = route.point_at(s);
    const Vec3 tangent = route.tangent_at(s);
    const double yaw = std::atan2(tangent.y(), tangent.x());

    ScanFrame frame;
    frame.index = i;
    frame.gt_pose = RigidPose::from_yaw(position, yaw, static_cast<double>(i) * lidar.scan_period);
    constexpr double kGoldenRatioConjugate = 0.6180339887498949;
    const double phase = std::fmod(0.5 + static_cast<double>(i) * kGoldenRatioConjugate, 1.0);
    if (noisy) {
      Rng rng(mix_seed(noise_seed, static_cast<std::uint64_t>(i)));
      frame.raw = raycast_scan(world, frame.gt_pose, lidar, &rng, phase);
    } else {
      frame.raw = raycast_scan(world, frame.gt_pose, lidar, nullptr, phase);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_WORLD_HPP
