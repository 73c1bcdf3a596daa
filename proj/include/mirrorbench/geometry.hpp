// Core 3-D types shared by every module: points, rigid poses, point clouds,
// polyline routes, and the voxel-grid downsampling operator.

#ifndef MIRRORBENCH_GEOMETRY_HPP
#define MIRRORBENCH_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace mirrorbench {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Coordinate frame a point cloud is expressed in.
enum class Frame { Sensor, World, Mirror };

constexpr double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

/// Wrap an angle to (-pi, pi].
inline double wrap_to_pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

// ---------------------------------------------------------------------------
// RigidPose

/// Rigid transform (rotation + translation) with a timestamp in seconds.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double timestamp = 0.0;

  static RigidPose identity(double t = 0.0) {
    RigidPose p;
    p.timestamp = t;
    return p;
  }

  /// Pose with a pure yaw rotation about +z.
  static RigidPose from_yaw(const Vec3& t, double yaw, double timestamp = 0.0) {
    RigidPose p;
    p.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
    p.translation = t;
    p.timestamp = timestamp;
    return p;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidPose inverse() const {
    RigidPose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    inv.timestamp = timestamp;
    return inv;
  }

  /// Composition (this ∘ rhs): applies rhs first. Keeps rhs's timestamp.
  RigidPose operator*(const RigidPose& rhs) const {
    RigidPose out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    out.timestamp = rhs.timestamp;
    return out;
  }

  /// Heading of the rotated x-axis projected onto the ground plane.
  /// Throws when the x-axis is within ~1e-6 of vertical (yaw undefined).
  double yaw() const {
    const Vec3 x_axis = rotation.col(0);
    const double ground_norm = std::hypot(x_axis.x(), x_axis.y());
    if (ground_norm < 1e-6) {
      throw std::domain_error("yaw undefined: rotated x-axis is near vertical");
    }
    return std::atan2(x_axis.y(), x_axis.x());
  }

  /// Orthonormality and determinant check (det must be +1 within tol).
  bool is_valid(double tol = 1e-9) const {
    if (!translation.allFinite() || !std::isfinite(timestamp)) return false;
    const Mat3 should_be_identity = rotation.transpose() * rotation;
    if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

// ---------------------------------------------------------------------------
// PointCloud

/// Unordered set of 3-D points tagged with the frame they live in.
struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::Sensor;

  PointCloud() = default;
  explicit PointCloud(Frame f) : frame(f) {}
  PointCloud(std::vector<Vec3> pts, Frame f) : points(std::move(pts)), frame(f) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool all_finite() const {
    return std::all_of(points.begin(), points.end(),
                       [](const Vec3& p) { return p.allFinite(); });
  }
};

/// Applies `pose` to every point. The frame tag is preserved; callers that
/// change frames (e.g. sensor -> world) retag the result themselves.
inline PointCloud transform_cloud(const PointCloud& cloud, const RigidPose& pose) {
  PointCloud out(cloud.frame);
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    out.points.push_back(pose.apply(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Voxel grid

/// Integer voxel index; a point maps to floor(p / voxel_size) per axis.
struct VoxelKey {
  std::int64_t x = 0, y = 0, z = 0;

  bool operator==(const VoxelKey&) const = default;

  bool operator<(const VoxelKey& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

inline VoxelKey voxel_key_of(const Vec3& p, double voxel_size) {
  return VoxelKey{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    // Large-prime mix, standard for spatial hashing.
    const std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL ^
                            static_cast<std::uint64_t>(k.y) * 19349669ULL ^
                            static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

/// One representative point per occupied voxel, placed at the voxel centroid.
/// Output is ordered lexicographically by voxel index so repeated runs are
/// bitwise identical.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw std::invalid_argument("voxel_downsample: voxel_size must be > 0");
  }
  struct Accum {
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
  };
  std::unordered_map<VoxelKey, Accum, VoxelKeyHash> grid;
  grid.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    Accum& a = grid[voxel_key_of(p, voxel_size)];
    a.sum += p;
    ++a.count;
  }
  std::vector<std::pair<VoxelKey, Accum>> cells(grid.begin(), grid.end());
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  PointCloud out(cloud.frame);
  out.points.reserve(cells.size());
  for (const auto& [key, acc] : cells) {
    out.points.push_back(acc.sum / static_cast<double>(acc.count));
  }
  return out;
}

/// Number of distinct occupied voxels; equals voxel_downsample(...).size()
/// without materializing centroids.
inline std::size_t occupied_voxel_count(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw std::invalid_argument("occupied_voxel_count: voxel_size must be > 0");
  }
  std::unordered_map<VoxelKey, char, VoxelKeyHash> seen;
  seen.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    seen.emplace(voxel_key_of(p, voxel_size), 1);
  }
  return seen.size();
}

// ---------------------------------------------------------------------------
// Polyline

/// Ordered route through the world; at least two vertices, consecutive
/// vertices distinct.
struct Polyline {
  std::vector<Vec3> vertices;

  Polyline() = default;
  explicit Polyline(std::vector<Vec3> v) : vertices(std::move(v)) {}

  bool valid() const {
    if (vertices.size() < 2) return false;
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if ((vertices[i] - vertices[i - 1]).norm() == 0.0) return false;
      if (!vertices[i].allFinite()) return false;
    }
    return vertices.front().allFinite();
  }

  double length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      total += (vertices[i] - vertices[i - 1]).norm();
    }
    return total;
  }

  /// Point at arc length s (clamped to [0, length]).
  Vec3 point_at(double s) const {
    double remaining = std::max(s, 0.0);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      const Vec3 seg = vertices[i] - vertices[i - 1];
      const double seg_len = seg.norm();
      if (remaining <= seg_len) {
        return vertices[i - 1] + seg * (remaining / seg_len);
      }
      remaining -= seg_len;
    }
    return vertices.back();
  }

  /// Unit tangent of the segment containing arc length s. At interior
  /// vertices the following segment wins; past the end, the last segment.
  Vec3 tangent_at(double s) const {
    double remaining = std::max(s, 0.0);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      const Vec3 seg = vertices[i] - vertices[i - 1];
      const double seg_len = seg.norm();
      if (remaining < seg_len || i + 1 == vertices.size()) {
        return seg / seg_len;
      }
      remaining -= seg_len;
    }
    return (vertices.back() - vertices[vertices.size() - 2]).normalized();
  }
};

inline double point_segment_distance(const Vec3& q, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double denom = ab.squaredNorm();
  double t = denom > 0.0 ? (q - a).dot(ab) / denom : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (q - (a + t * ab)).norm();
}

/// Minimum Euclidean distance from q to the route.
inline double distance_to_polyline(const Vec3& q, const Polyline& route) {
  if (!route.valid()) {
    throw std::invalid_argument("distance_to_polyline: invalid polyline");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < route.vertices.size(); ++i) {
    best = std::min(best, point_segment_distance(q, route.vertices[i - 1], route.vertices[i]));
  }
  return best;
}

/// Distance from the ground-plane position (x, y) to the route, evaluated at
/// the route's starting altitude. For planar routes this is the horizontal
/// mirror--trajectory distance.
inline double route_distance_xy(const Polyline& route, double x, double y) {
  return distance_to_polyline(Vec3(x, y, route.vertices.front().z()), route);
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_GEOMETRY_HPP
