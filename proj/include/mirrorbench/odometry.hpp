// Reference victim: scan-to-map ICP against a voxel-hash local map with
// constant-velocity initialization. Residuals are point-to-plane against
// per-voxel surface normals, falling back to point-to-point where the local
// patch is not planar. Point-to-plane matters here: matching resampled
// sweeps of a smooth surface point-to-point biases the estimate toward zero
// motion, because every query snaps to a stale sample of the same surface.
// Deliberately plain otherwise -- the bench measures how far a standard
// pipeline can be dragged, so the victim avoids outlier-specific defenses.

#ifndef MIRRORBENCH_ODOMETRY_HPP
#define MIRRORBENCH_ODOMETRY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/trajectory.hpp"
#include "mirrorbench/world.hpp"

namespace mirrorbench {

struct OdometryParams {
  double max_correspondence_dist = 1.0;  // M, meters; fixed across iterations
  double map_voxel_size = 0.5;           // local map bucketing
  double scan_voxel_size = 0.25;         // input decimation before matching
  int max_iterations = 50;
  double convergence_eps = 1e-4;         // on the pose update norm
  double local_map_radius = 60.0;        // drop map voxels beyond this
  int max_points_per_voxel = 20;

  bool valid() const {
    return max_correspondence_dist > 0.0 && map_voxel_size > 0.0 && scan_voxel_size > 0.0 &&
           max_iterations > 0 && convergence_eps > 0.0 && local_map_radius > 0.0 &&
           max_points_per_voxel > 0;
  }
};

/// Nearest map point plus the surface normal of its voxel, when the voxel's
/// occupants form a planar patch.
struct SurfaceMatch {
  Vec3 point;
  std::optional<Vec3> normal;
};

/// Hash-bucketed map of world points with capped occupancy per voxel, an
/// expanding-shell nearest-neighbor query with early exit, and lazily cached
/// per-voxel surface normals.
class LocalMap {
 public:
  explicit LocalMap(double voxel_size, int max_points_per_voxel)
      : voxel_size_(voxel_size), cap_(max_points_per_voxel) {
    if (voxel_size <= 0.0 || max_points_per_voxel <= 0) {
      throw std::invalid_argument("LocalMap: voxel size and cap must be > 0");
    }
  }

  void insert(const PointCloud& cloud_world) {
    for (const Vec3& p : cloud_world.points) {
      auto& bucket = voxels_[voxel_key_of(p, voxel_size_)];
      if (static_cast<int>(bucket.points.size()) < cap_) {
        bucket.points.push_back(p);
      }
    }
    ++generation_;  // cached normals go stale wholesale, once per batch
  }

  /// Removes voxels whose anchor point is farther than radius from center.
  void trim(const Vec3& center, double radius) {
    const double r2 = radius * radius;
    for (auto it = voxels_.begin(); it != voxels_.end();) {
      if ((it->second.points.front() - center).squaredNorm() > r2) {
        it = voxels_.erase(it);
      } else {
        ++it;
      }
    }
  }

  bool empty() const { return voxels_.empty(); }

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& [key, bucket] : voxels_) n += bucket.points.size();
    return n;
  }

  /// Nearest stored point within max_dist of query, if any. Scans voxel
  /// shells outward; a shell at Chebyshev distance k only holds points closer
  /// than (k-1) * voxel edge, so the search stops as soon as the best match
  /// beats that bound.
  std::optional<Vec3> nearest(const Vec3& query, double max_dist) const {
    const VoxelKey center = voxel_key_of(query, voxel_size_);
    const int k_max = static_cast<int>(std::ceil(max_dist / voxel_size_)) + 1;
    double best_sq = max_dist * max_dist;
    std::optional<Vec3> best;
    for (int k = 0; k <= k_max; ++k) {
      if (best && k >= 2) {
        const double shell_min = (k - 1) * voxel_size_;
        if (shell_min * shell_min > best_sq) break;
      }
      scan_shell(center, k, query, best_sq, best);
    }
    return best;
  }

  /// Like nearest, but also reports the matched voxel's surface normal when
  /// its occupants are planar enough to define one.
  std::optional<SurfaceMatch> nearest_surface(const Vec3& query, double max_dist) const {
    const auto point = nearest(query, max_dist);
    if (!point) return std::nullopt;
    SurfaceMatch match{*point, std::nullopt};
    const VoxelKey key = voxel_key_of(*point, voxel_size_);
    const auto it = voxels_.find(key);
    if (it != voxels_.end()) match.normal = bucket_normal(key, it->second);
    return match;
  }

 private:
  struct Bucket {
    std::vector<Vec3> points;
    mutable std::uint64_t normal_generation = 0;  // 0 = never computed
    mutable std::optional<Vec3> normal;
  };

  void scan_voxel(const VoxelKey& key, const Vec3& query, double& best_sq,
                  std::optional<Vec3>& best) const {
    const auto it = voxels_.find(key);
    if (it == voxels_.end()) return;
    for (const Vec3& p : it->second.points) {
      const double d2 = (p - query).squaredNorm();
      if (d2 <= best_sq) {
        best_sq = d2;
        best = p;
      }
    }
  }

  void scan_shell(const VoxelKey& c, int k, const Vec3& query, double& best_sq,
                  std::optional<Vec3>& best) const {
    if (k == 0) {
      scan_voxel(c, query, best_sq, best);
      return;
    }
    for (int dx = -k; dx <= k; ++dx) {
      for (int dy = -k; dy <= k; ++dy) {
        for (int dz = -k; dz <= k; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != k) continue;
          scan_voxel(VoxelKey{c.x + dx, c.y + dy, c.z + dz}, query, best_sq, best);
        }
      }
    }
  }

  /// Smallest principal axis of the covariance over the bucket's 3x3x3
  /// voxel neighborhood, provided the patch holds enough points and is
  /// flat: the smallest spread must be well separated from the middle one,
  /// which rules out edges and corners. Cached until the next insert batch.
  const std::optional<Vec3>& bucket_normal(const VoxelKey& key, const Bucket& bucket) const {
    if (bucket.normal_generation == generation_) return bucket.normal;
    bucket.normal_generation = generation_;
    bucket.normal.reset();

    Vec3 mu = Vec3::Zero();
    std::size_t n = 0;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = voxels_.find(VoxelKey{key.x + dx, key.y + dy, key.z + dz});
          if (it == voxels_.end()) continue;
          for (const Vec3& p : it->second.points) {
            mu += p;
            ++n;
          }
        }
      }
    }
    if (n < 5) return bucket.normal;
    mu /= static_cast<double>(n);
    Mat3 cov = Mat3::Zero();
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = voxels_.find(VoxelKey{key.x + dx, key.y + dy, key.z + dz});
          if (it == voxels_.end()) continue;
          for (const Vec3& p : it->second.points) cov += (p - mu) * (p - mu).transpose();
        }
      }
    }
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 lambda = es.eigenvalues();  // ascending
    if (lambda(1) > 1e-12 && lambda(0) <= 0.1 * lambda(1)) {
      bucket.normal = es.eigenvectors().col(0).normalized();
    }
    return bucket.normal;
  }

  double voxel_size_;
  int cap_;
  std::uint64_t generation_ = 1;
  std::unordered_map<VoxelKey, Bucket, VoxelKeyHash> voxels_;
};

/// Result of aligning one scan against the map.
struct Registration {
  RigidPose pose;            // sensor-to-world estimate
  int iterations = 0;
  std::size_t inlier_count = 0;   // correspondences in the final iteration
  double mean_residual = 0.0;     // meters, over final correspondences
  bool degenerate = false;        // solve failed; pose falls back to the guess
};

namespace detail {

/// Closed-form rigid alignment (SVD over the cross-covariance) that moves
/// src onto dst. Fails on rank-deficient correspondence sets.
inline bool solve_rigid(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, Mat3& rotation,
                        Vec3& translation) {
  const std::size_t n = src.size();
  if (n < 3) return false;
  Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= static_cast<double>(n);
  mu_dst /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cov += (src[i] - mu_src) * (dst[i] - mu_dst).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) < 1e-12) return false;  // line- or point-degenerate
  Mat3 r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixV() * flip * svd.matrixU().transpose();
  }
  rotation = r;
  translation = mu_dst - r * mu_src;
  return true;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace detail

/// Aligns one decimated sensor-frame scan to the map starting from guess.
/// The returned pose maps sensor coordinates to world coordinates.
///
/// Each iteration refreshes correspondences, then takes one Gauss-Newton
/// step on the summed residuals: point-to-plane where the matched voxel has
/// a normal, point-to-point otherwise. The rotation increment acts about
/// the current sensor position, which keeps the 6x6 system well scaled.
inline Registration register_scan(const PointCloud& scan_sensor, const LocalMap& map,
                                  const RigidPose& guess, const OdometryParams& params) {
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  Registration reg;
  reg.pose = guess;
  if (scan_sensor.empty() || map.empty()) {
    reg.degenerate = true;
    return reg;
  }

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    reg.iterations = iter + 1;
    const Vec3 anchor = reg.pose.translation;
    Mat6 h = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    std::size_t inliers = 0;
    double residual_sum = 0.0;

    for (const Vec3& p : scan_sensor.points) {
      const Vec3 p_world = reg.pose.apply(p);
      const auto match = map.nearest_surface(p_world, params.max_correspondence_dist);
      if (!match) continue;
      ++inliers;
      const Vec3 arm = p_world - anchor;
      if (match->normal) {
        const Vec3& n = *match->normal;
        const double r = n.dot(p_world - match->point);
        Vec6 j;
        j.head<3>() = arm.cross(n);
        j.tail<3>() = n;
        h += j * j.transpose();
        g += j * r;
        residual_sum += std::abs(r);
      } else {
        const Vec3 e = p_world - match->point;
        Eigen::Matrix<double, 3, 6> jac;
        jac.block<3, 3>(0, 0) = -detail::skew(arm);
        jac.block<3, 3>(0, 3) = Mat3::Identity();
        h += jac.transpose() * jac;
        g += jac.transpose() * e;
        residual_sum += e.norm();
      }
    }
    reg.inlier_count = inliers;
    reg.mean_residual = inliers == 0 ? 0.0 : residual_sum / static_cast<double>(inliers);

    const Eigen::SelfAdjointEigenSolver<Mat6> es(h);
    const double lambda_min = es.eigenvalues()(0);
    const double lambda_max = es.eigenvalues()(5);
    if (inliers < 3 || lambda_min < 1e-8 * std::max(lambda_max, 1e-9)) {
      reg.pose = guess;
      reg.degenerate = true;
      return reg;
    }
    const Vec6 delta = es.eigenvectors() *
                       (es.eigenvalues().cwiseInverse().asDiagonal() *
                        (es.eigenvectors().transpose() * (-g)));

    const Vec3 dtheta = delta.head<3>();
    const Vec3 dt = delta.tail<3>();
    const double angle = dtheta.norm();
    const Mat3 dr = angle < 1e-15
                        ? Mat3::Identity()
                        : Eigen::AngleAxisd(angle, dtheta / angle).toRotationMatrix();
    reg.pose.rotation = dr * reg.pose.rotation;
    // Re-orthonormalize so hundreds of chained increments cannot drift.
    reg.pose.rotation =
        Eigen::Quaterniond(reg.pose.rotation).normalized().toRotationMatrix();
    reg.pose.translation += dt;

    const double update = dt.norm() + (dr - Mat3::Identity()).norm();
    if (update < params.convergence_eps) break;
  }
  return reg;
}

/// Full odometry run over a scan sequence. The first scan anchors the map at
/// the identity; later scans are initialized with a constant-velocity guess.
struct OdometryResult {
  Trajectory estimated;
  std::vector<Registration> registrations;
  int degenerate_frames = 0;
};

inline OdometryResult run_odometry(const std::vector<PointCloud>& scans,
                                   const std::vector<double>& timestamps,
                                   const OdometryParams& params) {
  if (scans.size() != timestamps.size()) {
    throw std::invalid_argument("run_odometry: scans and timestamps length mismatch");
  }
  if (!params.valid()) {
    throw std::invalid_argument("run_odometry: invalid parameters");
  }
  OdometryResult result;
  if (scans.empty()) return result;

  LocalMap map(params.map_voxel_size, params.max_points_per_voxel);
  RigidPose prev = RigidPose::identity();
  RigidPose prev_prev = RigidPose::identity();

  for (std::size_t i = 0; i < scans.size(); ++i) {
    const PointCloud decimated = voxel_downsample(scans[i], params.scan_voxel_size);
    Registration reg;
    if (i == 0) {
      reg.pose = RigidPose::identity();
    } else {
      // Constant-velocity guess: replay the previous relative motion.
      RigidPose guess = prev;
      if (i >= 2) {
        const RigidPose delta = prev_prev.inverse() * prev;
        guess = prev * delta;
      }
      reg = register_scan(decimated, map, guess, params);
    }
    reg.pose.timestamp = timestamps[i];
    if (reg.degenerate) ++result.degenerate_frames;

    PointCloud world = transform_cloud(decimated, reg.pose);
    world.frame = Frame::World;
    map.insert(world);
    map.trim(reg.pose.translation, params.local_map_radius);

    result.estimated.poses.push_back(reg.pose);
    result.registrations.push_back(reg);
    prev_prev = prev;
    prev = reg.pose;
  }
  return result;
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_ODOMETRY_HPP
