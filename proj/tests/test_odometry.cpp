#include "mirrorbench/odometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "mirrorbench/rng.hpp"

namespace mb = mirrorbench;

namespace {

/// Deterministic, well-conditioned cloud: two walls and a floor patch.
mb::PointCloud structured_cloud() {
  mb::PointCloud cloud(mb::Frame::World);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 5; ++j) {
      cloud.points.emplace_back(0.5 * i, 6.0, 0.4 * j);        // left wall
      cloud.points.emplace_back(0.5 * i, -6.0 + 0.03 * i, 0.4 * j);  // skewed right wall
      cloud.points.emplace_back(0.5 * i, -5.0 + 0.5 * j, 0.0);  // ground patch
    }
  }
  return cloud;
}

mb::LocalMap map_of(const mb::PointCloud& cloud, const mb::OdometryParams& params) {
  mb::LocalMap map(params.map_voxel_size, params.max_points_per_voxel);
  map.insert(cloud);
  return map;
}

}  // namespace

TEST(LocalMap, InsertCapsPointsPerVoxel) {
  mb::LocalMap map(1.0, 3);
  mb::PointCloud cloud(mb::Frame::World);
  for (int i = 0; i < 10; ++i) cloud.points.emplace_back(0.1 * i * 0.05, 0.2, 0.3);
  map.insert(cloud);
  EXPECT_EQ(map.point_count(), 3u);
}

TEST(LocalMap, NearestFindsExactNeighborAcrossVoxelBoundaries) {
  mb::LocalMap map(1.0, 10);
  mb::PointCloud cloud(mb::Frame::World);
  cloud.points = {{0, 0, 0}, {5, 0, 0}};
  map.insert(cloud);
  auto n1 = map.nearest({1.2, 0, 0}, 2.0);
  ASSERT_TRUE(n1.has_value());
  EXPECT_LT((*n1 - mb::Vec3(0, 0, 0)).norm(), 1e-12);
  auto n2 = map.nearest({3.9, 0, 0}, 2.0);
  ASSERT_TRUE(n2.has_value());
  EXPECT_LT((*n2 - mb::Vec3(5, 0, 0)).norm(), 1e-12);
  EXPECT_FALSE(map.nearest({2.5, 0, 0}, 1.0).has_value());
}

TEST(LocalMap, NearestMatchesBruteForceOnRandomClouds) {
  mb::Rng rng(41);
  mb::PointCloud cloud(mb::Frame::World);
  for (int i = 0; i < 400; ++i) {
    cloud.points.emplace_back(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-2, 2));
  }
  mb::LocalMap map(0.7, 50);
  map.insert(cloud);
  for (int k = 0; k < 200; ++k) {
    const mb::Vec3 q(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-3, 3));
    const double max_dist = rng.uniform(0.3, 3.0);
    double best = std::numeric_limits<double>::infinity();
    mb::Vec3 best_p = mb::Vec3::Zero();
    for (const mb::Vec3& p : cloud.points) {
      const double d = (p - q).norm();
      if (d < best) {
        best = d;
        best_p = p;
      }
    }
    const auto got = map.nearest(q, max_dist);
    if (best <= max_dist) {
      ASSERT_TRUE(got.has_value()) << "missed neighbor at distance " << best;
      EXPECT_LT((*got - best_p).norm(), 1e-12);
    } else {
      EXPECT_FALSE(got.has_value());
    }
  }
}

TEST(LocalMap, TrimDropsFarVoxels) {
  mb::LocalMap map(1.0, 10);
  mb::PointCloud cloud(mb::Frame::World);
  cloud.points = {{0, 0, 0}, {100, 0, 0}};
  map.insert(cloud);
  EXPECT_EQ(map.point_count(), 2u);
  map.trim({0, 0, 0}, 10.0);
  EXPECT_EQ(map.point_count(), 1u);
  EXPECT_FALSE(map.nearest({100, 0, 0}, 2.0).has_value());
}

TEST(SolveRigid, RecoversKnownTransform) {
  mb::Rng rng(42);
  std::vector<mb::Vec3> src;
  for (int i = 0; i < 30; ++i) {
    src.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  }
  const mb::RigidPose truth = mb::RigidPose::from_yaw({0.4, -0.2, 0.1}, 0.3);
  std::vector<mb::Vec3> dst;
  for (const auto& p : src) dst.push_back(truth.apply(p));
  mb::Mat3 rotation;
  mb::Vec3 translation;
  ASSERT_TRUE(mb::detail::solve_rigid(src, dst, rotation, translation));
  EXPECT_LT((rotation - truth.rotation).norm(), 1e-9);
  EXPECT_LT((translation - truth.translation).norm(), 1e-9);
}

TEST(SolveRigid, RejectsDegenerateSets) {
  mb::Mat3 rotation;
  mb::Vec3 translation;
  std::vector<mb::Vec3> two = {{0, 0, 0}, {1, 0, 0}};
  EXPECT_FALSE(mb::detail::solve_rigid(two, two, rotation, translation));
  std::vector<mb::Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(0.3 * i, 0, 0);
  EXPECT_FALSE(mb::detail::solve_rigid(line, line, rotation, translation));
}

TEST(RegisterScan, RecoversSmallTranslationOffset) {
  const mb::OdometryParams params;
  const mb::PointCloud world = structured_cloud();
  const mb::LocalMap map = map_of(world, params);
  // Scan taken from a sensor displaced by d: sensor-frame points are world
  // points minus d, and registration should estimate pose translation d.
  const mb::Vec3 d(0.1, 0.05, 0.0);
  mb::PointCloud scan(mb::Frame::Sensor);
  for (const auto& p : world.points) scan.points.push_back(p - d);
  const mb::Registration reg =
      mb::register_scan(scan, map, mb::RigidPose::identity(), params);
  EXPECT_FALSE(reg.degenerate);
  EXPECT_LT((reg.pose.translation - d).norm(), 1e-3);
  EXPECT_LT((reg.pose.rotation - mb::Mat3::Identity()).norm(), 1e-3);
  EXPECT_GT(reg.inlier_count, 100u);
}

TEST(RegisterScan, StaticScanStaysAtIdentity) {
  const mb::OdometryParams params;
  const mb::PointCloud world = structured_cloud();
  const mb::LocalMap map = map_of(world, params);
  mb::PointCloud scan(mb::Frame::Sensor);
  scan.points = world.points;
  const mb::Registration reg =
      mb::register_scan(scan, map, mb::RigidPose::identity(), params);
  EXPECT_FALSE(reg.degenerate);
  EXPECT_LT(reg.pose.translation.norm(), 1e-6);
  EXPECT_LT((reg.pose.rotation - mb::Mat3::Identity()).norm(), 1e-6);
}

TEST(RegisterScan, AllCorrespondencesBeyondGateMeansDegenerate) {
  mb::OdometryParams params;
  const mb::PointCloud world = structured_cloud();
  const mb::LocalMap map = map_of(world, params);
  mb::PointCloud scan(mb::Frame::Sensor);
  for (const auto& p : world.points) scan.points.push_back(p + mb::Vec3(50, 50, 0));
  const mb::RigidPose guess = mb::RigidPose::from_yaw({1, 2, 3}, 0.5);
  const mb::Registration reg = mb::register_scan(scan, map, guess, params);
  EXPECT_TRUE(reg.degenerate);
  EXPECT_LT((reg.pose.translation - guess.translation).norm(), 1e-12);  // falls back
}

TEST(RegisterScan, CorrespondenceGateIsMonotoneInThreshold) {
  const mb::PointCloud world = structured_cloud();
  mb::PointCloud scan(mb::Frame::Sensor);
  for (const auto& p : world.points) scan.points.push_back(p - mb::Vec3(0.3, 0.1, 0.0));
  std::size_t prev_inliers = 0;
  for (double gate : {0.2, 0.25, 0.35}) {
    mb::OdometryParams params;
    params.max_correspondence_dist = gate;
    params.max_iterations = 1;  // single gather, no re-alignment
    const mb::LocalMap map = map_of(world, params);
    const mb::Registration reg =
        mb::register_scan(scan, map, mb::RigidPose::identity(), params);
    EXPECT_GE(reg.inlier_count, prev_inliers);
    prev_inliers = reg.inlier_count;
  }
  EXPECT_GT(prev_inliers, 0u);
}

TEST(RegisterScan, GoodInitializationConvergesNoSlower) {
  const mb::OdometryParams params;
  const mb::PointCloud world = structured_cloud();
  const mb::LocalMap map = map_of(world, params);
  const mb::Vec3 d(0.45, 0.2, 0.0);
  mb::PointCloud scan(mb::Frame::Sensor);
  for (const auto& p : world.points) scan.points.push_back(p - d);
  const mb::Registration cold =
      mb::register_scan(scan, map, mb::RigidPose::identity(), params);
  mb::RigidPose warm_guess = mb::RigidPose::identity();
  warm_guess.translation = d;
  const mb::Registration warm = mb::register_scan(scan, map, warm_guess, params);
  EXPECT_FALSE(cold.degenerate);
  EXPECT_FALSE(warm.degenerate);
  EXPECT_LE(warm.iterations, cold.iterations);
  EXPECT_LT((warm.pose.translation - d).norm(), 1e-3);
}

TEST(RunOdometry, StaticSequenceStaysPut) {
  const mb::OdometryParams params;
  const mb::PointCloud world = structured_cloud();
  std::vector<mb::PointCloud> scans;
  std::vector<double> timestamps;
  for (int i = 0; i < 5; ++i) {
    mb::PointCloud scan(mb::Frame::Sensor);
    scan.points = world.points;
    scans.push_back(scan);
    timestamps.push_back(0.1 * i);
  }
  const mb::OdometryResult result = mb::run_odometry(scans, timestamps, params);
  ASSERT_EQ(result.estimated.size(), 5u);
  EXPECT_EQ(result.degenerate_frames, 0);
  for (const mb::RigidPose& pose : result.estimated.poses) {
    EXPECT_LT(pose.translation.norm(), 1e-6);
    EXPECT_LT((pose.rotation - mb::Mat3::Identity()).norm(), 1e-6);
  }
}

TEST(RunOdometry, TracksConstantVelocityTranslation) {
  const mb::OdometryParams params;
  const mb::PointCloud world = structured_cloud();
  const mb::Vec3 step(0.2, 0.0, 0.0);
  std::vector<mb::PointCloud> scans;
  std::vector<double> timestamps;
  for (int i = 0; i < 8; ++i) {
    mb::PointCloud scan(mb::Frame::Sensor);
    const mb::Vec3 offset = static_cast<double>(i) * step;
    for (const auto& p : world.points) scan.points.push_back(p - offset);
    scans.push_back(scan);
    timestamps.push_back(0.1 * i);
  }
  const mb::OdometryResult result = mb::run_odometry(scans, timestamps, params);
  EXPECT_EQ(result.degenerate_frames, 0);
  for (int i = 0; i < 8; ++i) {
    const mb::Vec3 expect = static_cast<double>(i) * step;
    EXPECT_LT((result.estimated.poses[i].translation - expect).norm(), 5e-3)
        << "frame " << i;
  }
}

TEST(RunOdometry, RejectsMismatchedInputs) {
  std::vector<mb::PointCloud> scans(3, mb::PointCloud(mb::Frame::Sensor));
  std::vector<double> timestamps = {0.0, 0.1};
  EXPECT_THROW(mb::run_odometry(scans, timestamps, mb::OdometryParams{}),
               std::invalid_argument);
  mb::OdometryParams bad;
  bad.max_iterations = 0;
  std::vector<double> ts3 = {0.0, 0.1, 0.2};
  EXPECT_THROW(mb::run_odometry(scans, ts3, bad), std::invalid_argument);
}
