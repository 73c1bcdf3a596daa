#include "mirrorbench/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "mirrorbench/rng.hpp"

namespace mb = mirrorbench;

namespace {

mb::Rng make_rng(std::uint64_t stream) { return mb::Rng(mb::mix_seed(42, stream)); }

mb::RigidPose random_pose(mb::Rng& rng) {
  const double yaw = rng.uniform(-M_PI, M_PI);
  const mb::Vec3 axis =
      mb::Vec3(rng.normal01(), rng.normal01(), rng.normal01()).normalized();
  mb::RigidPose pose;
  pose.rotation = (Eigen::AngleAxisd(yaw, mb::Vec3::UnitZ()) *
                   Eigen::AngleAxisd(rng.uniform(-0.3, 0.3), axis))
                      .toRotationMatrix();
  pose.translation = mb::Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-2, 2));
  return pose;
}

}  // namespace

TEST(Angles, DegRadRoundTrip) {
  EXPECT_DOUBLE_EQ(mb::deg_to_rad(180.0), M_PI);
  EXPECT_DOUBLE_EQ(mb::rad_to_deg(M_PI / 2.0), 90.0);
  EXPECT_NEAR(mb::rad_to_deg(mb::deg_to_rad(37.25)), 37.25, 1e-12);
}

TEST(Angles, WrapToPi) {
  EXPECT_DOUBLE_EQ(mb::wrap_to_pi(M_PI), M_PI);          // half-open at -pi
  EXPECT_DOUBLE_EQ(mb::wrap_to_pi(-M_PI), M_PI);
  EXPECT_NEAR(mb::wrap_to_pi(3.0 * M_PI / 2.0), -M_PI / 2.0, 1e-12);
  EXPECT_NEAR(mb::wrap_to_pi(-5.0 * M_PI / 2.0), -M_PI / 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(mb::wrap_to_pi(0.25), 0.25);
}

TEST(RigidPose, FromYawAppliesPlanarRotation) {
  const mb::RigidPose pose = mb::RigidPose::from_yaw(mb::Vec3(1, 2, 3), M_PI / 2.0, 0.5);
  const mb::Vec3 out = pose.apply(mb::Vec3(1, 0, 0));
  EXPECT_NEAR(out.x(), 1.0, 1e-12);
  EXPECT_NEAR(out.y(), 3.0, 1e-12);
  EXPECT_NEAR(out.z(), 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(pose.timestamp, 0.5);
  EXPECT_NEAR(pose.yaw(), M_PI / 2.0, 1e-12);
}

TEST(RigidPose, InverseRoundTrip) {
  auto rng = make_rng(1);
  for (int k = 0; k < 50; ++k) {
    const mb::RigidPose pose = random_pose(rng);
    const mb::Vec3 p(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-5, 5));
    const mb::Vec3 back = pose.inverse().apply(pose.apply(p));
    EXPECT_LT((back - p).norm(), 1e-9);
  }
}

TEST(RigidPose, ComposeMatchesSequentialApply) {
  auto rng = make_rng(2);
  for (int k = 0; k < 20; ++k) {
    const mb::RigidPose a = random_pose(rng);
    const mb::RigidPose b = random_pose(rng);
    const mb::Vec3 p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-9);
  }
}

TEST(RigidPose, YawThrowsWhenHeadingIsVertical) {
  mb::RigidPose pose;
  pose.rotation = Eigen::AngleAxisd(M_PI / 2.0, mb::Vec3::UnitY()).toRotationMatrix();
  EXPECT_THROW(pose.yaw(), std::domain_error);
}

TEST(RigidPose, ValidityRejectsNonRotation) {
  mb::RigidPose pose = mb::RigidPose::from_yaw(mb::Vec3::Zero(), 0.3);
  EXPECT_TRUE(pose.is_valid());
  pose.rotation *= 2.0;
  EXPECT_FALSE(pose.is_valid());
}

TEST(PointCloud, TransformPreservesFrameTagAndRoundTrips) {
  mb::PointCloud cloud(mb::Frame::Sensor);
  cloud.points = {{1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
  const mb::RigidPose pose = mb::RigidPose::from_yaw(mb::Vec3(5, -1, 0.5), 0.7);
  const mb::PointCloud moved = mb::transform_cloud(cloud, pose);
  EXPECT_EQ(moved.frame, mb::Frame::Sensor);
  const mb::PointCloud back = mb::transform_cloud(moved, pose.inverse());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_LT((back.points[i] - cloud.points[i]).norm(), 1e-9);
  }
}

TEST(Voxel, KeyUsesFloorSemantics) {
  EXPECT_EQ(mb::voxel_key_of({0.5, 0.5, 0.5}, 1.0), (mb::VoxelKey{0, 0, 0}));
  EXPECT_EQ(mb::voxel_key_of({1.0, 0.0, 0.0}, 1.0), (mb::VoxelKey{1, 0, 0}));
  EXPECT_EQ(mb::voxel_key_of({-0.0001, 0.0, 0.0}, 1.0), (mb::VoxelKey{-1, 0, 0}));
  EXPECT_EQ(mb::voxel_key_of({0.25, -0.25, 0.0}, 0.1), (mb::VoxelKey{2, -3, 0}));
}

TEST(Voxel, DownsampleMergesCellMatesIntoCentroid) {
  mb::PointCloud cloud(mb::Frame::World);
  cloud.points = {{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}};
  const mb::PointCloud down = mb::voxel_downsample(cloud, 1.0);
  ASSERT_EQ(down.size(), 1u);
  EXPECT_LT((down.points[0] - mb::Vec3(0.15, 0.15, 0.15)).norm(), 1e-12);
  EXPECT_EQ(down.frame, mb::Frame::World);
}

TEST(Voxel, DownsampleIsIdempotent) {
  auto rng = make_rng(3);
  mb::PointCloud cloud(mb::Frame::World);
  for (int i = 0; i < 500; ++i) {
    cloud.points.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-3, 3));
  }
  const mb::PointCloud once = mb::voxel_downsample(cloud, 0.7);
  const mb::PointCloud twice = mb::voxel_downsample(once, 0.7);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_EQ(once.points[i], twice.points[i]);  // bitwise: centroid of one point
  }
}

TEST(Voxel, DownsampleOutputIsSortedAndDeterministic) {
  auto rng = make_rng(4);
  mb::PointCloud cloud(mb::Frame::World);
  for (int i = 0; i < 300; ++i) {
    cloud.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  }
  const mb::PointCloud a = mb::voxel_downsample(cloud, 0.5);
  const mb::PointCloud b = mb::voxel_downsample(cloud, 0.5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    EXPECT_TRUE(mb::voxel_key_of(a.points[i], 0.5) < mb::voxel_key_of(a.points[i + 1], 0.5));
  }
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
}

TEST(Voxel, RejectsNonPositiveSize) {
  mb::PointCloud cloud(mb::Frame::World);
  cloud.points = {{0, 0, 0}};
  EXPECT_THROW(mb::voxel_downsample(cloud, 0.0), std::invalid_argument);
  EXPECT_THROW(mb::voxel_downsample(cloud, -1.0), std::invalid_argument);
}

TEST(Voxel, OccupiedCountCollapsesCellMates) {
  mb::PointCloud cloud(mb::Frame::World);
  cloud.points = {{0.1, 0.1, 0.0}, {0.2, 0.1, 0.0}, {1.5, 0.0, 0.0}};
  EXPECT_EQ(mb::occupied_voxel_count(cloud, 1.0), 2u);
}

TEST(Polyline, LengthAndInterpolation) {
  const mb::Polyline route({{0, 0, 0}, {10, 0, 0}});
  ASSERT_TRUE(route.valid());
  EXPECT_DOUBLE_EQ(route.length(), 10.0);
  EXPECT_LT((route.point_at(3.0) - mb::Vec3(3, 0, 0)).norm(), 1e-12);
  EXPECT_LT((route.point_at(-1.0) - mb::Vec3(0, 0, 0)).norm(), 1e-12);   // clamped
  EXPECT_LT((route.point_at(11.0) - mb::Vec3(10, 0, 0)).norm(), 1e-12);  // clamped
}

TEST(Polyline, TangentFollowsNextSegmentAtVertices) {
  const mb::Polyline route({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}});
  EXPECT_LT((route.tangent_at(0.5) - mb::Vec3(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((route.tangent_at(1.0) - mb::Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_LT((route.tangent_at(1.5) - mb::Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(Polyline, ValidityChecks) {
  EXPECT_FALSE(mb::Polyline({{0, 0, 0}}).valid());
  EXPECT_FALSE(mb::Polyline({{0, 0, 0}, {0, 0, 0}}).valid());
  EXPECT_TRUE(mb::Polyline({{0, 0, 0}, {1, 0, 0}}).valid());
}

TEST(Polyline, DistanceToPolyline) {
  const mb::Polyline route({{0, 0, 0}, {10, 0, 0}});
  EXPECT_NEAR(mb::distance_to_polyline({0, 1, 0}, route), 1.0, 1e-12);
  EXPECT_NEAR(mb::distance_to_polyline({5, -2, 0}, route), 2.0, 1e-12);

  const mb::Polyline stub({{0, 0, 0}, {2, 0, 0}});
  EXPECT_NEAR(mb::distance_to_polyline({3, 1, 0}, stub), std::sqrt(2.0), 1e-12);

  EXPECT_THROW(mb::distance_to_polyline({0, 0, 0}, mb::Polyline({{1, 1, 1}})),
               std::invalid_argument);
}

TEST(Polyline, RouteDistanceXyIgnoresQueryAltitude) {
  const mb::Polyline route({{0, 0, 1.2}, {10, 0, 1.2}});
  EXPECT_NEAR(mb::route_distance_xy(route, 3.0, 2.0), 2.0, 1e-12);
  EXPECT_NEAR(mb::route_distance_xy(route, -1.0, 0.0), 1.0, 1e-12);
}

TEST(Geometry, PointSegmentDistanceDegenerateSegment) {
  EXPECT_NEAR(mb::point_segment_distance({3, 4, 0}, {0, 0, 0}, {0, 0, 0}), 5.0, 1e-12);
}
