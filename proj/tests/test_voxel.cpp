#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "workcell/rng.hpp"
#include "workcell/voxel.hpp"

namespace wc = workcell;
using wc::Vec3;

namespace {

wc::GridSpec default_grid() {
  return {Vec3(-0.55, -1.35, 0.1), Vec3(0.35, 1.0, 1.75), 0.05};
}

// Independent index computation: binary search over explicit voxel edges.
std::optional<std::uint32_t> oracle_index(const Vec3& p, const wc::GridSpec& g) {
  const auto n = g.dims();
  std::array<int, 3> c{};
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> edges(n[axis] + 1);
    for (int i = 0; i <= n[axis]; ++i) edges[i] = g.min_corner[axis] + i * g.voxel_size;
    if (p[axis] < edges.front() || p[axis] >= edges.back()) return std::nullopt;
    const auto it = std::upper_bound(edges.begin(), edges.end(), p[axis]);
    c[axis] = static_cast<int>(it - edges.begin()) - 1;
  }
  return g.linear(c[0], c[1], c[2]);
}

}  // namespace

TEST(GridSpec, DefaultMonitoringRegionDims) {
  const auto g = default_grid();
  const auto n = g.dims();
  EXPECT_EQ(n[0], 18);
  EXPECT_EQ(n[1], 47);
  EXPECT_EQ(n[2], 33);
  EXPECT_EQ(g.voxel_count(), 27918);
}

TEST(GridSpec, RejectsDegenerateSpecs) {
  wc::GridSpec g = default_grid();
  g.voxel_size = 0.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = default_grid();
  g.max_corner = g.min_corner;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(GridSpec, CoordsRoundTrip) {
  const auto g = default_grid();
  wc::Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto idx = static_cast<std::uint32_t>(rng.uniform_index(g.voxel_count()));
    const auto c = g.coords(idx);
    EXPECT_EQ(g.linear(c[0], c[1], c[2]), idx);
    EXPECT_EQ(g.index_of(g.center(idx)).value(), idx);
  }
}

TEST(Voxelize, EmptyCloud) {
  EXPECT_TRUE(wc::voxelize({}, default_grid()).empty());
}

TEST(Voxelize, PointNearMinCornerIsVoxelZero) {
  const auto g = default_grid();
  const Vec3 p = g.min_corner + Vec3(0.01, 0.01, 0.01);
  const auto v = wc::voxelize(std::vector<Vec3>{p}, g);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], g.linear(0, 0, 0));
}

TEST(Voxelize, ThousandPointsInOneVoxelCollapse) {
  const auto g = default_grid();
  wc::Rng rng(2);
  const Vec3 base = g.min_corner + Vec3(0.25, 0.25, 0.25);
  std::vector<Vec3> points;
  for (int i = 0; i < 1000; ++i)
    points.push_back(base + Vec3(rng.uniform(0.001, 0.049), rng.uniform(0.001, 0.049),
                                 rng.uniform(0.001, 0.049)));
  const auto v = wc::voxelize(points, g);
  EXPECT_EQ(v.size(), 1u);
}

TEST(Voxelize, OutsidePointsDiscarded) {
  const auto g = default_grid();
  const std::vector<Vec3> points = {g.min_corner - Vec3(0.01, 0, 0),
                                    g.max_corner + Vec3(0, 0.01, 0),
                                    g.max_corner};  // max corner itself is outside
  EXPECT_TRUE(wc::voxelize(points, g).empty());
}

TEST(Voxelize, MatchesEdgeOracleOnRandomClouds) {
  const auto g = default_grid();
  wc::Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vec3> points;
    for (int i = 0; i < 60; ++i)
      points.emplace_back(rng.uniform(-0.8, 0.6), rng.uniform(-1.6, 1.2),
                          rng.uniform(0.0, 1.9));
    std::set<std::uint32_t> expected;
    for (const auto& p : points)
      if (auto idx = oracle_index(p, g)) expected.insert(*idx);
    const auto got = wc::voxelize(points, g);
    ASSERT_EQ(got.size(), expected.size()) << "trial " << trial;
    EXPECT_TRUE(std::equal(got.begin(), got.end(), expected.begin()));
  }
}

TEST(Segment, RobotVoxelLabeled) {
  const auto g = default_grid();
  const wc::Cuboid link{wc::Pose::translate(0, 0, 1.0), Vec3(0.2, 0.2, 0.2)};
  const auto idx = g.index_of(Vec3(0.01, 0.01, 1.01)).value();
  const auto grid = wc::segment(std::vector<std::uint32_t>{idx}, g, {&link, 1}, std::nullopt);
  EXPECT_EQ(grid.label(idx), wc::VoxelLabel::Robot);
}

TEST(Segment, ToolWinsOverRobot) {
  const auto g = default_grid();
  const wc::Cuboid link{wc::Pose::translate(0, 0, 1.0), Vec3(0.2, 0.2, 0.2)};
  const wc::Cuboid tool{wc::Pose::translate(0, 0, 1.0), Vec3(0.1, 0.1, 0.1)};
  const auto idx = g.index_of(Vec3(0.01, 0.01, 1.01)).value();
  const auto grid =
      wc::segment(std::vector<std::uint32_t>{idx}, g, {&link, 1}, tool);
  EXPECT_EQ(grid.label(idx), wc::VoxelLabel::Tool);
}

TEST(Segment, UnoccupiedStaysEmpty) {
  const auto g = default_grid();
  const auto grid = wc::segment({}, g, {}, std::nullopt);
  for (const auto label : grid.labels) EXPECT_EQ(label, 0);
}

TEST(Segment, MatchesExhaustiveOracleOnRandomScenes) {
  const auto g = default_grid();
  wc::Rng rng(4);
  for (int scene = 0; scene < 1000; ++scene) {
    std::vector<wc::Cuboid> robot;
    const int n_links = 1 + static_cast<int>(rng.uniform_index(3));
    for (int i = 0; i < n_links; ++i) {
      const Vec3 axis(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
      robot.push_back(
          {wc::compose(wc::Pose::translate(rng.uniform(-0.5, 0.3), rng.uniform(-1.2, 0.9),
                                           rng.uniform(0.2, 1.6)),
                       wc::Pose::rotate_axis(axis.norm() > 1e-9 ? axis : Vec3::UnitZ(),
                                             rng.uniform(0, 3.0))),
           Vec3(rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3))});
    }
    std::optional<wc::Cuboid> tool;
    if (rng.bernoulli(0.7))
      tool = wc::Cuboid{wc::Pose::translate(rng.uniform(-0.5, 0.3), rng.uniform(-1.2, 0.9),
                                            rng.uniform(0.2, 1.6)),
                        Vec3(0.08, 0.08, 0.12)};

    std::vector<std::uint32_t> occupied;
    for (int i = 0; i < 200; ++i)
      occupied.push_back(static_cast<std::uint32_t>(rng.uniform_index(g.voxel_count())));
    std::sort(occupied.begin(), occupied.end());
    occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());

    const auto grid = wc::segment(occupied, g, robot, tool);

    // Oracle: independent rotation-matrix containment per occupied voxel.
    for (const auto idx : occupied) {
      const Vec3 c = g.center(idx);
      auto inside = [&c](const wc::Cuboid& box) {
        const Eigen::Matrix3d R = box.pose.rotation.toRotationMatrix();
        const Vec3 local = R.transpose() * (c - box.pose.translation);
        return std::abs(local.x()) <= box.half_extents.x() &&
               std::abs(local.y()) <= box.half_extents.y() &&
               std::abs(local.z()) <= box.half_extents.z();
      };
      wc::VoxelLabel expected = wc::VoxelLabel::Obstacle;
      if (tool && inside(*tool)) {
        expected = wc::VoxelLabel::Tool;
      } else {
        for (const auto& link : robot)
          if (inside(link)) {
            expected = wc::VoxelLabel::Robot;
            break;
          }
      }
      ASSERT_EQ(grid.label(idx), expected) << "scene " << scene << " voxel " << idx;
    }
  }
}

// A voxel whose center lies in any robot/tool cuboid is never labeled obstacle.
TEST(Segment, NeverLabelsRobotSpaceAsObstacle) {
  const auto g = default_grid();
  wc::Rng rng(5);
  for (int scene = 0; scene < 1000; ++scene) {
    const wc::Cuboid link{wc::Pose::translate(rng.uniform(-0.4, 0.2), rng.uniform(-1.0, 0.7),
                                              rng.uniform(0.3, 1.5)),
                          Vec3(0.15, 0.15, 0.25)};
    std::vector<std::uint32_t> occupied;
    for (int i = 0; i < 100; ++i)
      occupied.push_back(static_cast<std::uint32_t>(rng.uniform_index(g.voxel_count())));
    std::sort(occupied.begin(), occupied.end());
    occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
    const auto grid = wc::segment(occupied, g, {&link, 1}, std::nullopt);
    for (const auto idx : occupied)
      if (link.contains(g.center(idx)))
        ASSERT_NE(grid.label(idx), wc::VoxelLabel::Obstacle);
  }
}
