#include <gtest/gtest.h>

#include <numeric>

#include "workcell/rng.hpp"
#include "workcell/safety.hpp"

namespace wc = workcell;
using wc::Vec3;

namespace {

wc::GridSpec default_grid() {
  return {Vec3(-0.55, -1.35, 0.1), Vec3(0.35, 1.0, 1.75), 0.05};
}

wc::ZoneSpec default_stop_zone() {
  return {Vec3(-0.55, -1.0, 0.4), Vec3(0.35, 0.65, 1.15), wc::ZoneKind::Stop};
}

wc::ZoneSpec default_slowdown_zone() {
  return {Vec3(-0.55, -1.35, 0.1), Vec3(0.35, 1.0, 1.75), wc::ZoneKind::Slowdown};
}

// n distinct voxels inside the stop zone.
std::vector<std::uint32_t> stop_zone_voxels(int n) {
  const auto g = default_grid();
  const auto r = wc::voxel_ranges_in_box(g, default_stop_zone().min_corner,
                                         default_stop_zone().max_corner);
  std::vector<std::uint32_t> out;
  for (int ix = r[0].lo; ix <= r[0].hi && static_cast<int>(out.size()) < n; ++ix)
    for (int iy = r[1].lo; iy <= r[1].hi && static_cast<int>(out.size()) < n; ++iy)
      out.push_back(g.linear(ix, iy, r[2].lo));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Zones, DefaultStopZoneVoxelCount) {
  EXPECT_EQ(wc::zone_voxel_count(default_grid(), default_stop_zone()), 8910);
}

TEST(Zones, SlowdownZoneCoversGrid) {
  EXPECT_EQ(wc::zone_voxel_count(default_grid(), default_slowdown_zone()), 27918);
}

TEST(OccupancyRatio, EmptyPredictionIsZero) {
  EXPECT_EQ(wc::occupancy_ratio({}, default_grid(), default_stop_zone()), 0.0);
}

TEST(OccupancyRatio, NineVoxelsTriggerEightDoNot) {
  const auto g = default_grid();
  const auto nine = stop_zone_voxels(9);
  const auto eight = stop_zone_voxels(8);
  const double r9 = wc::occupancy_ratio(nine, g, default_stop_zone());
  const double r8 = wc::occupancy_ratio(eight, g, default_stop_zone());
  EXPECT_NEAR(r9, 9.0 / 8910.0, 1e-15);
  EXPECT_NEAR(r8, 8.0 / 8910.0, 1e-15);
  EXPECT_GT(r9, 0.001);
  EXPECT_LE(r8, 0.001);
}

TEST(OccupancyRatio, FullZoneIsOne) {
  const auto g = default_grid();
  const auto zone = default_stop_zone();
  const auto r = wc::voxel_ranges_in_box(g, zone.min_corner, zone.max_corner);
  std::vector<std::uint32_t> all;
  for (int ix = r[0].lo; ix <= r[0].hi; ++ix)
    for (int iy = r[1].lo; iy <= r[1].hi; ++iy)
      for (int iz = r[2].lo; iz <= r[2].hi; ++iz) all.push_back(g.linear(ix, iy, iz));
  std::sort(all.begin(), all.end());
  EXPECT_EQ(wc::occupancy_ratio(all, g, zone), 1.0);
}

TEST(OccupancyRatio, DisjointZoneThrows) {
  wc::ZoneSpec far{Vec3(10, 10, 10), Vec3(11, 11, 11), wc::ZoneKind::Stop};
  EXPECT_THROW(wc::occupancy_ratio({}, default_grid(), far), std::invalid_argument);
}

TEST(OccupancyRatio, MonotoneUnderAddedVoxels) {
  const auto g = default_grid();
  wc::Rng rng(6);
  std::vector<std::uint32_t> pred;
  double last_stop = 0.0, last_slow = 0.0;
  for (int step = 0; step < 200; ++step) {
    pred.push_back(static_cast<std::uint32_t>(rng.uniform_index(g.voxel_count())));
    std::sort(pred.begin(), pred.end());
    pred.erase(std::unique(pred.begin(), pred.end()), pred.end());
    const double stop = wc::occupancy_ratio(pred, g, default_stop_zone());
    const double slow = wc::occupancy_ratio(pred, g, default_slowdown_zone());
    EXPECT_GE(stop, last_stop);
    EXPECT_GE(slow, last_slow);
    last_stop = stop;
    last_slow = slow;
  }
}

TEST(DecideMode, SpecCases) {
  EXPECT_EQ(wc::decide_mode(0.0, 0.0), wc::SpeedMode::Normal);
  EXPECT_EQ(wc::decide_mode(0.0, 0.002), wc::SpeedMode::Slowdown);
  EXPECT_EQ(wc::decide_mode(0.002, 0.002), wc::SpeedMode::Stop);
  // Boundary equality does not trigger.
  EXPECT_EQ(wc::decide_mode(0.001, 0.001), wc::SpeedMode::Normal);
}

TEST(DecideMode, MonotoneInRatios) {
  wc::Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double s1 = rng.uniform(), s2 = rng.uniform();
    const double d1 = rng.uniform(), d2 = rng.uniform();
    const double lo_s = std::min(s1, s2), hi_s = std::max(s1, s2);
    const double lo_d = std::min(d1, d2), hi_d = std::max(d1, d2);
    EXPECT_GE(wc::speed_ratio(wc::decide_mode(lo_s, lo_d)),
              wc::speed_ratio(wc::decide_mode(hi_s, hi_d)));
  }
}

TEST(SpeedRatio, ModeValues) {
  EXPECT_EQ(wc::speed_ratio(wc::SpeedMode::Normal), 1.0);
  EXPECT_EQ(wc::speed_ratio(wc::SpeedMode::Slowdown), 0.7);
  EXPECT_EQ(wc::speed_ratio(wc::SpeedMode::Stop), 0.0);
}

TEST(ProtectiveDistance, TableDefaultsAtRest) {
  const wc::SsmParams p;
  EXPECT_NEAR(wc::protective_distance(p, 0.0), 0.486, 1e-12);
}

TEST(ProtectiveDistance, RobotSpeedTerm) {
  const wc::SsmParams p;
  EXPECT_NEAR(wc::protective_distance(p, 1.0), 0.586, 1e-12);
}

TEST(ProtectiveDistance, AllZeroParams) {
  const wc::SsmParams p{0, 0, 0, 0, 0, 0, 0, 0.1};
  EXPECT_EQ(wc::protective_distance(p, 0.0), 0.0);
}

TEST(ProtectiveDistance, AffineInRobotSpeedWithSlopeTr) {
  const wc::SsmParams p;
  wc::Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    const double v = rng.uniform(0.0, 3.0);
    const double h = 1e-6;
    const double slope =
        (wc::protective_distance(p, v + h) - wc::protective_distance(p, v - h)) / (2 * h);
    EXPECT_NEAR(slope, p.t_r, 1e-12);
  }
}

TEST(DynamicZone, NoPredictionIsNormal) {
  const wc::LinkState link{Vec3(0, 0, 1.0), 0.0, 0.0};
  const auto d = wc::dynamic_zone_decide({&link, 1}, {}, {}, default_grid(),
                                         default_slowdown_zone());
  EXPECT_EQ(d.mode, wc::SpeedMode::Normal);
}

TEST(DynamicZone, StationaryLinkSphereBoundary) {
  const auto g = default_grid();
  const wc::LinkState link{Vec3(0.0, 0.0, 1.0), 0.0, 0.0};

  // Obstacle voxel ~0.40 m from the link -> inside the 0.486 m sphere.
  const auto near_idx = g.index_of(Vec3(0.0, 0.40, 1.0)).value();
  const Vec3 near_center = g.center(near_idx);
  ASSERT_LT((near_center - link.position).norm(), 0.486);
  std::vector<std::uint32_t> pred{near_idx};
  auto d = wc::dynamic_zone_decide({&link, 1}, {}, pred, g, default_slowdown_zone());
  EXPECT_EQ(d.mode, wc::SpeedMode::Stop);

  // Same construction at ~0.60 m -> outside the sphere, no stop.
  const auto far_idx = g.index_of(Vec3(0.0, 0.625, 1.0)).value();
  ASSERT_GT((g.center(far_idx) - link.position).norm(), 0.486);
  pred = {far_idx};
  d = wc::dynamic_zone_decide({&link, 1}, {}, pred, g, default_slowdown_zone());
  EXPECT_NE(d.mode, wc::SpeedMode::Stop);
}

TEST(DynamicZone, ZeroSpeedSingleLinkReducesToFixedSphere) {
  const auto g = default_grid();
  const wc::SsmParams params;
  const wc::LinkState link{Vec3(-0.1, -0.2, 0.9), 0.0, 0.0};
  const double radius = wc::protective_distance(params, 0.0);
  wc::Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const auto idx = static_cast<std::uint32_t>(rng.uniform_index(g.voxel_count()));
    const std::vector<std::uint32_t> pred{idx};
    const auto d =
        wc::dynamic_zone_decide({&link, 1}, params, pred, g, default_slowdown_zone());
    const bool inside = (g.center(idx) - link.position).norm() <= radius;
    EXPECT_EQ(d.mode == wc::SpeedMode::Stop, inside) << "voxel " << idx;
  }
}

TEST(DynamicZone, RequiresAtLeastOneLink) {
  EXPECT_THROW(
      wc::dynamic_zone_decide({}, {}, {}, default_grid(), default_slowdown_zone()),
      std::invalid_argument);
}

TEST(KineticReport, ReproducesSaraTable) {
  const std::vector<std::pair<std::string, double>> arms = {{"right", 0.295},
                                                            {"left", 0.167}};
  const auto report = wc::kinetic_report(arms, wc::EnergyLimitTable::sara_defaults());
  ASSERT_EQ(report.size(), 10u);

  struct Expected {
    const char* arm;
    const char* region;
    double ratio;
    bool safe;
  };
  const Expected table[] = {
      {"right", "Head (Face)", 2.68, false}, {"right", "Hand", 0.60, true},
      {"right", "Lower Arm", 0.23, true},    {"right", "Upper Arm", 0.20, true},
      {"right", "Torso (Chest)", 0.18, true}, {"left", "Head (Face)", 1.52, false},
      {"left", "Hand", 0.34, true},          {"left", "Lower Arm", 0.13, true},
      {"left", "Upper Arm", 0.11, true},     {"left", "Torso (Chest)", 0.10, true},
  };
  for (const auto& e : table) {
    bool found = false;
    for (const auto& a : report) {
      if (a.arm == e.arm && a.region == e.region) {
        EXPECT_NEAR(a.ratio, e.ratio, 0.005) << e.arm << "/" << e.region;
        EXPECT_EQ(a.safe, e.safe) << e.arm << "/" << e.region;
        found = true;
      }
    }
    EXPECT_TRUE(found) << e.arm << "/" << e.region;
  }
}

TEST(KineticReport, ZeroEnergyAllSafe) {
  const std::vector<std::pair<std::string, double>> arms = {{"right", 0.0}};
  for (const auto& a : wc::kinetic_report(arms, wc::EnergyLimitTable::sara_defaults())) {
    EXPECT_EQ(a.ratio, 0.0);
    EXPECT_TRUE(a.safe);
  }
}

TEST(KineticReport, ExactLimitIsSafe) {
  const std::vector<std::pair<std::string, double>> arms = {{"right", 0.49}};
  const auto report = wc::kinetic_report(arms, wc::EnergyLimitTable::sara_defaults());
  for (const auto& a : report)
    if (a.region == "Hand") {
      EXPECT_NEAR(a.ratio, 1.0, 1e-12);
      EXPECT_TRUE(a.safe);
    }
}

TEST(KineticReport, NegativeEnergyThrows) {
  const std::vector<std::pair<std::string, double>> arms = {{"right", -0.1}};
  EXPECT_THROW(wc::kinetic_report(arms, wc::EnergyLimitTable::sara_defaults()),
               std::invalid_argument);
}

TEST(Predictors, BaselineOnEmptyGrid) {
  wc::LabeledVoxelGrid grid(default_grid());
  wc::BaselinePredictor p;
  EXPECT_TRUE(p.query(grid).empty());
}

TEST(Predictors, BaselineFiltersObstaclesOnly) {
  wc::LabeledVoxelGrid grid(default_grid());
  std::vector<std::uint32_t> obstacles;
  for (std::uint32_t i = 0; i < 5; ++i) {
    grid.labels[100 + i] = static_cast<std::uint8_t>(wc::VoxelLabel::Obstacle);
    obstacles.push_back(100 + i);
  }
  for (std::uint32_t i = 0; i < 10; ++i)
    grid.labels[500 + i] = static_cast<std::uint8_t>(wc::VoxelLabel::Robot);
  wc::BaselinePredictor p;
  EXPECT_EQ(p.query(grid), obstacles);
}

TEST(Predictors, BaselineMatchesSetFilterOnRandomGrids) {
  wc::Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    wc::LabeledVoxelGrid grid(default_grid());
    std::vector<std::uint32_t> expected;
    for (int i = 0; i < 500; ++i) {
      const auto idx = static_cast<std::uint32_t>(rng.uniform_index(grid.labels.size()));
      grid.labels[idx] = static_cast<std::uint8_t>(rng.uniform_index(4));
    }
    for (std::uint32_t i = 0; i < grid.labels.size(); ++i)
      if (grid.label(i) == wc::VoxelLabel::Obstacle) expected.push_back(i);
    wc::BaselinePredictor p;
    EXPECT_EQ(p.query(grid), expected);
  }
}

TEST(Predictors, NoisyWithZeroRatesIsIdentity) {
  wc::LabeledVoxelGrid grid(default_grid());
  for (std::uint32_t i = 0; i < 20; ++i)
    grid.labels[i * 7] = static_cast<std::uint8_t>(wc::VoxelLabel::Obstacle);
  wc::BaselinePredictor base;
  wc::NoisyPredictor noisy(base, 0.0, 0.0, 123);
  EXPECT_EQ(noisy.query(grid), base.query(grid));
}

TEST(Predictors, FullFalseNegativeRateEmptiesOutput) {
  wc::LabeledVoxelGrid grid(default_grid());
  for (std::uint32_t i = 0; i < 100; ++i)
    grid.labels[i] = static_cast<std::uint8_t>(wc::VoxelLabel::Obstacle);
  wc::BaselinePredictor base;
  wc::NoisyPredictor noisy(base, 0.0, 1.0, 123);
  EXPECT_TRUE(noisy.query(grid).empty());
}

TEST(Predictors, FalsePositiveBinomialExpectation) {
  // fp = 0.01 on the empty 27,918-voxel grid: mean count over 1000 seeds
  // must sit within 5% of 279.18.
  wc::LabeledVoxelGrid grid(default_grid());
  wc::BaselinePredictor base;
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    wc::NoisyPredictor noisy(base, 0.01, 0.0, seed);
    total += static_cast<double>(noisy.query(grid).size());
  }
  const double mean = total / 1000.0;
  const double expected = 27918 * 0.01;
  EXPECT_NEAR(mean, expected, 0.05 * expected);
}

TEST(Predictors, DeterministicPerSeed) {
  wc::LabeledVoxelGrid grid(default_grid());
  for (std::uint32_t i = 0; i < 200; ++i)
    grid.labels[i * 3] = static_cast<std::uint8_t>(wc::VoxelLabel::Obstacle);
  wc::BaselinePredictor base;
  wc::NoisyPredictor a(base, 0.005, 0.1, 42);
  wc::NoisyPredictor b(base, 0.005, 0.1, 42);
  EXPECT_EQ(a.query(grid), b.query(grid));
}

TEST(MonitorTick, RobotOnlySceneIsNormal) {
  // Returns on the robot body are labeled robot and excluded from ratios.
  wc::MonitorConfig cfg;
  cfg.grid = default_grid();
  cfg.stop_zone = default_stop_zone();
  cfg.slowdown_zone = default_slowdown_zone();
  const wc::Cuboid link{wc::Pose::translate(-0.1, -0.2, 0.8), Vec3(0.2, 0.2, 0.3)};
  wc::RobotView view;
  view.links = {link};
  view.link_states = {{link.center(), 0.0, 0.0}};

  std::vector<Vec3> points;
  wc::Rng rng(11);
  for (int i = 0; i < 500; ++i)
    points.push_back(link.center() + Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                          rng.uniform(-0.3, 0.3)));
  const auto d = wc::monitor_tick(points, view, cfg);
  EXPECT_EQ(d.mode, wc::SpeedMode::Normal);
  EXPECT_EQ(d.stop_ratio, 0.0);
  EXPECT_EQ(d.slowdown_ratio, 0.0);
}

TEST(MonitorTick, StaticMaskSuppressesFixture) {
  wc::MonitorConfig cfg;
  cfg.grid = default_grid();
  cfg.stop_zone = default_stop_zone();
  cfg.slowdown_zone = default_slowdown_zone();
  const wc::Cuboid table{wc::Pose::translate(-0.1, -0.175, 0.7), Vec3(0.45, 0.825, 0.05)};
  wc::RobotView view;
  view.link_states = {{Vec3(0, 0, 1), 0.0, 0.0}};

  std::vector<Vec3> points;
  for (int i = 0; i < 40; ++i)
    points.emplace_back(-0.4 + i * 0.02, -0.5, 0.74);  // table surface returns

  auto no_mask = cfg;
  EXPECT_EQ(wc::monitor_tick(points, view, no_mask).mode, wc::SpeedMode::Stop);

  cfg.static_masks = {table};
  EXPECT_EQ(wc::monitor_tick(points, view, cfg).mode, wc::SpeedMode::Normal);
}

TEST(MonitorTick, WorkerCuboidDrivesModeSequence) {
  // Scripted worker volume sweeping in: slowdown ring first, stop zone after.
  wc::MonitorConfig cfg;
  cfg.grid = default_grid();
  cfg.stop_zone = default_stop_zone();
  cfg.slowdown_zone = default_slowdown_zone();
  wc::RobotView view;
  view.link_states = {{Vec3(0, 0, 1), 0.0, 0.0}};

  auto worker_points = [&](double center_y) {
    std::vector<Vec3> pts;
    const wc::Cuboid worker{wc::Pose::translate(0.0, center_y, 0.9), Vec3(0.2, 0.2, 0.5)};
    const auto r = wc::voxel_ranges_in_box(cfg.grid, worker.center() - worker.half_extents,
                                           worker.center() + worker.half_extents);
    for (int ix = r[0].lo; ix <= r[0].hi; ++ix)
      for (int iy = r[1].lo; iy <= r[1].hi; ++iy)
        for (int iz = r[2].lo; iz <= r[2].hi; ++iz)
          pts.push_back(cfg.grid.center(cfg.grid.linear(ix, iy, iz)));
    return pts;
  };

  EXPECT_EQ(wc::monitor_tick(worker_points(2.0), view, cfg).mode, wc::SpeedMode::Normal);
  EXPECT_EQ(wc::monitor_tick(worker_points(0.85), view, cfg).mode, wc::SpeedMode::Slowdown);
  EXPECT_EQ(wc::monitor_tick(worker_points(0.4), view, cfg).mode, wc::SpeedMode::Stop);
  // Worker leaves -> Normal again on the next tick, no hysteresis.
  EXPECT_EQ(wc::monitor_tick(worker_points(2.0), view, cfg).mode, wc::SpeedMode::Normal);
}

TEST(MonitorTick, DeterministicForIdenticalInputs) {
  wc::MonitorConfig cfg;
  cfg.grid = default_grid();
  cfg.stop_zone = default_stop_zone();
  cfg.slowdown_zone = default_slowdown_zone();
  wc::RobotView view;
  view.link_states = {{Vec3(0, 0, 1), 0.0, 0.0}};
  std::vector<Vec3> points;
  wc::Rng rng(12);
  for (int i = 0; i < 300; ++i)
    points.emplace_back(rng.uniform(-0.5, 0.3), rng.uniform(-1.3, 0.9),
                        rng.uniform(0.2, 1.7));

  wc::BaselinePredictor base;
  wc::NoisyPredictor noisy_a(base, 0.002, 0.05, 99);
  wc::NoisyPredictor noisy_b(base, 0.002, 0.05, 99);
  auto cfg_a = cfg;
  cfg_a.predictor = &noisy_a;
  auto cfg_b = cfg;
  cfg_b.predictor = &noisy_b;
  const auto da = wc::monitor_tick(points, view, cfg_a);
  const auto db = wc::monitor_tick(points, view, cfg_b);
  EXPECT_EQ(da.stop_ratio, db.stop_ratio);
  EXPECT_EQ(da.slowdown_ratio, db.slowdown_ratio);
  EXPECT_EQ(da.mode, db.mode);
}
