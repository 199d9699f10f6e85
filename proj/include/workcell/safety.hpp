#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "workcell/rng.hpp"
#include "workcell/voxel.hpp"

namespace workcell {

// ---------------------------------------------------------------------------
// Speed modes and zones
// ---------------------------------------------------------------------------

enum class SpeedMode { Normal, Slowdown, Stop };

constexpr double speed_ratio(SpeedMode m) {
  switch (m) {
    case SpeedMode::Normal: return 1.0;
    case SpeedMode::Slowdown: return 0.7;
    case SpeedMode::Stop: return 0.0;
  }
  return 0.0;
}

inline const char* to_string(SpeedMode m) {
  switch (m) {
    case SpeedMode::Normal: return "normal";
    case SpeedMode::Slowdown: return "slowdown";
    case SpeedMode::Stop: return "stop";
  }
  return "stop";
}

enum class ZoneKind { Stop, Slowdown };

/// Axis-aligned safety region. Membership is by voxel center, inclusive.
struct ZoneSpec {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Zero();
  ZoneKind kind = ZoneKind::Stop;
};

struct AxisRange {
  int lo = 0;
  int hi = -1;  // inclusive; empty when hi < lo
  int size() const { return hi >= lo ? hi - lo + 1 : 0; }
  bool contains(int i) const { return i >= lo && i <= hi; }
};

/// Voxel index ranges whose centers fall inside [box_min, box_max].
inline std::array<AxisRange, 3> voxel_ranges_in_box(const GridSpec& grid,
                                                    const Vec3& box_min,
                                                    const Vec3& box_max) {
  const auto n = grid.dims();
  std::array<AxisRange, 3> r{};
  for (int i = 0; i < 3; ++i) {
    const double lo_f = (box_min[i] - grid.min_corner[i]) / grid.voxel_size - 0.5;
    const double hi_f = (box_max[i] - grid.min_corner[i]) / grid.voxel_size - 0.5;
    r[i].lo = std::max(0, static_cast<int>(std::ceil(lo_f - 1e-9)));
    r[i].hi = std::min(n[i] - 1, static_cast<int>(std::floor(hi_f + 1e-9)));
  }
  return r;
}

inline std::int64_t zone_voxel_count(const GridSpec& grid, const ZoneSpec& zone) {
  const auto r = voxel_ranges_in_box(grid, zone.min_corner, zone.max_corner);
  return static_cast<std::int64_t>(r[0].size()) * r[1].size() * r[2].size();
}

/// Fraction of the zone's voxels present in `predicted`. Throws when the zone
/// does not overlap the grid (a misconfigured scenario).
inline double occupancy_ratio(std::span<const std::uint32_t> predicted,
                              const GridSpec& grid, const ZoneSpec& zone) {
  const auto r = voxel_ranges_in_box(grid, zone.min_corner, zone.max_corner);
  const std::int64_t total =
      static_cast<std::int64_t>(r[0].size()) * r[1].size() * r[2].size();
  if (total == 0)
    throw std::invalid_argument("occupancy_ratio: zone does not overlap the grid");
  std::int64_t inside = 0;
  for (const std::uint32_t idx : predicted) {
    const auto c = grid.coords(idx);
    if (r[0].contains(c[0]) && r[1].contains(c[1]) && r[2].contains(c[2])) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(total);
}

/// "Exceeds" is strict: a ratio exactly at the threshold does not trigger.
inline SpeedMode decide_mode(double stop_ratio, double slowdown_ratio,
                             double threshold = 0.001) {
  if (stop_ratio > threshold) return SpeedMode::Stop;
  if (slowdown_ratio > threshold) return SpeedMode::Slowdown;
  return SpeedMode::Normal;
}

struct SafetyDecision {
  double stop_ratio = 0.0;
  double slowdown_ratio = 0.0;
  SpeedMode mode = SpeedMode::Normal;
};

// ---------------------------------------------------------------------------
// Speed-and-separation monitoring
// ---------------------------------------------------------------------------

/// ISO/TS 15066 style protective-distance parameters.
struct SsmParams {
  double v_h = 2.0;     // human speed, m/s
  double t_r = 0.1;     // system reaction time, s
  double t_s = 0.01;    // stopping time, s
  double b = 0.005;     // braking distance, m
  double C = 0.21;      // intrusion distance, m
  double z_r = 0.001;   // robot position uncertainty, m
  double z_s = 0.05;    // sensor position uncertainty, m
  double cycle_dt = 0.1;  // monitoring cycle, s
};

/// S = v_h (t_r + t_s) + v_r t_r + b + C + z_r + z_s
inline double protective_distance(const SsmParams& p, double v_r) {
  return p.v_h * (p.t_r + p.t_s) + v_r * p.t_r + p.b + p.C + p.z_r + p.z_s;
}

struct LinkState {
  Vec3 position = Vec3::Zero();
  double speed = 0.0;           // Cartesian speed of the link reference point
  double kinetic_energy = 0.0;  // operational-space kinetic energy, J
};

/// Dynamic stop rule: spheres of radius protective_distance(params, speed)
/// around each link; any predicted voxel inside any sphere stops the robot.
/// The fixed slowdown zone still applies when no sphere is occupied.
inline SafetyDecision dynamic_zone_decide(std::span<const LinkState> links,
                                          const SsmParams& params,
                                          std::span<const std::uint32_t> predicted,
                                          const GridSpec& grid,
                                          const ZoneSpec& slowdown_zone,
                                          double threshold = 0.001) {
  if (links.empty())
    throw std::invalid_argument("dynamic_zone_decide: at least one link required");

  std::vector<double> radii;
  radii.reserve(links.size());
  for (const auto& l : links) radii.push_back(protective_distance(params, l.speed));

  std::int64_t in_sphere = 0;
  for (const std::uint32_t idx : predicted) {
    const Vec3 c = grid.center(idx);
    for (std::size_t i = 0; i < links.size(); ++i) {
      if ((c - links[i].position).norm() <= radii[i]) {
        ++in_sphere;
        break;
      }
    }
  }

  SafetyDecision d;
  d.slowdown_ratio = occupancy_ratio(predicted, grid, slowdown_zone);
  if (in_sphere > 0) {
    // Ratio over the sphere-union region, for the decision log.
    std::vector<std::uint32_t> region;
    for (std::size_t i = 0; i < links.size(); ++i) {
      const Vec3 lo = links[i].position - Vec3::Constant(radii[i]);
      const Vec3 hi = links[i].position + Vec3::Constant(radii[i]);
      const auto r = voxel_ranges_in_box(grid, lo, hi);
      for (int ix = r[0].lo; ix <= r[0].hi; ++ix)
        for (int iy = r[1].lo; iy <= r[1].hi; ++iy)
          for (int iz = r[2].lo; iz <= r[2].hi; ++iz) {
            const std::uint32_t idx = grid.linear(ix, iy, iz);
            if ((grid.center(idx) - links[i].position).norm() <= radii[i])
              region.push_back(idx);
          }
    }
    std::sort(region.begin(), region.end());
    region.erase(std::unique(region.begin(), region.end()), region.end());
    d.stop_ratio = region.empty()
                       ? 1.0
                       : static_cast<double>(in_sphere) / static_cast<double>(region.size());
    d.mode = SpeedMode::Stop;
  } else {
    d.stop_ratio = 0.0;
    d.mode = decide_mode(0.0, d.slowdown_ratio, threshold);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Kinetic-energy (PFL) verification
// ---------------------------------------------------------------------------

struct EnergyLimitTable {
  struct Entry {
    std::string region;
    double limit_j = 0.0;
  };
  std::vector<Entry> entries;

  static EnergyLimitTable sara_defaults() {
    return {{{"Head (Face)", 0.11},
             {"Hand", 0.49},
             {"Lower Arm", 1.30},
             {"Upper Arm", 1.50},
             {"Torso (Chest)", 1.60}}};
  }
};

struct KineticAssessment {
  std::string arm;
  std::string region;
  double energy_j = 0.0;
  double limit_j = 0.0;
  double ratio = 0.0;
  bool safe = true;  // unsafe iff ratio > 1.0
};

inline std::vector<KineticAssessment> kinetic_report(
    std::span<const std::pair<std::string, double>> arm_energies,
    const EnergyLimitTable& limits) {
  std::vector<KineticAssessment> out;
  for (const auto& [arm, energy] : arm_energies) {
    if (energy < 0.0)
      throw std::invalid_argument("kinetic_report: negative kinetic energy");
    for (const auto& entry : limits.entries) {
      if (!(entry.limit_j > 0.0))
        throw std::invalid_argument("kinetic_report: limits must be positive");
      KineticAssessment a;
      a.arm = arm;
      a.region = entry.region;
      a.energy_j = energy;
      a.limit_j = entry.limit_j;
      a.ratio = energy / entry.limit_j;
      a.safe = !(a.ratio > 1.0);
      out.push_back(std::move(a));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Occupancy predictors
// ---------------------------------------------------------------------------

/// Pluggable stand-in for the learned occupancy model. Implementations return
/// the voxel indices predicted occupied by external obstacles.
class OccupancyPredictor {
 public:
  virtual ~OccupancyPredictor() = default;
  virtual std::vector<std::uint32_t> query(const LabeledVoxelGrid& grid) = 0;
};

/// Exact geometric baseline: everything labeled obstacle.
class BaselinePredictor final : public OccupancyPredictor {
 public:
  std::vector<std::uint32_t> query(const LabeledVoxelGrid& grid) override {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < grid.labels.size(); ++i)
      if (grid.label(i) == VoxelLabel::Obstacle) out.push_back(i);
    return out;
  }
};

/// Wraps a predictor with seeded false-positive / false-negative noise.
/// False positives are drawn only on empty-labeled voxels.
class NoisyPredictor final : public OccupancyPredictor {
 public:
  NoisyPredictor(OccupancyPredictor& base, double fp_rate, double fn_rate,
                 std::uint64_t seed)
      : base_(base), fp_rate_(fp_rate), fn_rate_(fn_rate), rng_(seed) {
    if (fp_rate < 0.0 || fp_rate > 1.0 || fn_rate < 0.0 || fn_rate > 1.0)
      throw std::invalid_argument("NoisyPredictor: rates must lie in [0, 1]");
  }

  std::vector<std::uint32_t> query(const LabeledVoxelGrid& grid) override {
    const auto base = base_.query(grid);
    std::vector<std::uint32_t> out;
    out.reserve(base.size());
    std::size_t bi = 0;
    for (std::uint32_t idx = 0; idx < grid.labels.size(); ++idx) {
      const bool in_base = bi < base.size() && base[bi] == idx;
      if (in_base) {
        ++bi;
        if (fn_rate_ == 0.0 || !rng_.bernoulli(fn_rate_)) out.push_back(idx);
      } else if (grid.label(idx) == VoxelLabel::Empty) {
        if (fp_rate_ > 0.0 && rng_.bernoulli(fp_rate_)) out.push_back(idx);
      }
    }
    return out;
  }

 private:
  OccupancyPredictor& base_;
  double fp_rate_;
  double fn_rate_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Per-tick monitor
// ---------------------------------------------------------------------------

/// Robot geometry and link kinematics for one monitoring tick, world frame.
struct RobotView {
  std::vector<Cuboid> links;
  std::optional<Cuboid> tool;
  std::vector<LinkState> link_states;
};

struct MonitorConfig {
  GridSpec grid;
  ZoneSpec stop_zone;
  ZoneSpec slowdown_zone;
  double trigger_threshold = 0.001;
  bool dynamic_stop = false;
  SsmParams ssm;
  /// Robot/tool/mask cuboids are inflated by this margin before labeling so
  /// sensor noise cannot re-label robot surface returns as obstacles.
  double segmentation_margin = 0.0;
  /// Known fixtures (e.g. the worktable) suppressed from the predicted set.
  std::vector<Cuboid> static_masks;
  /// Null means the exact baseline predictor.
  OccupancyPredictor* predictor = nullptr;
};

/// One monitoring cycle: voxelize -> segment -> predict -> zone decision.
/// Pure function of its inputs (a noisy predictor advances its own stream).
inline SafetyDecision monitor_tick(std::span<const Vec3> points,
                                   const RobotView& robot, MonitorConfig& cfg) {
  const auto occupied = voxelize(points, cfg.grid);

  std::vector<Cuboid> robot_cuboids;
  robot_cuboids.reserve(robot.links.size());
  for (const auto& link : robot.links)
    robot_cuboids.push_back(link.inflated(cfg.segmentation_margin));
  std::optional<Cuboid> tool;
  if (robot.tool) tool = robot.tool->inflated(cfg.segmentation_margin);

  const auto grid = segment(occupied, cfg.grid, robot_cuboids, tool);

  BaselinePredictor baseline;
  OccupancyPredictor& predictor = cfg.predictor ? *cfg.predictor : baseline;
  auto predicted = predictor.query(grid);

  if (!cfg.static_masks.empty()) {
    std::vector<std::uint32_t> kept;
    kept.reserve(predicted.size());
    for (const std::uint32_t idx : predicted) {
      const Vec3 c = cfg.grid.center(idx);
      bool masked = false;
      for (const auto& m : cfg.static_masks) {
        if (m.inflated(cfg.segmentation_margin).contains(c)) {
          masked = true;
          break;
        }
      }
      if (!masked) kept.push_back(idx);
    }
    predicted = std::move(kept);
  }

  if (cfg.dynamic_stop) {
    return dynamic_zone_decide(robot.link_states, cfg.ssm, predicted, cfg.grid,
                               cfg.slowdown_zone, cfg.trigger_threshold);
  }
  SafetyDecision d;
  d.stop_ratio = occupancy_ratio(predicted, cfg.grid, cfg.stop_zone);
  d.slowdown_ratio = occupancy_ratio(predicted, cfg.grid, cfg.slowdown_zone);
  d.mode = decide_mode(d.stop_ratio, d.slowdown_ratio, cfg.trigger_threshold);
  return d;
}

}  // namespace workcell
