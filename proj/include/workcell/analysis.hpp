#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "workcell/logs.hpp"
#include "workcell/safety.hpp"
#include "workcell/scheduler.hpp"

namespace workcell {

// ---------------------------------------------------------------------------
// Throughput projection
// ---------------------------------------------------------------------------

enum class TimingKind { Human, RobotAlone, RobotBetweenHumans };

/// Unit-completion timing model. Human work follows a repeating
/// work/break schedule with completions only during work time.
struct TimingModel {
  TimingKind kind = TimingKind::RobotAlone;
  double takt_s = 159.0;
  double work_s = 3000.0;   // 50 min
  double break_s = 600.0;   // 10 min

  static TimingModel human() { return {TimingKind::Human, 141.0, 3000.0, 600.0}; }
  static TimingModel robot_alone() { return {TimingKind::RobotAlone, 159.0, 0.0, 0.0}; }
  static TimingModel effective(double takt_s = 18600.0 / 108.0) {
    return {TimingKind::RobotBetweenHumans, takt_s, 0.0, 0.0};
  }

  bool has_breaks() const { return kind == TimingKind::Human && break_s > 0.0; }

  /// Wall-clock time of the k-th completion (k >= 1).
  double completion_wall_s(int k) const {
    const double u = k * takt_s;
    if (!has_breaks()) return u;
    // A unit finishing exactly at a block boundary completes before the break.
    const double blocks_before = std::ceil(u / work_s - 1e-9) - 1.0;
    return u + break_s * std::max(0.0, blocks_before);
  }
};

/// Cumulative completions sampled each second: series[s] counts units whose
/// completion time is <= s. Size is floor(horizon) + 1.
inline std::vector<int> project_shift(const TimingModel& model, double horizon_s) {
  if (!(horizon_s > 0.0)) throw std::invalid_argument("project_shift: horizon must be > 0");
  if (!(model.takt_s > 0.0)) throw std::invalid_argument("project_shift: takt must be > 0");
  const int n = static_cast<int>(std::floor(horizon_s));
  std::vector<int> series(n + 1, 0);
  for (int k = 1;; ++k) {
    const double wall = model.completion_wall_s(k);
    if (wall > horizon_s + 1e-9) break;
    const int sec = static_cast<int>(std::ceil(wall - 1e-9));
    if (sec <= n) ++series[sec];
  }
  for (int s = 1; s <= n; ++s) series[s] += series[s - 1];
  return series;
}

/// Earliest second at which `a` is at least `b` and remains so for
/// `hold_s` seconds (or to the end of the series). hold_s >= the series
/// length demands dominance through the whole horizon.
inline std::optional<double> crossover(std::span<const int> a, std::span<const int> b,
                                       double hold_s = 1800.0) {
  if (a.size() != b.size())
    throw std::invalid_argument("crossover: series must share a horizon");
  const std::int64_t n = static_cast<std::int64_t>(a.size());
  const std::int64_t hold = std::max<std::int64_t>(0, static_cast<std::int64_t>(hold_s));
  std::int64_t run = 0;
  std::optional<double> result;
  for (std::int64_t t = n - 1; t >= 0; --t) {
    run = a[t] >= b[t] ? run + 1 : 0;
    const std::int64_t needed = std::min(hold + 1, n - t);
    if (run >= needed) result = static_cast<double>(t);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cycle statistics
// ---------------------------------------------------------------------------

/// Total wall time divided by unit count, inclusive of pauses.
inline double effective_takt(std::span<const CycleRecord> records) {
  if (records.empty()) throw std::invalid_argument("effective_takt: no cycles");
  double total = 0.0;
  for (const auto& r : records) total += r.wall_s;
  return total / static_cast<double>(records.size());
}

/// Nearest-rank percentiles of cycle wall times.
inline std::vector<double> cycle_percentiles(std::span<const CycleRecord> records,
                                             std::span<const double> percentiles) {
  if (records.empty()) throw std::invalid_argument("cycle_percentiles: no cycles");
  std::vector<double> walls;
  walls.reserve(records.size());
  for (const auto& r : records) walls.push_back(r.wall_s);
  std::sort(walls.begin(), walls.end());
  std::vector<double> out;
  for (const double p : percentiles) {
    if (!(p > 0.0) || !(p < 100.0))
      throw std::invalid_argument("cycle_percentiles: p must lie in (0, 100)");
    const auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(walls.size()) - 1e-9));
    out.push_back(walls[std::max<std::size_t>(1, rank) - 1]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Offline safety-strategy replay
// ---------------------------------------------------------------------------

enum class ReplayStrategy { None, FixedMargin, FixedZones, DynamicSpheres };

inline const char* to_string(ReplayStrategy s) {
  switch (s) {
    case ReplayStrategy::None: return "none";
    case ReplayStrategy::FixedMargin: return "fixed_margin";
    case ReplayStrategy::FixedZones: return "fixed_zones";
    case ReplayStrategy::DynamicSpheres: return "dynamic_spheres";
  }
  return "none";
}

inline std::optional<ReplayStrategy> replay_strategy_from_string(const std::string& s) {
  if (s == "none") return ReplayStrategy::None;
  if (s == "fixed_margin") return ReplayStrategy::FixedMargin;
  if (s == "fixed_zones") return ReplayStrategy::FixedZones;
  if (s == "dynamic_spheres") return ReplayStrategy::DynamicSpheres;
  return std::nullopt;
}

struct ProductivityRow {
  ReplayStrategy strategy = ReplayStrategy::None;
  double added_s = 0.0;
  double percent_increase = 0.0;
};

struct ProductivityReport {
  double baseline_s = 0.0;  // recorded duration (the no-intervention run)
  std::vector<ProductivityRow> rows;
};

struct ReplayConfig {
  double margin_m = 0.2;  // fixed stop margin around the table
};

/// True when the margin box around the table geometrically contains the
/// slowdown trigger region (clipped to the grid); under containment the
/// margin baseline can never undercut the fixed zones.
inline bool margin_contains_slowdown(const MotionMeta& meta, double margin_m) {
  const Cuboid margin_box = meta.table.inflated(margin_m);
  const auto r = voxel_ranges_in_box(meta.grid, meta.slowdown_zone.min_corner,
                                     meta.slowdown_zone.max_corner);
  for (int ix = r[0].lo; ix <= r[0].hi; ++ix)
    for (int iy = r[1].lo; iy <= r[1].hi; ++iy)
      for (int iz = r[2].lo; iz <= r[2].hi; ++iz)
        if (!margin_box.contains(meta.grid.center(meta.grid.linear(ix, iy, iz))))
          return false;
  return true;
}

/// Replays recorded scans and robot motion under alternative safety
/// strategies and integrates the production-time dilation each would have
/// caused: a stopped tick adds dt, a slowdown tick adds dt*(1/0.7 - 1).
inline ProductivityReport replay_compare(std::span<const ScanRecord> scans,
                                         const MotionLog& motion,
                                         std::span<const ReplayStrategy> strategies,
                                         const ReplayConfig& cfg = {}) {
  if (scans.size() != motion.records.size())
    throw std::runtime_error(
        "replay_compare: log lengths differ (" + std::to_string(scans.size()) + " vs " +
        std::to_string(motion.records.size()) + ")");
  for (std::size_t i = 0; i < scans.size(); ++i)
    if (scans[i].tick != motion.records[i].tick)
      throw std::runtime_error("replay_compare: tick mismatch at record " +
                               std::to_string(i) + " (tick " +
                               std::to_string(scans[i].tick) + ")");

  const MotionMeta& meta = motion.meta;
  const double dt = meta.dt;
  const Cuboid margin_box = meta.table.inflated(cfg.margin_m);
  const double slowdown_penalty = 1.0 / speed_ratio(SpeedMode::Slowdown) - 1.0;

  std::vector<double> added(strategies.size(), 0.0);
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const auto& rec = motion.records[i];
    const auto occupied = voxelize(scans[i].points, meta.grid);

    std::vector<Cuboid> robot;
    robot.reserve(rec.links.size());
    for (const auto& l : rec.links) robot.push_back(l.cuboid.inflated(meta.segmentation_margin));
    std::optional<Cuboid> tool;
    if (rec.tool) tool = rec.tool->inflated(meta.segmentation_margin);

    const auto grid = segment(occupied, meta.grid, robot, tool);
    BaselinePredictor baseline;
    auto predicted = baseline.query(grid);
    if (!meta.static_masks.empty()) {
      std::vector<std::uint32_t> kept;
      for (const std::uint32_t idx : predicted) {
        const Vec3 c = meta.grid.center(idx);
        bool masked = false;
        for (const auto& m : meta.static_masks)
          if (m.inflated(meta.segmentation_margin).contains(c)) {
            masked = true;
            break;
          }
        if (!masked) kept.push_back(idx);
      }
      predicted = std::move(kept);
    }

    std::vector<LinkState> links;
    for (const auto& l : rec.links) links.push_back({l.cuboid.center(), l.speed, 0.0});

    for (std::size_t s = 0; s < strategies.size(); ++s) {
      SpeedMode mode = SpeedMode::Normal;
      switch (strategies[s]) {
        case ReplayStrategy::None:
          break;
        case ReplayStrategy::FixedMargin: {
          for (const std::uint32_t idx : predicted)
            if (margin_box.contains(meta.grid.center(idx))) {
              mode = SpeedMode::Stop;
              break;
            }
          break;
        }
        case ReplayStrategy::FixedZones: {
          const double stop_r = occupancy_ratio(predicted, meta.grid, meta.stop_zone);
          const double slow_r = occupancy_ratio(predicted, meta.grid, meta.slowdown_zone);
          mode = decide_mode(stop_r, slow_r, meta.trigger_threshold);
          break;
        }
        case ReplayStrategy::DynamicSpheres: {
          mode = dynamic_zone_decide(links, meta.ssm, predicted, meta.grid,
                                     meta.slowdown_zone, meta.trigger_threshold)
                     .mode;
          break;
        }
      }
      if (mode == SpeedMode::Stop) added[s] += dt;
      else if (mode == SpeedMode::Slowdown) added[s] += dt * slowdown_penalty;
    }
  }

  ProductivityReport report;
  report.baseline_s = static_cast<double>(scans.size()) * dt;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    ProductivityRow row;
    row.strategy = strategies[s];
    row.added_s = added[s];
    row.percent_increase =
        report.baseline_s > 0.0 ? 100.0 * added[s] / report.baseline_s : 0.0;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace workcell
