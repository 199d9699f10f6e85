#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "workcell/analysis.hpp"
#include "workcell/logs.hpp"
#include "workcell/scenario.hpp"
#include "workcell/scheduler.hpp"
#include "workcell/world.hpp"

namespace workcell {

/// Ticks the world, senses, decides, then advances the world under the
/// commanded ratio. Exactly one decision per tick, in tick order; decision k
/// reflects the world state at tick k and governs motion over [k, k+1).
class WorldSafetyStream final : public SafetyStream {
 public:
  WorldSafetyStream(const Scenario& sc, World& world)
      : sc_(sc), world_(world), cfg_(monitor_config(sc)) {
    if (sc.perception == PerceptionMode::Lidar)
      lidar_run_ = LidarRun::create(sc.lidar, sc.dt, derive_seed(sc.seed, 0x71da2));
    if (sc.predictor_fp > 0.0 || sc.predictor_fn > 0.0) {
      noisy_ = std::make_unique<NoisyPredictor>(baseline_, sc.predictor_fp,
                                                sc.predictor_fn,
                                                derive_seed(sc.seed, 0x9ced));
      cfg_.predictor = noisy_.get();
    }
  }

  SafetyDecision next() override {
    const std::vector<Vec3> points = sense();

    SafetyDecision decision;
    if (sc_.monitor_enabled) {
      RobotView view;
      view.links = world_.robot_cuboids();
      view.tool = world_.tool_cuboid();
      view.link_states = world_.link_states(last_ratio_);
      decision = monitor_tick(points, view, cfg_);
    }

    if (decision_log_) decision_log_->push_back({world_.tick_index(), decision});
    if (scan_writer_)
      scan_writer_->write({world_.tick_index(), world_.time_s(), points});
    if (motion_writer_) {
      MotionRecord rec;
      rec.tick = world_.tick_index();
      rec.t = world_.time_s();
      const auto cuboids = world_.robot_cuboids();
      const auto states = world_.link_states(last_ratio_);
      for (std::size_t i = 0; i < cuboids.size(); ++i)
        rec.links.push_back({cuboids[i], states[i].speed});
      rec.tool = world_.tool_cuboid();
      motion_writer_->write(rec);
    }

    last_ratio_ = sc_.monitor_enabled ? speed_ratio(decision.mode) : 1.0;
    world_.advance(last_ratio_);
    return decision;
  }

  double dt() const override { return sc_.dt; }

  void attach_decision_log(std::vector<DecisionRow>* log) { decision_log_ = log; }
  void attach_scan_writer(ScanLogWriter* w) { scan_writer_ = w; }
  void attach_motion_writer(MotionLogWriter* w) { motion_writer_ = w; }

 private:
  std::vector<Vec3> sense() {
    if (sc_.perception == PerceptionMode::Geometric)
      return geometric_points(world_, sc_.grid);
    return scan(world_, sc_.lidar, lidar_run_);
  }

  const Scenario& sc_;
  World& world_;
  MonitorConfig cfg_;
  LidarRun lidar_run_;
  BaselinePredictor baseline_;
  std::unique_ptr<NoisyPredictor> noisy_;
  double last_ratio_ = 1.0;
  std::vector<DecisionRow>* decision_log_ = nullptr;
  ScanLogWriter* scan_writer_ = nullptr;
  MotionLogWriter* motion_writer_ = nullptr;
};

struct SimulationResult {
  std::vector<CycleRecord> cycles;
  std::vector<NodeEvent> events;
  std::vector<DecisionRow> decisions;
  double wall_s = 0.0;
  int cycles_completed = 0;
  int cycles_passed = 0;
  int insert_ops = 0;
  int insert_failures = 0;

  double pass_rate_ops() const {
    return insert_ops > 0
               ? 1.0 - static_cast<double>(insert_failures) / insert_ops
               : 1.0;
  }
  double effective_takt_s() const {
    return cycles_completed > 0 ? wall_s_per_cycle() : 0.0;
  }

 private:
  double wall_s_per_cycle() const {
    double total = 0.0;
    for (const auto& c : cycles) total += c.wall_s;
    return total / cycles_completed;
  }
};

/// Runs a full scenario; optionally writes the event, decision, cycle, scan
/// and motion logs into out_dir. Identical scenario and seed give
/// byte-identical outputs.
inline SimulationResult run_simulation(
    const Scenario& sc, const std::optional<std::filesystem::path>& out_dir = {},
    std::optional<std::uint64_t> seed_override = {}) {
  Scenario scenario = sc;
  if (seed_override) scenario.seed = *seed_override;

  const auto issues = validate_scenario(scenario);
  if (!issues.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& e : issues) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
  }

  World world = build_world(scenario);
  world.init(scenario.seed, scenario.duration_s);

  WorldSafetyStream stream(scenario, world);
  SimulationResult result;
  stream.attach_decision_log(&result.decisions);

  std::unique_ptr<ScanLogWriter> scan_writer;
  std::unique_ptr<MotionLogWriter> motion_writer;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    if (scenario.scan_log) {
      scan_writer = std::make_unique<ScanLogWriter>(*out_dir / "scans.jsonl");
      stream.attach_scan_writer(scan_writer.get());
    }
    motion_writer = std::make_unique<MotionLogWriter>(*out_dir / "motion.jsonl",
                                                      motion_meta(scenario));
    stream.attach_motion_writer(motion_writer.get());
  }

  ScheduleEngine engine(scenario.graph, stream, derive_seed(scenario.seed, 0x5c4ed));
  result.cycles = engine.run_shift(scenario.duration_s);
  result.events = engine.events();

  result.cycles_completed = static_cast<int>(result.cycles.size());
  for (const auto& c : result.cycles) {
    if (c.passed) ++result.cycles_passed;
    result.insert_ops += c.insert_ops;
    result.insert_failures += c.insert_defects;
    if (!c.passed && c.insert_defects == 0) {
      // aborted at a non-policy node; count against ops only if it was one
      const int idx = scenario.graph.index_of(c.failed_node);
      if (idx >= 0 && node_kind(scenario.graph.nodes[idx]) == NodeKind::Policy)
        ++result.insert_failures;
    }
  }
  result.wall_s = engine.elapsed_s();

  if (out_dir) {
    write_event_log(*out_dir / "events.csv", result.events);
    write_cycle_log(*out_dir / "cycles.csv", result.cycles);
    write_decision_log(*out_dir / "decisions.csv", result.decisions);
  }
  return result;
}

}  // namespace workcell
