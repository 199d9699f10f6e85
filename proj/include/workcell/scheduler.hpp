#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "workcell/controllers.hpp"
#include "workcell/safety.hpp"

namespace workcell {

// ---------------------------------------------------------------------------
// Task graph
// ---------------------------------------------------------------------------

enum class NodeKind { Servo, Policy, Waypoint, Human };

enum class FallbackKind { Retry, OperatorAlert, AbortCycle };

struct Fallback {
  FallbackKind kind = FallbackKind::AbortCycle;
  int retry_budget = 0;  // used when kind == Retry
};

struct ServoNodeConfig {
  double start_offset_m = 0.05;  // initial pose error envelope (radius)
  double start_yaw_deg = 20.0;
  double translation_noise_m = 0.0;
  NoiseShape noise_shape = NoiseShape::Ball;
  double rotation_noise_deg = 0.0;
  double pos_tol_m = 0.005;
  double rot_tol_deg = 0.5;
  int max_iters = 6;              // default budget ~20 s with the default step time
  double iter_duration_s = 3.2;   // robot motion + inference per correction
  double base_duration_s = 1.5;
};

struct PolicyNodeConfig {
  double step_scale_m = 0.002;
  int chunk_size = 5;
  double success_threshold = 0.95;
  double success_dist_offset_m = 0.004;
  double success_sharpness_m = 0.001;
  double approach_height_m = 0.03;
  // Target placement envelope per cycle (hole variability).
  double target_sector_deg = 60.0;
  double target_radial_m = 0.004;
  double stuck_probability = 0.0;
  std::pair<double, double> retract_range_m = {0.0025, 0.004};
  int max_retries = 3;
  double step_duration_s = 0.05;  // 20 Hz policy
  double retract_duration_s = 1.5;
  double base_duration_s = 10.0;
  /// Probability that the success head fires before the part is seated; the
  /// node reports success but the cycle is marked defective.
  double premature_success_prob = 0.0;
};

struct WaypointNodeConfig {
  double duration_s = 5.0;
};

struct HumanNodeConfig {
  double duration_s = 10.0;
};

using NodeConfig =
    std::variant<ServoNodeConfig, PolicyNodeConfig, WaypointNodeConfig, HumanNodeConfig>;

struct TaskNode {
  std::string id;
  NodeConfig config = WaypointNodeConfig{};
  std::string on_success;  // empty only on the terminal node
  Fallback on_failure;
};

inline NodeKind node_kind(const TaskNode& n) {
  return static_cast<NodeKind>(n.config.index());
}

struct TaskGraph {
  std::vector<TaskNode> nodes;
  std::string entry;
  std::string terminal;

  int index_of(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
  }
};

/// Structural validation; returns all violations, never throws.
inline std::vector<std::string> validate(const TaskGraph& graph) {
  std::vector<std::string> errors;
  if (graph.nodes.empty()) {
    errors.push_back("graph has no nodes");
    return errors;
  }

  std::set<std::string> ids;
  for (const auto& n : graph.nodes) {
    if (n.id.empty()) errors.push_back("node with empty id");
    if (!ids.insert(n.id).second) errors.push_back("duplicate node id: " + n.id);
  }
  if (graph.index_of(graph.entry) < 0)
    errors.push_back("entry node not found: " + graph.entry);
  if (graph.index_of(graph.terminal) < 0)
    errors.push_back("terminal node not found: " + graph.terminal);

  for (const auto& n : graph.nodes) {
    if (n.id == graph.terminal) {
      if (!n.on_success.empty())
        errors.push_back("terminal node " + n.id + " must not have an on_success edge");
    } else if (n.on_success.empty()) {
      errors.push_back("node " + n.id + " has no on_success edge");
    } else if (graph.index_of(n.on_success) < 0) {
      errors.push_back("node " + n.id + " points to missing node " + n.on_success);
    }
    if (n.on_failure.kind == FallbackKind::Retry && n.on_failure.retry_budget <= 0)
      errors.push_back("node " + n.id +
                       " has a zero-progress failure loop (retry with no budget)");
    if (const auto* w = std::get_if<WaypointNodeConfig>(&n.config)) {
      if (!(w->duration_s > 0.0))
        errors.push_back("node " + n.id + " has non-positive duration");
    }
    if (const auto* h = std::get_if<HumanNodeConfig>(&n.config)) {
      if (!(h->duration_s > 0.0))
        errors.push_back("node " + n.id + " has non-positive duration");
    }
    if (const auto* s = std::get_if<ServoNodeConfig>(&n.config)) {
      if (s->max_iters < 1) errors.push_back("node " + n.id + " has max_iters < 1");
    }
    if (const auto* p = std::get_if<PolicyNodeConfig>(&n.config)) {
      if (p->max_retries < 0) errors.push_back("node " + n.id + " has max_retries < 0");
    }
  }
  if (!errors.empty()) return errors;

  // Reachability along on_success edges.
  std::set<std::string> reached;
  std::string cur = graph.entry;
  while (reached.insert(cur).second) {
    const auto& n = graph.nodes[graph.index_of(cur)];
    if (cur == graph.terminal) break;
    cur = n.on_success;
  }
  if (!reached.count(graph.terminal))
    errors.push_back("terminal is not reachable from entry via on_success edges");
  for (const auto& n : graph.nodes)
    if (!reached.count(n.id)) errors.push_back("unreachable node: " + n.id);
  return errors;
}

// ---------------------------------------------------------------------------
// Cycle records and safety stream
// ---------------------------------------------------------------------------

/// Per-motor timing ledger.
struct CycleRecord {
  int index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double nominal_s = 0.0;  // speed-ratio-1 equivalent work completed
  double wall_s = 0.0;
  double paused_s = 0.0;   // robot time at ratio 0
  double slowed_s = 0.0;   // robot time at ratio 0.7
  std::map<std::string, int> retries;
  bool passed = true;
  std::string failed_node;
  int insert_ops = 0;
  int insert_defects = 0;
};

struct NodeEvent {
  int cycle = 0;
  std::string node;
  std::int64_t start_tick = 0;
  std::int64_t end_tick = 0;
  bool succeeded = true;
  int retries = 0;
};

/// One decision per tick, in tick order; the scheduler is the sole reader.
class SafetyStream {
 public:
  virtual ~SafetyStream() = default;
  virtual SafetyDecision next() = 0;
  virtual double dt() const = 0;
};

class ConstantSafetyStream final : public SafetyStream {
 public:
  explicit ConstantSafetyStream(double dt = 0.1, SpeedMode mode = SpeedMode::Normal)
      : dt_(dt), mode_(mode) {}
  SafetyDecision next() override { return {0.0, 0.0, mode_}; }
  double dt() const override { return dt_; }

 private:
  double dt_;
  SpeedMode mode_;
};

/// Fixed mode sequence, default mode afterwards. Useful for injected events.
class ScriptedSafetyStream final : public SafetyStream {
 public:
  ScriptedSafetyStream(std::vector<SpeedMode> modes, double dt = 0.1,
                       SpeedMode after = SpeedMode::Normal)
      : modes_(std::move(modes)), dt_(dt), after_(after) {}
  SafetyDecision next() override {
    const SpeedMode m = pos_ < modes_.size() ? modes_[pos_] : after_;
    ++pos_;
    return {0.0, 0.0, m};
  }
  double dt() const override { return dt_; }

 private:
  std::vector<SpeedMode> modes_;
  std::size_t pos_ = 0;
  double dt_;
  SpeedMode after_;
};

// ---------------------------------------------------------------------------
// Execution engine
// ---------------------------------------------------------------------------

/// Advances the task graph against the safety stream. Robot nodes progress at
/// the commanded speed ratio; human steps progress at wall rate (workers do
/// not slow down with the robot). Node boundaries fall mid-tick, so nominal
/// accounting is exact.
class ScheduleEngine {
 public:
  ScheduleEngine(const TaskGraph& graph, SafetyStream& stream, std::uint64_t seed)
      : graph_(graph), stream_(stream), seed_(seed) {}

  CycleRecord run_cycle() {
    CycleRecord rec;
    rec.index = cycle_count_++;
    rec.start_s = elapsed_;

    std::string cur = graph_.entry;
    bool aborted = false;
    while (!aborted) {
      const int node_idx = graph_.index_of(cur);
      const TaskNode& node = graph_.nodes[node_idx];
      int attempt = 0;
      while (true) {
        const NodePlan plan = plan_node(node, rec.index, node_idx, attempt);
        const std::int64_t start_tick = current_tick();
        consume(plan.duration_s, node_kind(node) == NodeKind::Human, rec);
        rec.nominal_s += plan.duration_s;
        rec.retries[node.id] += plan.retries;
        events_.push_back({rec.index, node.id, start_tick, current_tick(),
                           plan.success, plan.retries});
        if (node_kind(node) == NodeKind::Policy) {
          ++rec.insert_ops;
          if (plan.defect) ++rec.insert_defects;
        }
        if (plan.defect && rec.failed_node.empty()) {
          rec.passed = false;
          rec.failed_node = node.id;
        }
        if (plan.success) break;

        if (node.on_failure.kind == FallbackKind::Retry &&
            attempt < node.on_failure.retry_budget) {
          ++attempt;
          rec.retries[node.id] += 1;
          continue;
        }
        rec.passed = false;
        if (rec.failed_node.empty()) rec.failed_node = node.id;
        if (node.on_failure.kind == FallbackKind::OperatorAlert)
          alerts_.push_back(node.id);
        aborted = true;
        break;
      }
      if (aborted || cur == graph_.terminal) break;
      cur = node.on_success;
    }

    rec.end_s = elapsed_;
    rec.wall_s = rec.end_s - rec.start_s;
    return rec;
  }

  /// Repeats cycles until the duration elapses; a partly finished final cycle
  /// is discarded.
  std::vector<CycleRecord> run_shift(double duration_s) {
    if (!(duration_s > 0.0))
      throw std::invalid_argument("run_shift: duration must be > 0");
    std::vector<CycleRecord> out;
    while (elapsed_ < duration_s) {
      const CycleRecord rec = run_cycle();
      if (rec.end_s <= duration_s + 1e-9) {
        out.push_back(rec);
      } else {
        break;
      }
      if (!(rec.wall_s > 0.0)) break;  // malformed graph guard
    }
    return out;
  }

  double elapsed_s() const { return elapsed_; }
  const std::vector<NodeEvent>& events() const { return events_; }
  const std::vector<std::string>& operator_alerts() const { return alerts_; }

 private:
  struct NodePlan {
    double duration_s = 0.0;
    bool success = true;
    bool defect = false;
    int retries = 0;
  };

  std::int64_t current_tick() const { return tick_ < 0 ? 0 : tick_; }

  /// Runs the node's controller (pure, seeded) and prices its nominal time.
  NodePlan plan_node(const TaskNode& node, int cycle, int node_idx, int attempt) {
    Rng rng(derive_seed(derive_seed(derive_seed(seed_, cycle), node_idx), attempt));
    NodePlan plan;
    switch (node_kind(node)) {
      case NodeKind::Servo: {
        const auto& c = std::get<ServoNodeConfig>(node.config);
        const Vec3 offset = random_ball(rng) * c.start_offset_m;
        const double yaw = deg_to_rad(rng.uniform(-c.start_yaw_deg, c.start_yaw_deg));
        const Pose start = compose(Pose::translate(offset), Pose::rot_z(yaw));
        TargetServoOracle oracle({Pose::identity(), Vec3::Zero(),
                                  c.translation_noise_m, c.noise_shape,
                                  c.rotation_noise_deg, rng.next_u64(), -1});
        const auto res = servo_run(start, oracle, c.pos_tol_m, c.rot_tol_deg,
                                   c.max_iters, c.iter_duration_s);
        plan.success = res.outcome.status == ControllerStatus::Succeeded;
        plan.duration_s = c.base_duration_s + res.outcome.iterations * c.iter_duration_s;
        break;
      }
      case NodeKind::Policy: {
        const auto& c = std::get<PolicyNodeConfig>(node.config);
        PolicyEmulator emu;
        const double theta = deg_to_rad(
            rng.uniform(-0.5 * c.target_sector_deg, 0.5 * c.target_sector_deg));
        const double radial = rng.uniform(0.0, c.target_radial_m);
        emu.target = Vec3(radial * std::cos(theta), radial * std::sin(theta), 0.0);
        emu.chunk_size = c.chunk_size;
        emu.step_scale_m = c.step_scale_m;
        emu.success_threshold = c.success_threshold;
        emu.success_dist_offset_m = c.success_dist_offset_m;
        emu.success_sharpness_m = c.success_sharpness_m;
        const Vec3 start(0.0, 0.0, c.approach_height_m);
        LoadCellModel load{c.stuck_probability, 15.0};
        const auto res = insert_with_retry(start, emu, load, rng,
                                           c.retract_range_m, c.max_retries);
        plan.success = res.outcome.status == ControllerStatus::Succeeded;
        plan.retries = res.outcome.retries;
        plan.duration_s = c.base_duration_s + res.steps * c.step_duration_s +
                          res.outcome.retries * c.retract_duration_s;
        if (plan.success && c.premature_success_prob > 0.0 &&
            rng.bernoulli(c.premature_success_prob)) {
          plan.defect = true;  // detector fired early; part not seated
          plan.duration_s *= rng.uniform(0.5, 0.9);
        }
        break;
      }
      case NodeKind::Waypoint:
        plan.duration_s = std::get<WaypointNodeConfig>(node.config).duration_s;
        break;
      case NodeKind::Human:
        plan.duration_s = std::get<HumanNodeConfig>(node.config).duration_s;
        break;
    }
    return plan;
  }

  static Vec3 random_ball(Rng& rng) {
    Vec3 v(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
    const double n = v.norm();
    const Vec3 dir = n > 1e-12 ? Vec3(v / n) : Vec3::UnitX();
    return dir * std::cbrt(rng.uniform());
  }

  /// Consumes `nominal_needed` seconds of work from the stream; human nodes
  /// run at wall rate regardless of the commanded mode.
  void consume(double nominal_needed, bool human, CycleRecord& rec) {
    const double dt = stream_.dt();
    double remaining = nominal_needed;
    while (remaining > 1e-12) {
      if (budget_ <= 1e-12) {
        current_ = stream_.next();
        ++tick_;
        budget_ = dt;
      }
      const double rate = human ? 1.0 : speed_ratio(current_.mode);
      if (rate <= 0.0) {
        rec.paused_s += budget_;
        elapsed_ += budget_;
        budget_ = 0.0;
        continue;
      }
      const double capacity = rate * budget_;
      double wall_used;
      if (capacity >= remaining) {
        wall_used = remaining / rate;
        budget_ -= wall_used;
        remaining = 0.0;
      } else {
        wall_used = budget_;
        remaining -= capacity;
        budget_ = 0.0;
      }
      if (!human && current_.mode == SpeedMode::Slowdown) rec.slowed_s += wall_used;
      elapsed_ += wall_used;
    }
  }

  const TaskGraph& graph_;
  SafetyStream& stream_;
  std::uint64_t seed_;
  int cycle_count_ = 0;
  double elapsed_ = 0.0;
  SafetyDecision current_{};
  double budget_ = 0.0;
  std::int64_t tick_ = -1;
  std::vector<NodeEvent> events_;
  std::vector<std::string> alerts_;
};

inline CycleRecord run_cycle(const TaskGraph& graph, SafetyStream& stream,
                             std::uint64_t seed) {
  ScheduleEngine engine(graph, stream, seed);
  return engine.run_cycle();
}

inline std::vector<CycleRecord> run_shift(const TaskGraph& graph, SafetyStream& stream,
                                          double duration_s, std::uint64_t seed) {
  ScheduleEngine engine(graph, stream, seed);
  return engine.run_shift(duration_s);
}

}  // namespace workcell
