#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "workcell/geometry.hpp"
#include "workcell/rng.hpp"
#include "workcell/safety.hpp"

namespace workcell {

// ---------------------------------------------------------------------------
// Scripted motion
// ---------------------------------------------------------------------------

struct PoseKeyframe {
  double t = 0.0;
  Pose pose;
};

/// Piecewise-linear pose spline (lerp translation, slerp rotation), looping
/// with the period of the last keyframe.
class PoseScript {
 public:
  PoseScript() = default;
  explicit PoseScript(std::vector<PoseKeyframe> keys) : keys_(std::move(keys)) {}

  bool empty() const { return keys_.empty(); }
  double period() const { return keys_.empty() ? 0.0 : keys_.back().t; }
  const std::vector<PoseKeyframe>& keys() const { return keys_; }

  Pose sample(double t) const {
    if (keys_.empty()) return Pose::identity();
    if (keys_.size() == 1 || period() <= 0.0) return keys_.front().pose;
    double tau = std::fmod(t, period());
    if (tau < 0.0) tau += period();
    std::size_t hi = 1;
    while (hi < keys_.size() && keys_[hi].t < tau) ++hi;
    if (hi >= keys_.size()) hi = keys_.size() - 1;
    const auto& a = keys_[hi - 1];
    const auto& b = keys_[hi];
    const double span = b.t - a.t;
    const double u = span > 1e-12 ? (tau - a.t) / span : 0.0;
    Pose out;
    out.translation = (1.0 - u) * a.pose.translation + u * b.pose.translation;
    out.rotation = a.pose.rotation.slerp(u, b.pose.rotation).normalized();
    return out;
  }

  /// Translational speed of the scripted point, central difference.
  Vec3 velocity(double t) const {
    if (keys_.size() < 2 || period() <= 0.0) return Vec3::Zero();
    const double h = 1e-3;
    return (sample(t + h).translation - sample(t - h).translation) / (2.0 * h);
  }

 private:
  std::vector<PoseKeyframe> keys_;
};

struct RobotLink {
  std::string name;
  Vec3 half_extents = Vec3::Zero();
  PoseScript script;
};

/// End-effector tool cuboid riding on a link.
struct ToolSpec {
  Vec3 half_extents = Vec3::Zero();
  int link_index = 0;
  Pose offset;
};

// ---------------------------------------------------------------------------
// Workers
// ---------------------------------------------------------------------------

struct WorkerPathPoint {
  double t = 0.0;  // seconds from visit start
  Vec3 position = Vec3::Zero();
};

enum class WorkerSchedule { Periodic, Interval, Times };

/// Worker-sized cuboid following a timed visit path. Between visits the
/// worker is out of the cell. Workers never scale with the robot speed ratio.
struct WorkerSpec {
  Vec3 half_extents = Vec3(0.2, 0.2, 0.55);
  std::vector<WorkerPathPoint> path;
  WorkerSchedule schedule = WorkerSchedule::Periodic;
  double period_s = 900.0;                       // Periodic
  std::pair<double, double> gap_range_s = {600.0, 1200.0};  // Interval, start-to-start
  std::vector<double> visit_times_s;             // Times
  bool torso_height = false;

  double path_duration() const { return path.empty() ? 0.0 : path.back().t; }

  Vec3 position_at(double local_t) const {
    if (path.empty()) return Vec3::Zero();
    if (local_t <= path.front().t) return path.front().position;
    for (std::size_t i = 1; i < path.size(); ++i) {
      if (local_t <= path[i].t) {
        const double span = path[i].t - path[i - 1].t;
        const double u = span > 1e-12 ? (local_t - path[i - 1].t) / span : 1.0;
        return (1.0 - u) * path[i - 1].position + u * path[i].position;
      }
    }
    return path.back().position;
  }
};

// ---------------------------------------------------------------------------
// Random obstacles
// ---------------------------------------------------------------------------

struct ObstacleSpawnSpec {
  bool enabled = false;
  // Full box extents and center position, sampled uniformly per axis.
  std::array<std::pair<double, double>, 3> size_range = {
      {{0.3, 0.5}, {0.03, 0.35}, {0.03, 0.35}}};
  std::array<std::pair<double, double>, 3> pos_range = {
      {{-0.65, 0.45}, {-1.45, 1.1}, {0.0, 1.85}}};
  double spawn_period_s = 60.0;
  double lifetime_s = 8.0;
};

/// Axis-aligned cuboid with size and position drawn from the spec's ranges.
inline Cuboid spawn_random_obstacle(const ObstacleSpawnSpec& spec, Rng& rng) {
  Vec3 size, pos;
  for (int i = 0; i < 3; ++i)
    size[i] = rng.uniform(spec.size_range[i].first, spec.size_range[i].second);
  for (int i = 0; i < 3; ++i)
    pos[i] = rng.uniform(spec.pos_range[i].first, spec.pos_range[i].second);
  return {Pose::translate(pos), size * 0.5};
}

// ---------------------------------------------------------------------------
// LiDAR
// ---------------------------------------------------------------------------

struct LidarModel {
  Pose mount;
  double az_start_deg = -180.0;
  double az_end_deg = 180.0;  // exclusive for a full sweep
  double az_step_deg = 0.5;
  double el_start_deg = -15.0;
  double el_end_deg = 15.0;  // inclusive
  double el_step_deg = 0.5;
  double max_range_m = 10.0;
  std::pair<double, double> noise_std_range_m = {0.0, 0.005};  // drawn per scan
  std::pair<double, double> drift_range_m = {-0.01, 0.01};     // per run, per axis
  std::pair<double, double> delay_range_s = {0.0, 0.075};      // per run

  int n_azimuth() const {
    return std::max(1, static_cast<int>(std::llround((az_end_deg - az_start_deg) / az_step_deg)));
  }
  int n_elevation() const {
    return 1 + std::max(0, static_cast<int>(std::llround((el_end_deg - el_start_deg) / el_step_deg)));
  }
};

/// Per-run sensor imperfections: mount drift, update delay (quantized to
/// whole ticks), and the per-scan range-noise std stream.
struct LidarRun {
  Vec3 drift = Vec3::Zero();
  double delay_s = 0.0;
  int delay_ticks = 0;
  Rng noise_rng;

  static LidarRun create(const LidarModel& model, double dt, std::uint64_t seed) {
    LidarRun run;
    Rng setup(derive_seed(seed, 0x11da7));
    for (int i = 0; i < 3; ++i)
      run.drift[i] = setup.uniform(model.drift_range_m.first, model.drift_range_m.second);
    run.delay_s = setup.uniform(model.delay_range_s.first, model.delay_range_s.second);
    run.delay_ticks = static_cast<int>(std::floor(run.delay_s / dt));
    run.noise_rng = Rng(derive_seed(seed, 0x5ca9));
    return run;
  }
};

/// Casts the model's ray pattern against a scene snapshot; nearest hit per
/// ray, Gaussian range noise with the scan's std. Misses return nothing.
inline std::vector<Vec3> scan_scene(std::span<const Cuboid> scene,
                                    const LidarModel& model, LidarRun& run) {
  const double std_m =
      run.noise_rng.uniform(model.noise_std_range_m.first, model.noise_std_range_m.second);
  const Vec3 origin = model.mount.translation + run.drift;
  std::vector<Vec3> points;
  const int n_az = model.n_azimuth();
  const int n_el = model.n_elevation();
  points.reserve(static_cast<std::size_t>(n_az) * 4);
  for (int ia = 0; ia < n_az; ++ia) {
    const double az = deg_to_rad(model.az_start_deg + ia * model.az_step_deg);
    for (int ie = 0; ie < n_el; ++ie) {
      const double el = deg_to_rad(model.el_start_deg + ie * model.el_step_deg);
      const Vec3 local(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                       std::sin(el));
      const Ray ray{origin, model.mount.rotation * local};
      double best = model.max_range_m;
      bool hit = false;
      for (const auto& c : scene) {
        if (const auto d = ray_cuboid_intersect(ray, c); d && *d < best) {
          best = *d;
          hit = true;
        }
      }
      if (!hit) continue;
      double noisy = best;
      if (std_m > 0.0) noisy = std::max(0.0, best + run.noise_rng.normal(0.0, std_m));
      points.push_back(ray.origin + ray.direction * noisy);
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

/// Deterministic workcell state. Robot links follow their scripts scaled by
/// the commanded speed ratio; workers and obstacles follow wall time.
class World {
 public:
  double dt = 0.1;
  std::vector<RobotLink> links;
  std::optional<ToolSpec> tool;
  std::vector<Cuboid> statics;  // worktable and other fixtures
  std::vector<WorkerSpec> workers;
  ObstacleSpawnSpec obstacles;

  void init(std::uint64_t seed, double duration_hint_s) {
    tick_index_ = 0;
    time_s_ = 0.0;
    robot_phase_ = 0.0;
    worker_starts_.assign(workers.size(), {});
    Rng worker_rng(derive_seed(seed, 0x3019));
    for (std::size_t i = 0; i < workers.size(); ++i) {
      auto& starts = worker_starts_[i];
      const auto& w = workers[i];
      switch (w.schedule) {
        case WorkerSchedule::Periodic: {
          for (double t = w.period_s; t < duration_hint_s + w.period_s; t += w.period_s)
            starts.push_back(t);
          break;
        }
        case WorkerSchedule::Interval: {
          double t = worker_rng.uniform(w.gap_range_s.first, w.gap_range_s.second);
          while (t < duration_hint_s + w.gap_range_s.second) {
            starts.push_back(t);
            t += worker_rng.uniform(w.gap_range_s.first, w.gap_range_s.second);
          }
          break;
        }
        case WorkerSchedule::Times:
          starts = w.visit_times_s;
          break;
      }
    }
    obstacle_schedule_.clear();
    if (obstacles.enabled) {
      Rng obs_rng(derive_seed(seed, 0x0b57));
      for (double t = obstacles.spawn_period_s; t < duration_hint_s;
           t += obstacles.spawn_period_s)
        obstacle_schedule_.emplace_back(t, spawn_random_obstacle(obstacles, obs_rng));
    }
    history_.clear();
    history_.push_back(scene_cuboids());
  }

  std::int64_t tick_index() const { return tick_index_; }
  double time_s() const { return time_s_; }
  double robot_phase() const { return robot_phase_; }

  std::vector<Cuboid> robot_cuboids() const {
    std::vector<Cuboid> out;
    out.reserve(links.size());
    for (const auto& l : links) out.push_back({l.script.sample(robot_phase_), l.half_extents});
    return out;
  }

  std::optional<Cuboid> tool_cuboid() const {
    if (!tool || tool->link_index < 0 ||
        tool->link_index >= static_cast<int>(links.size()))
      return std::nullopt;
    const Pose link_pose = links[tool->link_index].script.sample(robot_phase_);
    return Cuboid{compose(link_pose, tool->offset), tool->half_extents};
  }

  /// Link kinematic states at the given commanded ratio (speed scales with it).
  std::vector<LinkState> link_states(double ratio) const {
    std::vector<LinkState> out;
    out.reserve(links.size());
    for (const auto& l : links) {
      LinkState s;
      s.position = l.script.sample(robot_phase_).translation;
      s.speed = l.script.velocity(robot_phase_).norm() * ratio;
      out.push_back(s);
    }
    return out;
  }

  std::vector<Cuboid> worker_cuboids() const { return worker_cuboids_at(time_s_); }

  std::vector<Cuboid> worker_cuboids_at(double t) const {
    std::vector<Cuboid> out;
    for (std::size_t i = 0; i < workers.size(); ++i) {
      const auto& w = workers[i];
      const double dur = w.path_duration();
      for (const double start : worker_starts_[i]) {
        if (t >= start && t <= start + dur) {
          out.push_back({Pose::translate(w.position_at(t - start)), w.half_extents});
          break;
        }
        if (start > t) break;
      }
    }
    return out;
  }

  std::vector<Cuboid> obstacle_cuboids() const {
    std::vector<Cuboid> out;
    for (const auto& [t, c] : obstacle_schedule_)
      if (time_s_ >= t && time_s_ <= t + obstacles.lifetime_s) out.push_back(c);
    return out;
  }

  /// Workers plus spawned obstacles: everything the monitor should flag.
  std::vector<Cuboid> external_cuboids() const {
    auto out = worker_cuboids();
    for (const auto& c : obstacle_cuboids()) out.push_back(c);
    return out;
  }

  std::vector<Cuboid> scene_cuboids() const {
    auto out = robot_cuboids();
    if (const auto t = tool_cuboid()) out.push_back(*t);
    for (const auto& c : statics) out.push_back(c);
    for (const auto& c : external_cuboids()) out.push_back(c);
    return out;
  }

  /// Scene as the sensor saw it `delay_ticks` ago.
  const std::vector<Cuboid>& delayed_scene(int delay_ticks) const {
    const std::size_t n = history_.size();
    const std::size_t back = std::min<std::size_t>(delay_ticks, n - 1);
    return history_[n - 1 - back];
  }

  /// Advances one monitoring cycle. Robot scripts progress by ratio * dt;
  /// workers and obstacles by dt regardless.
  void advance(double speed_ratio) {
    ++tick_index_;
    time_s_ += dt;
    robot_phase_ += speed_ratio * dt;
    history_.push_back(scene_cuboids());
    while (history_.size() > 64) history_.pop_front();
  }

 private:
  std::int64_t tick_index_ = 0;
  double time_s_ = 0.0;
  double robot_phase_ = 0.0;
  std::vector<std::vector<double>> worker_starts_;
  std::vector<std::pair<double, Cuboid>> obstacle_schedule_;
  std::deque<std::vector<Cuboid>> history_;
};

inline void tick(World& world, double speed_ratio) { world.advance(speed_ratio); }

/// LiDAR scan of the world honoring the run's update delay.
inline std::vector<Vec3> scan(const World& world, const LidarModel& model,
                              LidarRun& run) {
  return scan_scene(world.delayed_scene(run.delay_ticks), model, run);
}

/// Exact external-occupancy points: the centers of grid voxels covered by
/// workers/obstacles. Voxelizing these returns the same set, so scan logs
/// written in this mode replay identically.
inline std::vector<Vec3> geometric_points(const World& world, const GridSpec& grid) {
  std::vector<Vec3> out;
  for (const auto& c : world.external_cuboids()) {
    const Vec3 lo = c.center() - c.half_extents.norm() * Vec3::Ones();
    const Vec3 hi = c.center() + c.half_extents.norm() * Vec3::Ones();
    const auto r = voxel_ranges_in_box(grid, lo, hi);
    for (int ix = r[0].lo; ix <= r[0].hi; ++ix)
      for (int iy = r[1].lo; iy <= r[1].hi; ++iy)
        for (int iz = r[2].lo; iz <= r[2].hi; ++iz) {
          const Vec3 center = grid.center(grid.linear(ix, iy, iz));
          if (c.contains(center)) out.push_back(center);
        }
  }
  return out;
}

}  // namespace workcell
