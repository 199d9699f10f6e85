#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "workcell/logs.hpp"
#include "workcell/safety.hpp"
#include "workcell/scheduler.hpp"
#include "workcell/world.hpp"

namespace workcell {

enum class PerceptionMode { Lidar, Geometric };

/// Everything a deterministic run needs, loaded from one JSON file.
/// All units SI; all ranges are [lo, hi] pairs.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  double dt = 0.1;
  double duration_s = 60.0;

  GridSpec grid;
  ZoneSpec stop_zone;
  ZoneSpec slowdown_zone;
  double trigger_threshold = 0.001;
  SsmParams ssm;

  bool monitor_enabled = true;
  bool dynamic_stop = false;
  PerceptionMode perception = PerceptionMode::Lidar;
  double segmentation_margin = 0.04;
  double predictor_fp = 0.0;
  double predictor_fn = 0.0;
  bool scan_log = true;

  std::optional<double> ee_min_height_m;
  int ee_link_index = -1;

  Cuboid table;
  std::vector<Cuboid> extra_statics;
  std::vector<RobotLink> links;
  std::optional<ToolSpec> tool;
  std::vector<WorkerSpec> workers;
  ObstacleSpawnSpec obstacles;
  LidarModel lidar;

  TaskGraph graph;
};

namespace detail {

inline Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("expected a 3-element array, got: " + j.dump());
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline std::pair<double, double> range_from(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::runtime_error("expected a [lo, hi] pair, got: " + j.dump());
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline Pose pose_from(const json& j) {
  const Vec3 pos = j.contains("pos") ? vec3_from(j.at("pos")) : Vec3::Zero();
  Vec3 rpy = Vec3::Zero();
  if (j.contains("rpy")) rpy = vec3_from(j.at("rpy"));
  return Pose::from_rpy(pos, deg_to_rad(rpy.x()), deg_to_rad(rpy.y()),
                        deg_to_rad(rpy.z()));
}

inline Cuboid box_from(const json& j) {
  Cuboid c;
  c.pose = pose_from(j);
  if (j.contains("center")) c.pose.translation = vec3_from(j.at("center"));
  c.half_extents = vec3_from(j.at("half_extents"));
  return c;
}

inline Fallback fallback_from(const json& j) {
  Fallback f;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "retry") {
    f.kind = FallbackKind::Retry;
    f.retry_budget = j.at("budget").get<int>();
  } else if (kind == "operator_alert") {
    f.kind = FallbackKind::OperatorAlert;
  } else if (kind == "abort_cycle") {
    f.kind = FallbackKind::AbortCycle;
  } else {
    throw std::runtime_error("unknown fallback kind: " + kind);
  }
  return f;
}

inline TaskNode node_from(const json& j) {
  TaskNode n;
  n.id = j.at("id").get<std::string>();
  if (j.contains("on_success")) n.on_success = j.at("on_success").get<std::string>();
  if (j.contains("on_failure")) n.on_failure = fallback_from(j.at("on_failure"));
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "servo") {
    ServoNodeConfig c;
    const json& s = j.value("servo", json::object());
    c.start_offset_m = s.value("start_offset_m", c.start_offset_m);
    c.start_yaw_deg = s.value("start_yaw_deg", c.start_yaw_deg);
    c.translation_noise_m = s.value("translation_noise_m", c.translation_noise_m);
    c.rotation_noise_deg = s.value("rotation_noise_deg", c.rotation_noise_deg);
    c.pos_tol_m = s.value("pos_tol_m", c.pos_tol_m);
    c.rot_tol_deg = s.value("rot_tol_deg", c.rot_tol_deg);
    c.max_iters = s.value("max_iters", c.max_iters);
    c.iter_duration_s = s.value("iter_duration_s", c.iter_duration_s);
    c.base_duration_s = s.value("base_duration_s", c.base_duration_s);
    n.config = c;
  } else if (kind == "policy") {
    PolicyNodeConfig c;
    const json& p = j.value("policy", json::object());
    c.step_scale_m = p.value("step_scale_m", c.step_scale_m);
    c.chunk_size = p.value("chunk_size", c.chunk_size);
    c.success_threshold = p.value("success_threshold", c.success_threshold);
    c.success_dist_offset_m = p.value("success_dist_offset_m", c.success_dist_offset_m);
    c.success_sharpness_m = p.value("success_sharpness_m", c.success_sharpness_m);
    c.approach_height_m = p.value("approach_height_m", c.approach_height_m);
    c.target_sector_deg = p.value("target_sector_deg", c.target_sector_deg);
    c.target_radial_m = p.value("target_radial_m", c.target_radial_m);
    c.stuck_probability = p.value("stuck_probability", c.stuck_probability);
    if (p.contains("retract_range_m")) c.retract_range_m = range_from(p.at("retract_range_m"));
    c.max_retries = p.value("max_retries", c.max_retries);
    c.step_duration_s = p.value("step_duration_s", c.step_duration_s);
    c.retract_duration_s = p.value("retract_duration_s", c.retract_duration_s);
    c.base_duration_s = p.value("base_duration_s", c.base_duration_s);
    c.premature_success_prob = p.value("premature_success_prob", c.premature_success_prob);
    n.config = c;
  } else if (kind == "waypoint") {
    n.config = WaypointNodeConfig{j.at("duration_s").get<double>()};
  } else if (kind == "human") {
    n.config = HumanNodeConfig{j.at("duration_s").get<double>()};
  } else {
    throw std::runtime_error("node " + n.id + ": unknown kind " + kind);
  }
  return n;
}

}  // namespace detail

inline Scenario scenario_from_json(const json& j) {
  using detail::box_from;
  using detail::range_from;
  using detail::vec3_from;

  Scenario sc;
  sc.name = j.value("name", std::string("scenario"));
  if (!j.contains("seed")) throw std::runtime_error("scenario requires a seed");
  sc.seed = j.at("seed").get<std::uint64_t>();
  sc.dt = j.value("dt", 0.1);
  sc.duration_s = j.value("duration_s", 60.0);

  const json& g = j.at("grid");
  sc.grid.min_corner = vec3_from(g.at("min"));
  sc.grid.max_corner = vec3_from(g.at("max"));
  sc.grid.voxel_size = g.value("voxel_size", 0.05);

  sc.stop_zone = {vec3_from(j.at("stop_zone").at("min")),
                  vec3_from(j.at("stop_zone").at("max")), ZoneKind::Stop};
  sc.slowdown_zone = {vec3_from(j.at("slowdown_zone").at("min")),
                      vec3_from(j.at("slowdown_zone").at("max")), ZoneKind::Slowdown};
  sc.trigger_threshold = j.value("threshold", 0.001);

  if (j.contains("ssm")) {
    const json& s = j.at("ssm");
    sc.ssm.v_h = s.value("v_h", sc.ssm.v_h);
    sc.ssm.t_r = s.value("t_r", sc.ssm.t_r);
    sc.ssm.t_s = s.value("t_s", sc.ssm.t_s);
    sc.ssm.b = s.value("b", sc.ssm.b);
    sc.ssm.C = s.value("C", sc.ssm.C);
    sc.ssm.z_r = s.value("z_r", sc.ssm.z_r);
    sc.ssm.z_s = s.value("z_s", sc.ssm.z_s);
    sc.ssm.cycle_dt = s.value("cycle_dt", sc.dt);
  }
  sc.ssm.cycle_dt = sc.dt;

  if (j.contains("monitor")) {
    const json& m = j.at("monitor");
    sc.monitor_enabled = m.value("enabled", true);
    sc.dynamic_stop = m.value("dynamic_stop", false);
    const std::string mode = m.value("perception", std::string("lidar"));
    if (mode == "lidar") sc.perception = PerceptionMode::Lidar;
    else if (mode == "geometric") sc.perception = PerceptionMode::Geometric;
    else throw std::runtime_error("unknown perception mode: " + mode);
    sc.segmentation_margin = m.value("segmentation_margin", sc.segmentation_margin);
    if (m.contains("predictor")) {
      sc.predictor_fp = m.at("predictor").value("fp_rate", 0.0);
      sc.predictor_fn = m.at("predictor").value("fn_rate", 0.0);
    }
  }
  sc.scan_log = j.value("scan_log", true);

  sc.table = box_from(j.at("table"));
  if (j.contains("statics"))
    for (const auto& s : j.at("statics")) sc.extra_statics.push_back(box_from(s));

  const json& robot = j.at("robot");
  for (const auto& lj : robot.at("links")) {
    RobotLink link;
    link.name = lj.at("name").get<std::string>();
    link.half_extents = vec3_from(lj.at("half_extents"));
    std::vector<PoseKeyframe> keys;
    for (const auto& kf : lj.at("keyframes"))
      keys.push_back({kf.at("t").get<double>(), detail::pose_from(kf)});
    link.script = PoseScript(std::move(keys));
    sc.links.push_back(std::move(link));
  }
  auto link_index = [&sc](const std::string& name) {
    for (std::size_t i = 0; i < sc.links.size(); ++i)
      if (sc.links[i].name == name) return static_cast<int>(i);
    throw std::runtime_error("unknown robot link: " + name);
  };
  if (robot.contains("tool")) {
    const json& t = robot.at("tool");
    ToolSpec tool;
    tool.half_extents = vec3_from(t.at("half_extents"));
    tool.link_index = link_index(t.at("link").get<std::string>());
    if (t.contains("offset_pos")) tool.offset.translation = vec3_from(t.at("offset_pos"));
    sc.tool = tool;
  }
  if (j.contains("ee_min_height")) {
    sc.ee_min_height_m = j.at("ee_min_height").get<double>();
    sc.ee_link_index = link_index(robot.at("ee_link").get<std::string>());
  }

  if (j.contains("workers")) {
    for (const auto& wj : j.at("workers")) {
      WorkerSpec w;
      if (wj.contains("half_extents")) w.half_extents = vec3_from(wj.at("half_extents"));
      const std::string schedule = wj.value("schedule", std::string("periodic"));
      if (schedule == "periodic") {
        w.schedule = WorkerSchedule::Periodic;
        w.period_s = wj.value("period_s", w.period_s);
      } else if (schedule == "interval") {
        w.schedule = WorkerSchedule::Interval;
        if (wj.contains("gap_range_s")) w.gap_range_s = range_from(wj.at("gap_range_s"));
      } else if (schedule == "times") {
        w.schedule = WorkerSchedule::Times;
        for (const auto& t : wj.at("times_s")) w.visit_times_s.push_back(t.get<double>());
      } else {
        throw std::runtime_error("unknown worker schedule: " + schedule);
      }
      w.torso_height = wj.value("torso_height", false);
      for (const auto& p : wj.at("path"))
        w.path.push_back({p.at("t").get<double>(), vec3_from(p.at("pos"))});
      sc.workers.push_back(std::move(w));
    }
  }

  if (j.contains("obstacles")) {
    const json& o = j.at("obstacles");
    sc.obstacles.enabled = o.value("enabled", false);
    if (o.contains("size_range"))
      for (int i = 0; i < 3; ++i) sc.obstacles.size_range[i] = range_from(o.at("size_range").at(i));
    if (o.contains("pos_range"))
      for (int i = 0; i < 3; ++i) sc.obstacles.pos_range[i] = range_from(o.at("pos_range").at(i));
    sc.obstacles.spawn_period_s = o.value("spawn_period_s", sc.obstacles.spawn_period_s);
    sc.obstacles.lifetime_s = o.value("lifetime_s", sc.obstacles.lifetime_s);
  }

  if (j.contains("lidar")) {
    const json& l = j.at("lidar");
    sc.lidar.mount = detail::pose_from(l);
    if (l.contains("mount_pos")) sc.lidar.mount.translation = vec3_from(l.at("mount_pos"));
    if (l.contains("az")) {
      sc.lidar.az_start_deg = l.at("az").at(0).get<double>();
      sc.lidar.az_end_deg = l.at("az").at(1).get<double>();
      sc.lidar.az_step_deg = l.at("az").at(2).get<double>();
    }
    if (l.contains("el")) {
      sc.lidar.el_start_deg = l.at("el").at(0).get<double>();
      sc.lidar.el_end_deg = l.at("el").at(1).get<double>();
      sc.lidar.el_step_deg = l.at("el").at(2).get<double>();
    }
    sc.lidar.max_range_m = l.value("max_range_m", sc.lidar.max_range_m);
    if (l.contains("noise_std_range_m"))
      sc.lidar.noise_std_range_m = range_from(l.at("noise_std_range_m"));
    if (l.contains("drift_range_m"))
      sc.lidar.drift_range_m = range_from(l.at("drift_range_m"));
    if (l.contains("delay_range_s"))
      sc.lidar.delay_range_s = range_from(l.at("delay_range_s"));
  } else if (sc.perception == PerceptionMode::Lidar) {
    throw std::runtime_error("perception is lidar but no lidar block is given");
  }

  const json& tg = j.at("task_graph");
  sc.graph.entry = tg.at("entry").get<std::string>();
  sc.graph.terminal = tg.at("terminal").get<std::string>();
  for (const auto& nj : tg.at("nodes")) sc.graph.nodes.push_back(detail::node_from(nj));

  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("scenario parse error in " + path.string() + ": " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw std::runtime_error("scenario field error in " + path.string() + ": " + e.what());
  }
}

/// Structural and geometric-premise checks; returns all problems found.
inline std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> errors;
  try {
    sc.grid.validate();
  } catch (const std::exception& e) {
    errors.emplace_back(e.what());
  }
  if (!(sc.dt > 0.0)) errors.push_back("dt must be > 0");
  if (!(sc.duration_s > 0.0)) errors.push_back("duration_s must be > 0");
  if (errors.empty()) {
    if (zone_voxel_count(sc.grid, sc.stop_zone) == 0)
      errors.push_back("stop zone does not overlap the monitoring grid");
    if (zone_voxel_count(sc.grid, sc.slowdown_zone) == 0)
      errors.push_back("slowdown zone does not overlap the monitoring grid");
  }
  for (const auto& err : validate(sc.graph)) errors.push_back("task graph: " + err);

  // Declared operating-height premise, sampled over the script period.
  if (sc.ee_min_height_m && sc.ee_link_index >= 0 &&
      sc.ee_link_index < static_cast<int>(sc.links.size())) {
    const auto& script = sc.links[sc.ee_link_index].script;
    const double period = std::max(script.period(), 1.0);
    for (double t = 0.0; t <= period; t += period / 200.0) {
      if (script.sample(t).translation.z() < *sc.ee_min_height_m - 1e-9) {
        errors.push_back("end-effector link drops below the declared minimum height");
        break;
      }
    }
  }
  for (std::size_t i = 0; i < sc.workers.size(); ++i) {
    const auto& w = sc.workers[i];
    if (w.path.empty()) {
      errors.push_back("worker " + std::to_string(i) + " has an empty path");
      continue;
    }
    for (std::size_t k = 1; k < w.path.size(); ++k)
      if (w.path[k].t < w.path[k - 1].t - 1e-12) {
        errors.push_back("worker " + std::to_string(i) + " path times must be monotone");
        break;
      }
    if (w.torso_height) {
      for (const auto& p : w.path)
        if (p.position.z() + w.half_extents.z() > 1.2 + 1e-9) {
          errors.push_back("worker " + std::to_string(i) +
                           " declared torso-height but its top exceeds 1.2 m");
          break;
        }
    }
  }
  return errors;
}

inline World build_world(const Scenario& sc) {
  World w;
  w.dt = sc.dt;
  w.links = sc.links;
  w.tool = sc.tool;
  w.statics.push_back(sc.table);
  for (const auto& c : sc.extra_statics) w.statics.push_back(c);
  w.workers = sc.workers;
  w.obstacles = sc.obstacles;
  return w;
}

inline MonitorConfig monitor_config(const Scenario& sc) {
  MonitorConfig cfg;
  cfg.grid = sc.grid;
  cfg.stop_zone = sc.stop_zone;
  cfg.slowdown_zone = sc.slowdown_zone;
  cfg.trigger_threshold = sc.trigger_threshold;
  cfg.dynamic_stop = sc.dynamic_stop;
  cfg.ssm = sc.ssm;
  cfg.segmentation_margin = sc.segmentation_margin;
  cfg.static_masks.push_back(sc.table);
  for (const auto& c : sc.extra_statics) cfg.static_masks.push_back(c);
  return cfg;
}

inline MotionMeta motion_meta(const Scenario& sc) {
  MotionMeta m;
  m.dt = sc.dt;
  m.grid = sc.grid;
  m.stop_zone = sc.stop_zone;
  m.slowdown_zone = sc.slowdown_zone;
  m.trigger_threshold = sc.trigger_threshold;
  m.ssm = sc.ssm;
  m.segmentation_margin = sc.segmentation_margin;
  m.static_masks.push_back(sc.table);
  for (const auto& c : sc.extra_statics) m.static_masks.push_back(c);
  m.table = sc.table;
  return m;
}

}  // namespace workcell
