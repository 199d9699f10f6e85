#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "workcell/safety.hpp"
#include "workcell/scheduler.hpp"
#include "workcell/world.hpp"

namespace workcell {

using json = nlohmann::json;

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw std::runtime_error("bad number in log: " + s);
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// ---------------------------------------------------------------------------
// Scan replay log (JSON lines: one record per tick)
// ---------------------------------------------------------------------------

struct ScanRecord {
  std::int64_t tick = 0;
  double t = 0.0;
  std::vector<Vec3> points;
};

inline json to_json(const ScanRecord& r) {
  json j;
  j["tick"] = r.tick;
  j["t"] = r.t;
  json pts = json::array();
  for (const auto& p : r.points) pts.push_back({p.x(), p.y(), p.z()});
  j["points"] = std::move(pts);
  return j;
}

inline ScanRecord scan_record_from_json(const json& j) {
  ScanRecord r;
  r.tick = j.at("tick").get<std::int64_t>();
  r.t = j.at("t").get<double>();
  for (const auto& p : j.at("points"))
    r.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                          p.at(2).get<double>());
  return r;
}

class ScanLogWriter {
 public:
  explicit ScanLogWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open scan log for writing: " + path.string());
  }
  void write(const ScanRecord& r) {
    out_ << to_json(r).dump() << '\n';
    if (!out_) throw std::runtime_error("scan log write failed at tick " + std::to_string(r.tick));
  }

 private:
  std::ofstream out_;
};

inline std::vector<ScanRecord> read_scan_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scan log: " + path.string());
  std::vector<ScanRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(scan_record_from_json(json::parse(line)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Robot motion log (JSON lines; first line is static metadata)
// ---------------------------------------------------------------------------

struct MotionLinkRecord {
  Cuboid cuboid;
  double speed = 0.0;
};

struct MotionRecord {
  std::int64_t tick = 0;
  double t = 0.0;
  std::vector<MotionLinkRecord> links;
  std::optional<Cuboid> tool;
};

/// Static context a replay needs: grid, zones, thresholds, fixtures.
struct MotionMeta {
  double dt = 0.1;
  GridSpec grid;
  ZoneSpec stop_zone;
  ZoneSpec slowdown_zone;
  double trigger_threshold = 0.001;
  SsmParams ssm;
  double segmentation_margin = 0.0;
  std::vector<Cuboid> static_masks;
  Cuboid table;  // reference box for fixed-margin baselines
};

struct MotionLog {
  MotionMeta meta;
  std::vector<MotionRecord> records;
};

inline json cuboid_to_json(const Cuboid& c) {
  const Quat& q = c.pose.rotation;
  return {{"q", {q.w(), q.x(), q.y(), q.z()}},
          {"p", {c.pose.translation.x(), c.pose.translation.y(), c.pose.translation.z()}},
          {"h", {c.half_extents.x(), c.half_extents.y(), c.half_extents.z()}}};
}

inline Cuboid cuboid_from_json(const json& j) {
  const auto& q = j.at("q");
  const auto& p = j.at("p");
  const auto& h = j.at("h");
  return {Pose(Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                    q.at(3).get<double>()),
               Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>())),
          Vec3(h.at(0).get<double>(), h.at(1).get<double>(), h.at(2).get<double>())};
}

inline json zone_to_json(const ZoneSpec& z) {
  return {{"min", {z.min_corner.x(), z.min_corner.y(), z.min_corner.z()}},
          {"max", {z.max_corner.x(), z.max_corner.y(), z.max_corner.z()}},
          {"kind", z.kind == ZoneKind::Stop ? "stop" : "slowdown"}};
}

inline ZoneSpec zone_from_json(const json& j, ZoneKind kind) {
  ZoneSpec z;
  const auto& lo = j.at("min");
  const auto& hi = j.at("max");
  z.min_corner = Vec3(lo.at(0).get<double>(), lo.at(1).get<double>(), lo.at(2).get<double>());
  z.max_corner = Vec3(hi.at(0).get<double>(), hi.at(1).get<double>(), hi.at(2).get<double>());
  z.kind = kind;
  if (j.contains("kind")) z.kind = j.at("kind") == "stop" ? ZoneKind::Stop : ZoneKind::Slowdown;
  return z;
}

inline json meta_to_json(const MotionMeta& m) {
  json j;
  j["dt"] = m.dt;
  j["grid"] = {{"min", {m.grid.min_corner.x(), m.grid.min_corner.y(), m.grid.min_corner.z()}},
               {"max", {m.grid.max_corner.x(), m.grid.max_corner.y(), m.grid.max_corner.z()}},
               {"voxel_size", m.grid.voxel_size}};
  j["stop_zone"] = zone_to_json(m.stop_zone);
  j["slowdown_zone"] = zone_to_json(m.slowdown_zone);
  j["threshold"] = m.trigger_threshold;
  j["ssm"] = {{"v_h", m.ssm.v_h}, {"t_r", m.ssm.t_r}, {"t_s", m.ssm.t_s},
              {"b", m.ssm.b},     {"C", m.ssm.C},     {"z_r", m.ssm.z_r},
              {"z_s", m.ssm.z_s}, {"cycle_dt", m.ssm.cycle_dt}};
  j["segmentation_margin"] = m.segmentation_margin;
  json masks = json::array();
  for (const auto& c : m.static_masks) masks.push_back(cuboid_to_json(c));
  j["static_masks"] = std::move(masks);
  j["table"] = cuboid_to_json(m.table);
  return json{{"meta", std::move(j)}};
}

inline MotionMeta meta_from_json(const json& wrapper) {
  const json& j = wrapper.at("meta");
  MotionMeta m;
  m.dt = j.at("dt").get<double>();
  const auto& g = j.at("grid");
  const auto& lo = g.at("min");
  const auto& hi = g.at("max");
  m.grid.min_corner = Vec3(lo.at(0).get<double>(), lo.at(1).get<double>(), lo.at(2).get<double>());
  m.grid.max_corner = Vec3(hi.at(0).get<double>(), hi.at(1).get<double>(), hi.at(2).get<double>());
  m.grid.voxel_size = g.at("voxel_size").get<double>();
  m.stop_zone = zone_from_json(j.at("stop_zone"), ZoneKind::Stop);
  m.slowdown_zone = zone_from_json(j.at("slowdown_zone"), ZoneKind::Slowdown);
  m.trigger_threshold = j.at("threshold").get<double>();
  const auto& s = j.at("ssm");
  m.ssm = {s.at("v_h").get<double>(), s.at("t_r").get<double>(), s.at("t_s").get<double>(),
           s.at("b").get<double>(),   s.at("C").get<double>(),   s.at("z_r").get<double>(),
           s.at("z_s").get<double>(), s.at("cycle_dt").get<double>()};
  m.segmentation_margin = j.at("segmentation_margin").get<double>();
  for (const auto& c : j.at("static_masks")) m.static_masks.push_back(cuboid_from_json(c));
  m.table = cuboid_from_json(j.at("table"));
  return m;
}

class MotionLogWriter {
 public:
  MotionLogWriter(const std::filesystem::path& path, const MotionMeta& meta) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open motion log for writing: " + path.string());
    out_ << meta_to_json(meta).dump() << '\n';
  }
  void write(const MotionRecord& r) {
    json j;
    j["tick"] = r.tick;
    j["t"] = r.t;
    json links = json::array();
    for (const auto& l : r.links) {
      json lj = cuboid_to_json(l.cuboid);
      lj["speed"] = l.speed;
      links.push_back(std::move(lj));
    }
    j["links"] = std::move(links);
    if (r.tool) j["tool"] = cuboid_to_json(*r.tool);
    out_ << j.dump() << '\n';
    if (!out_) throw std::runtime_error("motion log write failed at tick " + std::to_string(r.tick));
  }

 private:
  std::ofstream out_;
};

inline MotionLog read_motion_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open motion log: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("motion log missing meta line");
  MotionLog log;
  log.meta = meta_from_json(json::parse(line));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    MotionRecord r;
    r.tick = j.at("tick").get<std::int64_t>();
    r.t = j.at("t").get<double>();
    for (const auto& lj : j.at("links"))
      r.links.push_back({cuboid_from_json(lj), lj.at("speed").get<double>()});
    if (j.contains("tool")) r.tool = cuboid_from_json(j.at("tool"));
    log.records.push_back(std::move(r));
  }
  return log;
}

// ---------------------------------------------------------------------------
// Decision log (CSV)
// ---------------------------------------------------------------------------

struct DecisionRow {
  std::int64_t tick = 0;
  SafetyDecision decision;
};

inline void write_decision_log(const std::filesystem::path& path,
                               std::span<const DecisionRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open decision log for writing: " + path.string());
  out << "tick,stop_ratio,slowdown_ratio,mode,speed_ratio\n";
  for (const auto& r : rows) {
    out << r.tick << ',' << format_double(r.decision.stop_ratio) << ','
        << format_double(r.decision.slowdown_ratio) << ',' << to_string(r.decision.mode)
        << ',' << format_double(speed_ratio(r.decision.mode)) << '\n';
  }
}

inline std::vector<DecisionRow> read_decision_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open decision log: " + path.string());
  std::vector<DecisionRow> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 5) throw std::runtime_error("bad decision row: " + line);
    DecisionRow r;
    r.tick = std::stoll(f[0]);
    r.decision.stop_ratio = parse_double(f[1]);
    r.decision.slowdown_ratio = parse_double(f[2]);
    r.decision.mode = f[3] == "normal"     ? SpeedMode::Normal
                      : f[3] == "slowdown" ? SpeedMode::Slowdown
                                           : SpeedMode::Stop;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Event and cycle logs (CSV)
// ---------------------------------------------------------------------------

inline void write_event_log(const std::filesystem::path& path,
                            std::span<const NodeEvent> events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open event log for writing: " + path.string());
  out << "cycle,node,start_tick,end_tick,outcome,retries\n";
  for (const auto& e : events)
    out << e.cycle << ',' << e.node << ',' << e.start_tick << ',' << e.end_tick << ','
        << (e.succeeded ? "success" : "failure") << ',' << e.retries << '\n';
}

inline void write_cycle_log(const std::filesystem::path& path,
                            std::span<const CycleRecord> cycles) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open cycle log for writing: " + path.string());
  out << "cycle,start_s,end_s,nominal_s,wall_s,paused_s,slowed_s,retries,outcome,failed_node\n";
  for (const auto& c : cycles) {
    int retries = 0;
    for (const auto& [node, n] : c.retries) retries += n;
    out << c.index << ',' << format_double(c.start_s) << ',' << format_double(c.end_s)
        << ',' << format_double(c.nominal_s) << ',' << format_double(c.wall_s) << ','
        << format_double(c.paused_s) << ',' << format_double(c.slowed_s) << ','
        << retries << ',' << (c.passed ? "pass" : "fail") << ',' << c.failed_node
        << '\n';
  }
}

inline std::vector<CycleRecord> read_cycle_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cycle log: " + path.string());
  std::vector<CycleRecord> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 10) throw std::runtime_error("bad cycle row: " + line);
    CycleRecord c;
    c.index = std::stoi(f[0]);
    c.start_s = parse_double(f[1]);
    c.end_s = parse_double(f[2]);
    c.nominal_s = parse_double(f[3]);
    c.wall_s = parse_double(f[4]);
    c.paused_s = parse_double(f[5]);
    c.slowed_s = parse_double(f[6]);
    c.passed = f[8] == "pass";
    c.failed_node = f[9];
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace workcell
