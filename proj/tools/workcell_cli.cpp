// Command-line front end: scenario runs, offline safety-strategy replays,
// throughput projections, kinetic-energy verification, scenario validation.
//
// Exit codes: 0 success, 1 runtime error, 2 usage/config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "workcell/analysis.hpp"
#include "workcell/scenario.hpp"
#include "workcell/sim.hpp"

namespace fs = std::filesystem;
using workcell::json;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

double parse_horizon(const std::string& text) {
  if (text.empty()) throw CLI::ValidationError("--horizon", "empty duration");
  double factor = 1.0;
  std::string num = text;
  switch (text.back()) {
    case 'h': factor = 3600.0; num.pop_back(); break;
    case 'm': factor = 60.0; num.pop_back(); break;
    case 's': num.pop_back(); break;
    default: break;
  }
  try {
    return std::stod(num) * factor;
  } catch (const std::exception&) {
    throw CLI::ValidationError("--horizon", "cannot parse duration: " + text);
  }
}

int cmd_simulate(const std::string& scenario_path, std::optional<double> duration,
                 std::optional<std::uint64_t> seed, const std::string& out_dir) {
  workcell::Scenario sc;
  try {
    sc = workcell::load_scenario(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (duration) sc.duration_s = *duration;
  if (seed) sc.seed = *seed;

  const auto issues = workcell::validate_scenario(sc);
  if (!issues.empty()) {
    std::cerr << "config error in " << scenario_path << ":\n";
    for (const auto& e : issues) std::cerr << "  - " << e << '\n';
    return kConfigError;
  }

  try {
    const auto result = workcell::run_simulation(sc, fs::path(out_dir));
    std::printf(
        "cycles=%d passed=%d pass_rate_ops=%.4f effective_takt_s=%.1f wall_s=%.1f\n",
        result.cycles_completed, result.cycles_passed, result.pass_rate_ops(),
        result.effective_takt_s(), result.wall_s);
    return kOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_replay(const std::string& scan_path, const std::string& motion_path,
               const std::string& strategies_csv, double margin,
               const std::string& out_path) {
  std::vector<workcell::ReplayStrategy> strategies;
  std::stringstream ss(strategies_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto s = workcell::replay_strategy_from_string(item);
    if (!s) {
      std::cerr << "config error: unknown strategy '" << item << "'\n";
      return kConfigError;
    }
    strategies.push_back(*s);
  }
  if (strategies.empty()) {
    std::cerr << "config error: no strategies given\n";
    return kConfigError;
  }
  if (!fs::exists(scan_path) || !fs::exists(motion_path)) {
    std::cerr << "config error: missing log file\n";
    return kConfigError;
  }

  try {
    const auto scans = workcell::read_scan_log(scan_path);
    const auto motion = workcell::read_motion_log(motion_path);
    const auto report =
        workcell::replay_compare(scans, motion, strategies, {margin});

    std::ostringstream csv;
    csv << "strategy,added_s,percent_increase\n";
    for (const auto& row : report.rows)
      csv << workcell::to_string(row.strategy) << ','
          << workcell::format_double(row.added_s) << ','
          << workcell::format_double(row.percent_increase) << '\n';
    if (out_path.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream out(out_path);
      out << csv.str();
    }
    return kOk;
  } catch (const std::runtime_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_project(const std::string& model_name, std::optional<double> takt,
                double horizon, const std::string& out_path) {
  workcell::TimingModel model;
  if (model_name == "human") model = workcell::TimingModel::human();
  else if (model_name == "robot") model = workcell::TimingModel::robot_alone();
  else if (model_name == "effective") model = workcell::TimingModel::effective();
  else {
    std::cerr << "config error: unknown model '" << model_name << "'\n";
    return kConfigError;
  }
  if (takt) model.takt_s = *takt;

  try {
    const auto series = workcell::project_shift(model, horizon);
    std::ostringstream csv;
    csv << "time_s,count\n";
    for (std::size_t s = 0; s < series.size(); ++s)
      csv << s << ',' << series[s] << '\n';
    if (out_path.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream out(out_path);
      out << csv.str();
    }
    return kOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

int cmd_energy(const std::string& arms_path, const std::string& out_path) {
  json j;
  try {
    std::ifstream in(arms_path);
    if (!in) throw std::runtime_error("cannot open " + arms_path);
    j = json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  std::vector<std::pair<std::string, double>> arms;
  for (const auto& [name, value] : j.items()) arms.emplace_back(name, value.get<double>());
  std::sort(arms.begin(), arms.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<workcell::KineticAssessment> report;
  try {
    report = workcell::kinetic_report(arms, workcell::EnergyLimitTable::sara_defaults());
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  std::printf("%-14s %9s", "Body Region", "Limit [J]");
  for (const auto& [arm, energy] : arms)
    std::printf("  | %s (T_r = %.3f J): ratio status", arm.c_str(), energy);
  std::printf("\n");
  for (const auto& entry : workcell::EnergyLimitTable::sara_defaults().entries) {
    std::printf("%-14s %9.2f", entry.region.c_str(), entry.limit_j);
    for (const auto& [arm, energy] : arms) {
      for (const auto& a : report)
        if (a.arm == arm && a.region == entry.region)
          std::printf("  | %26.2f %6s", a.ratio, a.safe ? "Safe" : "Unsafe");
    }
    std::printf("\n");
  }

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << "arm,region,energy_j,limit_j,ratio,status\n";
    for (const auto& a : report)
      out << a.arm << ',' << a.region << ',' << workcell::format_double(a.energy_j)
          << ',' << workcell::format_double(a.limit_j) << ','
          << workcell::format_double(a.ratio) << ',' << (a.safe ? "safe" : "unsafe")
          << '\n';
  }
  return kOk;
}

int cmd_validate(const std::string& scenario_path) {
  workcell::Scenario sc;
  try {
    sc = workcell::load_scenario(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto issues = workcell::validate_scenario(sc);
  if (issues.empty()) {
    std::cout << "ok\n";
    return kOk;
  }
  for (const auto& e : issues) std::cout << e << '\n';
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic collaborative-workcell simulator and safety monitor"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write logs");
  std::string sim_scenario, sim_out = "out";
  std::optional<double> sim_duration;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("scenario", sim_scenario, "Scenario JSON file")->required();
  simulate->add_option("--duration", sim_duration, "Override duration [s]");
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");
  simulate->add_option("--out", sim_out, "Output directory");

  // replay
  auto* replay = app.add_subcommand("replay", "Replay logs under safety strategies");
  std::string rp_scans, rp_motion, rp_out;
  std::string rp_strategies = "none,fixed_margin,fixed_zones,dynamic_spheres";
  double rp_margin = 0.2;
  replay->add_option("scans", rp_scans, "Scan replay file (JSONL)")->required();
  replay->add_option("motion", rp_motion, "Robot motion log (JSONL)")->required();
  replay->add_option("--strategies", rp_strategies, "Comma-separated strategy list");
  replay->add_option("--margin", rp_margin, "Fixed margin around the table [m]");
  replay->add_option("--out", rp_out, "Report CSV path (stdout when omitted)");

  // project
  auto* project = app.add_subcommand("project", "Cumulative throughput projection");
  std::string pj_model = "human", pj_horizon = "8h", pj_out;
  std::optional<double> pj_takt;
  project->add_option("--model", pj_model, "human | robot | effective")->required();
  project->add_option("--takt", pj_takt, "Override takt time [s]");
  project->add_option("--horizon", pj_horizon, "Horizon, e.g. 8h, 490m, 28800s");
  project->add_option("--out", pj_out, "Series CSV path (stdout when omitted)");

  // energy
  auto* energy = app.add_subcommand("energy", "Kinetic-energy limit verification");
  std::string en_arms, en_out;
  energy->add_option("arms", en_arms, "JSON map of arm name -> T_r [J]")->required();
  energy->add_option("--out", en_out, "Report CSV path");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  std::string va_scenario;
  validate->add_option("scenario", va_scenario, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kConfigError;
  }

  if (simulate->parsed()) {
    if (sim_duration && !(*sim_duration > 0.0)) {
      std::cerr << "config error: --duration must be > 0\n";
      return kConfigError;
    }
    return cmd_simulate(sim_scenario, sim_duration, sim_seed, sim_out);
  }
  if (replay->parsed()) return cmd_replay(rp_scans, rp_motion, rp_strategies, rp_margin, rp_out);
  if (project->parsed()) {
    double horizon = 0.0;
    try {
      horizon = parse_horizon(pj_horizon);
    } catch (const CLI::Error&) {
      std::cerr << "config error: cannot parse --horizon '" << pj_horizon << "'\n";
      return kConfigError;
    }
    return cmd_project(pj_model, pj_takt, horizon, pj_out);
  }
  if (energy->parsed()) return cmd_energy(en_arms, en_out);
  if (validate->parsed()) return cmd_validate(va_scenario);
  return kConfigError;
}
