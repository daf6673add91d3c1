#include "dream/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "dream/config.hpp"
#include "dream/logstore.hpp"
#include "dream/pilots.hpp"
#include "dream/server.hpp"
#include "dream/task_metrics.hpp"
#include "dream/tlx_stats.hpp"
#include "dream/version.hpp"

namespace dream::cli {
namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

/// Installs SIGINT/SIGTERM handlers for the lifetime of the object.
class SignalScope {
 public:
  SignalScope() {
    g_interrupted = false;
    struct sigaction sa {};
    sa.sa_handler = on_signal;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGINT, &sa, &old_int_);
    sigaction(SIGTERM, &sa, &old_term_);
  }
  ~SignalScope() {
    sigaction(SIGINT, &old_int_, nullptr);
    sigaction(SIGTERM, &old_term_, nullptr);
  }

 private:
  struct sigaction old_int_ {};
  struct sigaction old_term_ {};
};

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string describe(const LogFormatError& e) {
  return e.line() ? "line " + std::to_string(e.line()) + ": " + e.what() : std::string(e.what());
}

std::uint16_t default_port() {
  if (const char* env = std::getenv("DREAM_PORT")) {
    try {
      const long v = std::stol(env);
      if (v >= 0 && v <= 65535) return static_cast<std::uint16_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 8765;
}

// ---- simulate ----

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "run.dreamlog";
  std::optional<double> duration;
  std::string format = "text";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  try {
    cfg = load_scenario(a.config);
    if (a.duration) {
      cfg.duration = *a.duration;
      cfg.validate();
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::uint64_t seed;
  if (a.seed) {
    seed = *a.seed;
  } else if (cfg.seed) {
    seed = *cfg.seed;
  } else {
    seed = fresh_seed();
    err << "seed: " << seed << "\n";
  }
  cfg.seed = seed;

  const ScenarioResult result = run_scenario(cfg, seed);
  try {
    write_log(result.log, std::filesystem::path(a.out));
  } catch (const std::exception& e) {
    err << "error: cannot write " << a.out << ": " << e.what() << "\n";
    return kExitFailure;
  }
  const auto journeys = segment_journeys(result.log, cfg.stop);
  const double span = result.log.samples.back().t - result.log.samples.front().t;
  if (a.format == "json") {
    out << Json{{"out", a.out},
                {"seed", seed},
                {"journeys", journeys.size()},
                {"duration_s", span},
                {"samples", result.log.samples.size()}}
               .dump()
        << "\n";
  } else {
    out << "wrote " << a.out << ": " << journeys.size() << " journeys completed, " << span << " s simulated, seed "
        << seed << "\n";
  }
  return kExitOk;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::vector<std::string> logs;
  std::optional<std::string> geometry;
  std::string format = "text";
  std::optional<std::string> compare;
  std::string aggregation = "per-journey";
};

std::string condition_of(const FlightLog& log) {
  const Json& m = log.header.manifest;
  if (m.contains("config") && m["config"].is_object() && m["config"].contains("mode") &&
      m["config"]["mode"].is_string())
    return m["config"]["mode"].get<std::string>();
  return "unknown";
}

StopParams stop_of(const FlightLog& log) {
  const Json& m = log.header.manifest;
  if (m.contains("config") && m["config"].is_object() && m["config"].contains("stop"))
    return stop_params_from_json(m["config"]["stop"], "manifest.config.stop");
  return {};
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<TaskGeometry> geometry;
  if (a.geometry) {
    try {
      std::ifstream in(*a.geometry);
      if (!in) throw ConfigError("<file>", "cannot open " + *a.geometry);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
      }
      geometry = j.contains("geometry") ? geometry_from_json(j["geometry"]) : geometry_from_json(j, "");
    } catch (const std::exception& e) {
      err << "geometry error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  std::pair<std::string, std::string> groups;
  if (a.compare) {
    const auto colon = a.compare->find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == a.compare->size()) {
      err << "--compare expects LABEL_A:LABEL_B\n";
      return kExitUsage;
    }
    groups = {a.compare->substr(0, colon), a.compare->substr(colon + 1)};
  }
  const AggregationMode mode = a.aggregation == "pooled" ? AggregationMode::Pooled : AggregationMode::PerJourney;

  bool failed = false;
  Json files = Json::array();
  std::vector<std::pair<std::string, JourneyReport>> columns;
  std::vector<JourneyReport> all;
  std::map<std::string, std::vector<JourneyReport>> by_condition;
  for (const std::string& path : a.logs) {
    Json entry{{"path", path}};
    try {
      FlightLog log = read_log(std::filesystem::path(path));
      if (geometry) log.header.geometry = *geometry;
      const std::string condition = condition_of(log);
      const JourneyReport report = analyze_log(log, stop_of(log), mode);
      entry["condition"] = condition;
      entry["report"] = to_json(report);
      columns.emplace_back(std::filesystem::path(path).stem().string(), report);
      all.push_back(report);
      by_condition[condition].push_back(report);
    } catch (const LogFormatError& e) {
      failed = true;
      err << path << ": " << describe(e) << "\n";
      entry["error"] = Json{{"line", e.line()}, {"message", e.what()}};
    } catch (const std::exception& e) {
      failed = true;
      err << path << ": " << e.what() << "\n";
      entry["error"] = Json{{"message", e.what()}};
    }
    files.push_back(std::move(entry));
  }

  Json doc{{"files", files}};
  std::optional<JourneyReport> overall;
  if (!all.empty()) {
    overall = merge_reports(all);
    doc["aggregate"] = to_json(*overall);
  } else {
    doc["aggregate"] = nullptr;
  }
  std::optional<std::pair<JourneyReport, JourneyReport>> compared;
  std::optional<ConditionComparison> comparison;
  if (a.compare) {
    auto ga = by_condition.find(groups.first);
    auto gb = by_condition.find(groups.second);
    if (ga == by_condition.end() || gb == by_condition.end()) {
      failed = true;
      err << "compare: no analyzable logs for condition '"
          << (ga == by_condition.end() ? groups.first : groups.second) << "'\n";
    } else {
      compared = std::make_pair(merge_reports(ga->second), merge_reports(gb->second));
      comparison = compare_conditions(compared->first, compared->second, groups.first, groups.second);
      doc["conditions"] = Json{{groups.first, to_json(compared->first)}, {groups.second, to_json(compared->second)}};
      doc["comparison"] = to_json(*comparison);
    }
  }

  if (a.format == "json") {
    out << doc.dump(2) << "\n";
  } else if (compared) {
    out << format_report_table({{groups.first, compared->first}, {groups.second, compared->second}});
    auto line = [&](const char* name, const MetricComparison& m) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%-12s difference %+.4f", name, m.difference);
      out << buf;
      if (m.ratio) {
        std::snprintf(buf, sizeof buf, "  ratio %.3f", *m.ratio);
        out << buf;
      }
      out << "\n";
    };
    out << "\n" << groups.first << " vs " << groups.second << ":\n";
    line("MLE (m)", comparison->mle);
    line("MYE (rad)", comparison->mye);
    line("MCT (s)", comparison->mct);
  } else if (!columns.empty()) {
    if (columns.size() > 1) columns.emplace_back("all", *overall);
    out << format_report_table(columns);
  }
  return failed ? kExitFailure : kExitOk;
}

// ---- tlx ----

struct TlxArgs {
  std::string csv;
  double alpha = 0.05;
  std::string format = "text";
};

int cmd_tlx(const TlxArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) {
    err << "--alpha must lie in (0, 1)\n";
    return kExitUsage;
  }
  std::ifstream in(a.csv);
  if (!in) {
    err << "error: cannot open " << a.csv << "\n";
    return kExitFailure;
  }
  std::vector<tlx::TestResult> rows;
  try {
    const auto responses = tlx::read_tlx_csv(in);
    rows = tlx::run_hypotheses(responses, a.alpha);
  } catch (const tlx::UnpairedParticipantError& e) {
    err << "error: participant '" << e.participant() << "': " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << a.csv << ": " << e.what() << "\n";
    return kExitFailure;
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].error) err << "warning: H" << i << " (" << tlx::label(rows[i].criterion) << "): " << *rows[i].error << "\n";
  if (a.format == "json")
    out << tlx::to_json(rows, a.alpha).dump(2) << "\n";
  else
    out << tlx::format_hypothesis_table(rows);
  return kExitOk;
}

// ---- serve / replay ----

struct ServeArgs {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
  std::optional<std::string> mode;
  std::optional<std::string> config;
  std::optional<std::string> record_dir;
  std::optional<std::string> ui_dir;
  std::optional<std::uint64_t> seed;
  bool no_pacing = false;
};

int host_until_interrupted(service::ServerOptions options, std::ostream& out, std::ostream& err, bool exit_when_done) {
  SignalScope signals;
  const std::string host = options.host;
  service::TeleopServer server(std::move(options));
  try {
    server.start();
  } catch (const std::system_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  out << "listening on " << host << ":" << server.port() << std::endl;
  while (!g_interrupted) {
    if (exit_when_done && server.replay_finished()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  server.stop();
  for (const auto& p : server.recorded_logs()) out << "recorded " << p.string() << "\n";
  out << "stopped" << std::endl;
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  service::ServerOptions options;
  options.host = a.host;
  options.port = a.port;
  options.pacing = !a.no_pacing;
  try {
    ScenarioConfig cfg;
    if (a.config) cfg = load_scenario(*a.config);
    if (a.mode) cfg.world.mode = parse_mode(*a.mode, "--mode");
    cfg.world.validate();
    options.session.world = cfg.world;
    options.session.seed = a.seed ? *a.seed : cfg.seed.value_or(0);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (a.record_dir) options.session.record_dir = std::filesystem::path(*a.record_dir);
  options.session.wall_clock = service::utc_now_iso8601;
  if (a.ui_dir) options.ui_dir = std::filesystem::path(*a.ui_dir);
  return host_until_interrupted(std::move(options), out, err, false);
}

struct ReplayArgs {
  std::string log;
  double speed = 1.0;
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
  std::optional<std::string> ui_dir;
  bool exit_when_done = false;
};

int cmd_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.speed > 0.0)) {
    err << "--speed must be positive\n";
    return kExitUsage;
  }
  service::ServerOptions options;
  options.host = a.host;
  options.port = a.port;
  try {
    options.replay_log = read_log(std::filesystem::path(a.log));
  } catch (const LogFormatError& e) {
    err << a.log << ": " << describe(e) << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << a.log << ": " << e.what() << "\n";
    return kExitFailure;
  }
  if (options.replay_log->samples.empty()) {
    err << a.log << ": log has no samples\n";
    return kExitFailure;
  }
  options.replay_speed = a.speed;
  if (a.ui_dir) options.ui_dir = std::filesystem::path(*a.ui_dir);
  return host_until_interrupted(std::move(options), out, err, a.exit_when_done);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exocentric UAV teleoperation: simulation, analysis and live sessions"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scripted-pilot scenario and write a flight log");
  simulate->add_option("config", sim.config, "Scenario config (JSON)")->required();
  simulate->add_option("--seed", sim.seed, "Master seed; generated and printed when omitted");
  simulate->add_option("--out,-o", sim.out, "Output .dreamlog path")->capture_default_str();
  simulate->add_option("--duration", sim.duration, "Override the scenario duration (s)");
  simulate->add_option("--format", sim.format, "Summary format")->check(CLI::IsMember({"text", "json"}));

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Compute MLE/MYE/MCT journey metrics from flight logs");
  analyze->add_option("logs", an.logs, "Flight logs")->required();
  analyze->add_option("--geometry", an.geometry, "Geometry JSON overriding the log headers");
  analyze->add_option("--format", an.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  analyze->add_option("--compare", an.compare, "Compare two conditions, e.g. dream:joystick");
  analyze->add_option("--aggregation", an.aggregation, "Averaging across journeys")
      ->check(CLI::IsMember({"per-journey", "pooled"}));

  TlxArgs tx;
  auto* tlx_cmd = app.add_subcommand("tlx", "Paired t-tests on NASA-TLX responses");
  tlx_cmd->add_option("csv", tx.csv, "Responses CSV")->required();
  tlx_cmd->add_option("--alpha", tx.alpha, "Significance level")->capture_default_str();
  tlx_cmd->add_option("--format", tx.format, "Output format")->check(CLI::IsMember({"text", "json"}));

  ServeArgs sv;
  sv.port = default_port();
  auto* serve = app.add_subcommand("serve", "Host live teleoperation sessions");
  serve->add_option("--port", sv.port, "TCP port (default from DREAM_PORT, else 8765; 0 = ephemeral)");
  serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve->add_option("--mode", sv.mode, "Control mode")->check(CLI::IsMember({"dream", "joystick"}));
  serve->add_option("--config", sv.config, "Scenario config supplying world parameters");
  serve->add_option("--record-dir", sv.record_dir, "Write one .dreamlog per session here");
  serve->add_option("--ui-dir", sv.ui_dir, "Serve this static UI bundle over HTTP");
  serve->add_option("--seed", sv.seed, "Seed for link noise");
  serve->add_flag("--no-pacing", sv.no_pacing, "Step sessions as fast as possible");

  ReplayArgs rp;
  rp.port = default_port();
  auto* replay = app.add_subcommand("replay", "Re-emit a recorded log over the session protocol");
  replay->add_option("log", rp.log, "Flight log")->required();
  replay->add_option("--speed", rp.speed, "Playback speed factor")->capture_default_str();
  replay->add_option("--port", rp.port, "TCP port (default from DREAM_PORT, else 8765; 0 = ephemeral)");
  replay->add_option("--host", rp.host, "Bind address")->capture_default_str();
  replay->add_option("--ui-dir", rp.ui_dir, "Serve this static UI bundle over HTTP");
  replay->add_flag("--exit-when-done", rp.exit_when_done, "Exit after the last frame is sent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*simulate) return cmd_simulate(sim, out, err);
  if (*analyze) return cmd_analyze(an, out, err);
  if (*tlx_cmd) return cmd_tlx(tx, out, err);
  if (*serve) return cmd_serve(sv, out, err);
  if (*replay) return cmd_replay(rp, out, err);
  return kExitUsage;
}

}  // namespace dream::cli
