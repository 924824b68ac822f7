// medevac: batch runs, replay verification, debrief statistics, scenario
// validation and the multiplayer server.
//
// Exit codes: 0 pass, 1 invariant breach / failed verification, 2 usage.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "medevac/headless.h"
#include "medevac/policies.h"
#include "medevac/scoring.h"
#include "medevac/server.h"
#include "medevac/session.h"

namespace fs = std::filesystem;
using namespace medevac;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBreach = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};

std::vector<std::string> player_roles(const Scenario& sc) {
  std::vector<std::string> out;
  for (const auto& r : sc.roles) {
    if (!r.permissions.can_inject) out.push_back(r.name);
  }
  return out;
}

// "triage_greedy" or "all=triage_greedy" binds every player role; "fsmp=idle" one role.
std::map<std::string, std::string> resolve_policies(const Scenario& sc, const std::vector<std::string>& specs) {
  std::map<std::string, std::string> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    const std::string role = eq == std::string::npos ? "all" : spec.substr(0, eq);
    const std::string name = eq == std::string::npos ? spec : spec.substr(eq + 1);
    if (!is_policy_name(name)) throw UsageError("unknown policy '" + name + "'");
    if (role == "all") {
      for (const auto& r : player_roles(sc)) out[r] = name;
    } else if (sc.find_role(role)) {
      out[role] = name;
    } else {
      throw UsageError("unknown role '" + role + "'");
    }
  }
  return out;
}

std::vector<SimEvent> load_log(const std::string& log, const std::string& archive) {
  if (!archive.empty()) return events_from_ndjson(read_text_file((fs::path(archive) / "events.ndjson").string()));
  return events_from_ndjson(read_text_file(log));
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> policies;
  std::optional<double> duration;
  std::string out = "run-out";
  std::string scoring;
  bool checker = true;
  std::optional<int> tick_seconds;
  long fold_check = 0;
};

int cmd_run(const RunArgs& a) {
  auto sc = std::make_shared<const Scenario>(load_scenario_file(a.scenario));
  RunConfig cfg;
  cfg.scenario = sc;
  cfg.seed = a.seed;
  cfg.policies = resolve_policies(*sc, a.policies);
  cfg.duration = a.duration;
  cfg.tick_seconds = a.tick_seconds;
  cfg.checker = a.checker;
  cfg.fold_check_every = a.fold_check;
  if (!a.scoring.empty()) {
    const auto kind = parse_scoring_mode(a.scoring);
    if (!kind) throw UsageError("unknown scoring mode '" + a.scoring + "'");
    cfg.scoring = ScoringMode{*kind, sc->scoring.clamp_floor};
  }
  const RunResult r = run_headless(cfg);
  const fs::path out(a.out);
  write_archive(*r.engine, (out / "archive").string());
  write_debrief(r.engine->events(), (out / "debrief").string());
  Json score = to_json(r.score);
  score["seed"] = r.engine->seed();
  score["breaches"] = r.breaches;
  write_text_file((out / "score.json").string(), score.dump(2) + "\n");
  std::cout << score.dump() << "\n";
  for (const auto& b : r.breaches) std::cerr << "breach: " << b << "\n";
  return r.breaches.empty() ? kExitOk : kExitBreach;
}

int cmd_replay(const std::string& archive) {
  const ReplayVerdict v = verify_archive(archive);
  switch (v.status) {
    case ReplayVerdict::Status::Pass:
      std::cout << "PASS\n";
      return kExitOk;
    case ReplayVerdict::Status::Fail:
      std::cout << "FAIL at seq " << v.first_diff.value_or(-1) << ": " << v.message << "\n";
      return kExitBreach;
    case ReplayVerdict::Status::Refused:
      std::cout << "REFUSED: " << v.message << "\n";
      return kExitBreach;
  }
  return kExitBreach;
}

int cmd_stats(const std::string& log, const std::string& archive, const std::vector<std::string>& which) {
  if (log.empty() == archive.empty()) throw UsageError("stats needs exactly one of --log or --archive");
  const auto events = load_log(log, archive);
  auto tables = debrief_tables(events);
  tables["summary"] = debrief_summary(events).dump(2) + "\n";
  const std::vector<std::string> names = which.empty() ? std::vector<std::string>{"score"} : which;
  for (const auto& n : names) {
    if (!tables.count(n)) {
      std::string known;
      for (const auto& [k, _] : tables) known += (known.empty() ? "" : ", ") + k;
      throw UsageError("unknown statistic '" + n + "' (known: " + known + ")");
    }
  }
  for (const auto& n : names) {
    if (names.size() > 1) std::cout << "# " << n << "\n";
    std::cout << tables.at(n);
  }
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  Scenario sc;
  try {
    sc = load_scenario_file(path);
  } catch (const ScenarioError& e) {
    std::cout << "invalid: " << e.what() << "\n";
    return kExitBreach;
  }
  std::cout << "ok: " << sc.name << " (" << sc.map.nodes.size() << " nodes, " << sc.facilities.size()
            << " facilities, " << sc.platforms.size() << " platforms)\n";
  return kExitOk;
}

struct ServeArgs {
  std::string scenario;
  std::vector<std::string> teams;
  std::string host = "127.0.0.1";
  int port = 8765;
  int http_port = 8766;
  double speed = 1.0;
  std::string archive_dir = "archives";
  std::string session_id = "session";
  std::optional<std::uint64_t> seed;
};

std::vector<TeamRoster> parse_teams(const Scenario& sc, const std::vector<std::string>& specs) {
  std::vector<TeamRoster> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw UsageError("team must look like name=role1,role2");
    TeamRoster t{spec.substr(0, eq), {}};
    std::stringstream roles(spec.substr(eq + 1));
    for (std::string r; std::getline(roles, r, ',');) {
      if (!r.empty()) t.roles.push_back(r);
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) out.push_back({"blue", player_roles(sc)});
  return out;
}

int cmd_serve(const ServeArgs& a) {
  auto sc = std::make_shared<const Scenario>(load_scenario_file(a.scenario));
  SessionOptions so;
  so.engine.seed = a.seed;
  so.archive_dir = a.archive_dir;
  std::shared_ptr<Session> session;
  try {
    session = std::make_shared<Session>(a.session_id, sc, parse_teams(*sc, a.teams), so);
  } catch (const SessionError& e) {
    throw UsageError(e.what());
  }
  ServerOptions opts;
  opts.host = a.host;
  opts.ws_port = a.port;
  opts.http_port = a.http_port;
  opts.speed = a.speed;
  Server server(session, opts);
  server.start();
  std::cout << "websocket ws://" << a.host << ":" << server.ws_port() << "/\n"
            << "instructor http://" << a.host << ":" << server.http_port() << "/api\n"
            << "instructor token " << session->instructor_token() << "\n"
            << std::flush;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  for (const auto& p : session->archive_paths()) std::cout << "archive " << p << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Medical evacuation wargame engine"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario unpaced with scripted policies");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Master seed (defaults to the scenario seed)");
  run_cmd->add_option("--policy", run.policies, "POLICY or ROLE=POLICY; repeatable")->take_all();
  run_cmd->add_option("--duration", run.duration, "Run length in in-game minutes");
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--scoring", run.scoring, "linear_decay or as_printed");
  run_cmd->add_option("--tick-seconds", run.tick_seconds, "Tick quantum in in-game seconds");
  run_cmd->add_option("--fold-check", run.fold_check, "Compare state with a log fold every N ticks");
  run_cmd->add_flag("--checker,!--no-checker", run.checker, "Assert doctrine invariants every tick");

  std::string archive;
  auto* replay_cmd = app.add_subcommand("replay", "Re-execute an archive and compare the event log");
  replay_cmd->add_option("archive", archive, "Archive directory")->required()->check(CLI::ExistingDirectory);

  std::string log_path, stats_archive;
  std::vector<std::string> which;
  auto* stats_cmd = app.add_subcommand("stats", "Print debrief tables from an event log");
  stats_cmd->add_option("--log", log_path, "events.ndjson")->check(CLI::ExistingFile);
  stats_cmd->add_option("--archive", stats_archive, "Archive directory")->check(CLI::ExistingDirectory);
  stats_cmd->add_option("--which", which, "score, delays, delay_records, evac_times, patient_counts, positions, summary");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("--scenario", validate_path, "Scenario JSON")->required()->check(CLI::ExistingFile);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Host a multiplayer session");
  serve_cmd->add_option("--scenario", serve.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--team", serve.teams, "NAME=ROLE,ROLE; repeat for a second team");
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "WebSocket port")->capture_default_str();
  serve_cmd->add_option("--http-port", serve.http_port, "Instructor endpoint port")->capture_default_str();
  serve_cmd->add_option("--speed", serve.speed, "Clock multiplier on top of time compression")->capture_default_str();
  serve_cmd->add_option("--archive-dir", serve.archive_dir)->capture_default_str();
  serve_cmd->add_option("--session-id", serve.session_id)->capture_default_str();
  serve_cmd->add_option("--seed", serve.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*replay_cmd) return cmd_replay(archive);
    if (*stats_cmd) return cmd_stats(log_path, stats_archive, which);
    if (*validate_cmd) return cmd_validate(validate_path);
    if (*serve_cmd) return cmd_serve(serve);
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBreach;
  }
  return kExitUsage;
}
