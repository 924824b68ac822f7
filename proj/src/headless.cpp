#include "medevac/headless.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "medevac/policies.h"

namespace medevac {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

RunResult run_headless(const RunConfig& cfg) {
  if (!cfg.scenario) throw std::invalid_argument("run needs a scenario");
  std::shared_ptr<const Scenario> sc = cfg.scenario;
  if (cfg.duration) {
    if (!(*cfg.duration > 0)) throw std::invalid_argument("duration must be positive");
    auto copy = std::make_shared<Scenario>(*sc);
    copy->duration = *cfg.duration;
    sc = copy;
  }
  EngineOptions opts;
  opts.seed = cfg.seed;
  opts.scoring = cfg.scoring;
  opts.tick_seconds = cfg.tick_seconds;
  opts.checker = cfg.checker;
  opts.fold_check_every = cfg.fold_check_every;
  auto engine = std::make_unique<Engine>(sc, opts);

  std::vector<std::pair<std::string, std::unique_ptr<Policy>>> policies;
  for (const auto& [role, name] : cfg.policies) {
    if (!sc->find_role(role)) throw std::invalid_argument("unknown role '" + role + "'");
    policies.emplace_back(role, make_policy(name, engine->seed(), role));
  }

  const int ts = engine->world().tick_seconds;
  while (!engine->at_end()) {
    if ((engine->world().tick * ts) % kDecisionEpochSeconds == 0) {
      for (auto& [role, policy] : policies) {
        for (const auto& a : policy->decide(engine->world(), role)) engine->enqueue_action(a);
      }
    }
    engine->step();
  }
  engine->finish();

  RunResult r;
  r.score = score_screen(engine->events());
  r.breaches = engine->breaches();
  r.engine = std::move(engine);
  return r;
}

void write_archive(const Engine& engine, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  Json manifest = engine.manifest();
  manifest["format"] = kArchiveFormat;
  manifest["ended"] = engine.ended();
  write_text_file((root / "manifest.json").string(), manifest.dump(2) + "\n");
  write_text_file((root / "scenario.json").string(), serialize_scenario(engine.scenario()));
  write_text_file((root / "inputs.ndjson").string(), to_ndjson(engine.inputs()));
  write_text_file((root / "events.ndjson").string(), to_ndjson(engine.events()));
}

ReplayVerdict verify_archive(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  auto refuse = [](std::string why) { return ReplayVerdict{ReplayVerdict::Status::Refused, std::nullopt, std::move(why)}; };
  Json manifest;
  std::shared_ptr<const Scenario> sc;
  std::string recorded;
  std::vector<SimEvent> events;
  std::vector<InputRecord> inputs;
  try {
    manifest = Json::parse(read_text_file((root / "manifest.json").string()));
    if (manifest.value("format", std::string{}) != kArchiveFormat) return refuse("not a run archive");
    if (manifest.at("engine_version").get<std::string>() != kEngineVersion) {
      return refuse("archive engine version " + manifest.at("engine_version").get<std::string>() + " differs from " +
                    kEngineVersion);
    }
    sc = std::make_shared<const Scenario>(load_scenario(read_text_file((root / "scenario.json").string())));
    recorded = read_text_file((root / "events.ndjson").string());
    events = events_from_ndjson(recorded);
    inputs = inputs_from_ndjson(read_text_file((root / "inputs.ndjson").string()));
  } catch (const std::exception& e) {
    return refuse(e.what());
  }
  const std::string fingerprint = std::to_string(scenario_fingerprint(*sc));
  if (manifest.at("fingerprint").get<std::string>() != fingerprint) return refuse("scenario fingerprint mismatch");
  if (events.empty() || events.front().kind != ev::RunStarted) return refuse("event log does not start with RunStarted");
  const Json& start = events.front().data;
  if (start.value("engine_version", std::string{}) != kEngineVersion) return refuse("event log engine version mismatch");
  if (start.value("fingerprint", std::string{}) != fingerprint) return refuse("event log scenario mismatch");
  if (start.value("seed", std::string{}) != manifest.at("seed").get<std::string>()) return refuse("seed mismatch");

  EngineOptions opts;
  try {
    opts.seed = std::stoull(manifest.at("seed").get<std::string>());
    opts.tick_seconds = manifest.at("tick_seconds").get<int>();
    const auto mode = parse_scoring_mode(manifest.at("scoring").at("mode").get<std::string>());
    if (!mode) return refuse("unknown scoring mode");
    opts.scoring = ScoringMode{*mode, manifest.at("scoring").at("clamp_floor").get<double>()};
  } catch (const std::exception& e) {
    return refuse(e.what());
  }
  std::string replayed;
  try {
    const long until = manifest.at("tick").get<long>();
    const bool ended = manifest.value("ended", true);
    Engine e = Engine::replay(sc, opts, inputs, until, ended);
    replayed = to_ndjson(e.events());
  } catch (const std::exception& e) {
    return {ReplayVerdict::Status::Fail, std::nullopt, std::string("replay failed: ") + e.what()};
  }
  if (replayed == recorded) return {ReplayVerdict::Status::Pass, std::nullopt, "event log reproduced"};

  std::istringstream a(recorded);
  std::istringstream b(replayed);
  std::string la;
  std::string lb;
  long seq = 0;
  while (true) {
    const bool ha = static_cast<bool>(std::getline(a, la));
    const bool hb = static_cast<bool>(std::getline(b, lb));
    if (!ha && !hb) break;
    if (!ha || !hb || la != lb) break;
    ++seq;
  }
  return {ReplayVerdict::Status::Fail, seq, "event logs diverge at seq " + std::to_string(seq)};
}

}  // namespace medevac
