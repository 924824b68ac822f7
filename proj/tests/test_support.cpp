#include "test_support.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <unistd.h>

namespace medevac::fixtures {

std::string scenario_path(const std::string& file) { return std::string(MEDEVAC_SCENARIO_DIR) + "/" + file; }

std::shared_ptr<const Scenario> bundled(const std::string& name) {
  return std::make_shared<const Scenario>(load_scenario_file(scenario_path(name + ".json")));
}

Json tiny_json() {
  Json j = Json::parse(R"({
    "schema": "medevac-scenario/1",
    "name": "tiny-line",
    "rng_seed": 11,
    "duration_min": 240,
    "tick_seconds": 1,
    "time_compression": 0.1,
    "day_night": {"start_time_of_day_min": 600, "dawn_min": 360, "dusk_min": 1140, "cycle_min": 1440,
                  "transition_min": 60, "night_visibility": 0.4, "night_air_speed_factor": 1.0},
    "observation": {"radius_km": 15, "requests_reveal_precedence": true},
    "precedence": {"urgent": {"p_max": 10, "e_s_min": 60}, "priority": {"p_max": 8, "e_s_min": 240}},
    "mortality": {"e_s1_min": 60, "e_s2_min": 240},
    "scoring": {"mode": "linear_decay", "clamp_floor": 0},
    "rules": {"load_litter_min": 2, "load_ambulatory_min": 1, "transfer_per_patient_min": 1,
              "dwell_role1_min": 15, "dwell_role2_min": 30},
    "map": {
      "nodes": [
        {"id": "ccp", "pos": [0, 0], "kind": "land"},
        {"id": "jct", "pos": [10, 0], "kind": "land"},
        {"id": "bas", "pos": [20, 0], "kind": "land"},
        {"id": "hill", "pos": [20, 12], "kind": "land"},
        {"id": "port", "pos": [30, 0], "kind": "port"},
        {"id": "sea", "pos": [40, 0], "kind": "water"},
        {"id": "r3", "pos": [60, 0], "kind": "water"}
      ],
      "roads": [
        {"a": "ccp", "b": "jct", "length_km": 10, "ground_passable": true},
        {"a": "jct", "b": "bas", "length_km": 10, "ground_passable": true},
        {"a": "bas", "b": "port", "length_km": 10, "ground_passable": true},
        {"a": "bas", "b": "hill", "length_km": 12, "ground_passable": false}
      ],
      "sea_lanes": [
        {"a": "port", "b": "sea", "length_km": 10, "ground_passable": true},
        {"a": "sea", "b": "r3", "length_km": 20, "ground_passable": true}
      ]
    },
    "facilities": [
      {"id": "CCP1", "role": "ccp", "node": "ccp", "mobile": false, "active": true},
      {"id": "BAS", "role": "role1", "node": "bas", "mobile": false, "active": true, "bed_capacity": 40, "pad_slots": 1},
      {"id": "R2", "role": "role2", "node": "port", "mobile": false, "active": true, "bed_capacity": 40, "pad_slots": 1},
      {"id": "R3", "role": "role3", "node": "r3", "mobile": false, "active": true, "pad_slots": 1}
    ],
    "ccp_streams": [
      {"ccp": "CCP1", "mean_wave_interval_min": 30, "mean_wave_size": 2.0, "rate_multiplier": 1.0,
       "urgent_fraction": 0.5, "litter_fraction": 0.5, "activation_windows": []}
    ],
    "platform_specs": [
      {"id": "ground", "class": "ground_vehicle", "cruise_speed_kmh": 60, "litter_capacity": 2,
       "ambulatory_capacity": 4, "conversion": 2, "medevac": true, "callsign_prefix": "GA"},
      {"id": "heli", "class": "rotary_wing", "cruise_speed_kmh": 240, "litter_capacity": 2,
       "ambulatory_capacity": 4, "conversion": 2, "medevac": true, "callsign_prefix": "AIR"}
    ],
    "platforms": [
      {"id": "GA-1", "spec": "ground", "start": "BAS", "owner": "medic"},
      {"id": "AIR-1", "spec": "heli", "start": "R2", "owner": "air"}
    ],
    "roles": [
      {"name": "medic", "owned_platforms": ["GA-1"], "owned_facilities": [],
       "permissions": {"can_inject": false, "sees_all": false, "can_place_sites": true}, "pickup_from": ["ccp"]},
      {"name": "air", "owned_platforms": ["AIR-1"], "owned_facilities": [],
       "permissions": {"can_inject": false, "sees_all": false, "can_place_sites": false},
       "pickup_from": ["role1", "role2"]},
      {"name": "instructor", "owned_platforms": [], "owned_facilities": [],
       "permissions": {"can_inject": true, "sees_all": true, "can_place_sites": true}, "pickup_from": []}
    ],
    "adversary": {"enabled": false, "first_after_min": 60, "mean_interval_min": 120, "radius_km": [3, 6],
                  "duration_min": [30, 60], "affects": ["ground_vehicle"], "corridors": []},
    "scheduled_rings": [],
    "casevac": {"spec": "heli", "staging": "R2", "window_min": 60}
  })");
  return j;
}

std::shared_ptr<const Scenario> tiny(const std::function<void(Json&)>& edit) {
  Json j = tiny_json();
  if (edit) edit(j);
  return std::make_shared<const Scenario>(load_scenario(j.dump()));
}

RunResult run_all(std::shared_ptr<const Scenario> sc, std::uint64_t seed, const std::string& policy, bool checker,
                  std::optional<int> tick_seconds) {
  RunConfig cfg;
  cfg.scenario = sc;
  cfg.seed = seed;
  cfg.checker = checker;
  cfg.tick_seconds = tick_seconds;
  for (const auto& r : sc->roles) {
    if (!r.permissions.can_inject) cfg.policies[r.name] = policy;
  }
  return run_headless(cfg);
}

std::vector<SimEvent> of_kind(const std::vector<SimEvent>& log, std::string_view kind) {
  std::vector<SimEvent> out;
  for (const auto& e : log) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

ActionRequest act(const std::string& actor, const std::string& platform, Verb verb, const std::string& target,
                  std::vector<PatientId> patients) {
  ActionRequest a;
  a.actor = actor;
  a.platform = platform;
  a.verb = verb;
  a.target = target;
  a.patients = std::move(patients);
  return a;
}

bool step_until(Engine& e, const std::function<bool()>& done, long max_ticks) {
  for (long i = 0; i < max_ticks; ++i) {
    if (done()) return true;
    if (e.at_end()) return false;
    e.step();
  }
  return done();
}

std::shared_ptr<const Scenario> exchange_theatre() {
  return tiny([](Json& j) {
    j["facilities"].push_back({{"id", "AXP1"}, {"role", "axp"}, {"node", "jct"}, {"mobile", false}, {"active", true}});
    j["platform_specs"][1]["litter_capacity"] = 6;
    j["platform_specs"][1]["ambulatory_capacity"] = 6;
    j["ccp_streams"][0]["mean_wave_interval_min"] = 1e7;
    j["ccp_streams"][0]["urgent_fraction"] = 0.0;
    j["duration_min"] = 600;
  });
}

namespace {

MeanCI naive_mean_ci(const std::vector<double>& xs) {
  MeanCI m;
  m.n = static_cast<long>(xs.size());
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.half_width = 1.96 * std::sqrt(ss / static_cast<double>(m.n - 1)) / std::sqrt(static_cast<double>(m.n));
  return m;
}

}  // namespace

FoldedStats single_pass_fold(const std::vector<SimEvent>& log) {
  struct Tracked {
    Precedence prec = Precedence::Priority;
    double t0 = 0.0;
    bool waiting = false;
    std::string node;
    double since = 0.0;
  };
  FoldedStats out;
  double p_max[2] = {10.0, 8.0};
  double e_s[2] = {60.0, 240.0};
  bool as_printed = false;
  double floor = 0.0;
  double end = 0.0;
  std::map<PatientId, Tracked> pts;
  for (const auto& e : log) {
    const Json& d = e.data;
    end = std::max(end, e.time);
    if (e.kind == "RunStarted") {
      if (d.contains("precedence")) {
        for (int k = 0; k < 2; ++k) {
          const Json& spec = d["precedence"][k == 0 ? "urgent" : "priority"];
          p_max[k] = spec["p_max"];
          e_s[k] = spec["e_s"];
        }
      }
      if (d.contains("scoring")) {
        as_printed = d["scoring"]["mode"] == "as_printed";
        floor = d["scoring"]["clamp_floor"];
      }
    } else if (e.kind == "PatientSpawned") {
      Tracked t;
      t.prec = d["precedence"] == "urgent" ? Precedence::Urgent : Precedence::Priority;
      t.t0 = d["t0"];
      t.waiting = true;
      t.node = d["ccp"];
      t.since = e.time;
      pts[d["patient"].get<PatientId>()] = t;
      ++out.score.spawned;
    } else if (e.kind == "Treated") {
      Tracked& t = pts.at(d["patient"].get<PatientId>());
      t.waiting = true;
      t.node = d["site"];
      t.since = e.time;
    } else if (e.kind == "Loaded") {
      for (const auto& entry : d["patients"]) {
        const auto id = entry["patient"].get<PatientId>();
        Tracked& t = pts.at(id);
        if (!t.waiting || t.node != d["site"]) continue;
        out.delays.records.push_back({id, t.node, t.prec, e.time - t.since, false});
        t.waiting = false;
      }
    } else if (e.kind == "Died") {
      const auto id = d["patient"].get<PatientId>();
      Tracked& t = pts.at(id);
      ++out.score.deaths;
      out.score.score += -10.0;
      if (t.waiting) out.delays.records.push_back({id, t.node, t.prec, e.time - t.since, true});
      t.waiting = false;
    } else if (e.kind == "DeliveredRole3") {
      ++out.score.saves;
    } else if (e.kind == "Unloaded" && d["role"] == "role2") {
      for (const auto& idj : d["patients"]) {
        const auto id = idj.get<PatientId>();
        const Tracked& t = pts.at(id);
        const int k = t.prec == Precedence::Urgent ? 0 : 1;
        const double dt = e.time - t.t0;
        const double raw = as_printed ? p_max[k] * (1.0 - e_s[k] / dt) : p_max[k] * (1.0 - dt / e_s[k]);
        out.score.score += raw < floor ? floor : raw;
        out.evac.records.push_back({id, t.prec, dt});
      }
    }
  }
  out.score.alive = out.score.spawned - out.score.saves - out.score.deaths;
  for (const auto& [id, t] : pts) {
    if (t.waiting) out.delays.records.push_back({id, t.node, t.prec, end - t.since, true});
  }

  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, long>> groups;
  for (const auto& r : out.delays.records) {
    auto& g = groups[{r.node, r.precedence == Precedence::Urgent ? 0 : 1}];
    if (r.censored) ++g.second;
    else g.first.push_back(r.delay);
  }
  for (const auto& [key, g] : groups) {
    out.delays.groups.push_back(
        {key.first, key.second == 0 ? Precedence::Urgent : Precedence::Priority, naive_mean_ci(g.first), g.second});
  }
  for (int k = 0; k < 2; ++k) {
    const Precedence p = k == 0 ? Precedence::Urgent : Precedence::Priority;
    std::vector<double> xs;
    long ok = 0;
    for (const auto& r : out.evac.records) {
      if (r.precedence != p) continue;
      xs.push_back(r.evac_time);
      ok += r.evac_time <= e_s[k];
    }
    if (!xs.empty()) out.evac.groups.push_back({p, e_s[k], naive_mean_ci(xs), ok});
  }
  return out;
}

std::string temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() /
                     ("medevac-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace medevac::fixtures
