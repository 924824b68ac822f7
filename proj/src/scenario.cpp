#include "medevac/scenario.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace medevac {
namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Precedence, 2> kPrecedenceNames{{{Precedence::Urgent, "urgent"},
                                                     {Precedence::Priority, "priority"}}};
constexpr NameTable<PatientKind, 2> kKindNames{{{PatientKind::Litter, "litter"},
                                                {PatientKind::Ambulatory, "ambulatory"}}};
constexpr NameTable<FacilityRole, 6> kRoleNames{{{FacilityRole::CCP, "ccp"},
                                                 {FacilityRole::Role1, "role1"},
                                                 {FacilityRole::Role2, "role2"},
                                                 {FacilityRole::Role3, "role3"},
                                                 {FacilityRole::AXP, "axp"},
                                                 {FacilityRole::HLZ, "hlz"}}};
constexpr NameTable<PlatformClass, 4> kClassNames{{{PlatformClass::RotaryWing, "rotary_wing"},
                                                   {PlatformClass::TiltRotor, "tilt_rotor"},
                                                   {PlatformClass::GroundVehicle, "ground_vehicle"},
                                                   {PlatformClass::Ship, "ship"}}};
constexpr NameTable<NodeKind, 3> kNodeKindNames{{{NodeKind::Land, "land"},
                                                 {NodeKind::Port, "port"},
                                                 {NodeKind::Water, "water"}}};
constexpr NameTable<ScoringModeKind, 2> kScoringNames{{{ScoringModeKind::LinearDecay, "linear_decay"},
                                                       {ScoringModeKind::AsPrinted, "as_printed"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E e) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view s) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Field-path aware reader

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ScenarioError(ScenarioError::Kind::Parse, path, path + ": " + msg);
}

std::string join(const std::string& path, std::string_view key) {
  if (path.empty()) return std::string(key);
  return path + "." + std::string(key);
}

std::string join(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void expect_object(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(join(path, key), "unknown field");
  }
}

const Json* member(const Json& j, std::string_view key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const Json& j, std::string_view key, const std::string& path) {
  const Json* v = member(j, key);
  if (!v) fail(join(path, key), "missing required field");
  if (!v->is_number()) fail(join(path, key), "expected a number");
  return v->get<double>();
}

double get_number_or(const Json& j, std::string_view key, const std::string& path, double def) {
  if (!member(j, key)) return def;
  return get_number(j, key, path);
}

int get_int(const Json& j, std::string_view key, const std::string& path) {
  const Json* v = member(j, key);
  if (!v) fail(join(path, key), "missing required field");
  if (!v->is_number_integer()) fail(join(path, key), "expected an integer");
  return v->get<int>();
}

int get_int_or(const Json& j, std::string_view key, const std::string& path, int def) {
  if (!member(j, key)) return def;
  return get_int(j, key, path);
}

std::optional<int> get_opt_int(const Json& j, std::string_view key, const std::string& path) {
  const Json* v = member(j, key);
  if (!v || v->is_null()) return std::nullopt;
  return get_int(j, key, path);
}

bool get_bool_or(const Json& j, std::string_view key, const std::string& path, bool def) {
  const Json* v = member(j, key);
  if (!v) return def;
  if (!v->is_boolean()) fail(join(path, key), "expected a boolean");
  return v->get<bool>();
}

std::string get_string(const Json& j, std::string_view key, const std::string& path) {
  const Json* v = member(j, key);
  if (!v) fail(join(path, key), "missing required field");
  if (!v->is_string()) fail(join(path, key), "expected a string");
  return v->get<std::string>();
}

std::string get_string_or(const Json& j, std::string_view key, const std::string& path, std::string def) {
  if (!member(j, key)) return def;
  return get_string(j, key, path);
}

const Json& get_array(const Json& j, std::string_view key, const std::string& path) {
  static const Json kEmpty = Json::array();
  const Json* v = member(j, key);
  if (!v) return kEmpty;
  if (!v->is_array()) fail(join(path, key), "expected an array");
  return *v;
}

std::vector<std::string> get_strings(const Json& j, std::string_view key, const std::string& path) {
  std::vector<std::string> out;
  const Json& arr = get_array(j, key, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) fail(join(join(path, key), i), "expected a string");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

template <typename E, typename Parse>
E get_enum(const Json& j, std::string_view key, const std::string& path, Parse parse) {
  std::string s = get_string(j, key, path);
  auto v = parse(s);
  if (!v) fail(join(path, key), "unknown value '" + s + "'");
  return *v;
}

Vec2 read_vec2(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(path, "expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json write_vec2(Vec2 v) { return Json::array({v.x, v.y}); }

TimeWindow read_window(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(path, "expected [start, end]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json write_window(const TimeWindow& w) { return Json::array({w.start, w.end}); }

std::vector<PlatformClass> read_classes(const Json& j, std::string_view key, const std::string& path,
                                        std::vector<PlatformClass> def) {
  if (!member(j, key)) return def;
  std::vector<PlatformClass> out;
  const Json& arr = get_array(j, key, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = join(join(path, key), i);
    if (!arr[i].is_string()) fail(p, "expected a string");
    auto c = parse_platform_class(arr[i].get<std::string>());
    if (!c) fail(p, "unknown platform class");
    out.push_back(*c);
  }
  return out;
}

Json write_classes(const std::vector<PlatformClass>& v) {
  Json out = Json::array();
  for (auto c : v) out.push_back(to_string(c));
  return out;
}

MapEdge read_edge(const Json& j, const std::string& path, const WorldMap& map) {
  expect_object(j, path, {"a", "b", "length_km", "ground_passable"});
  MapEdge e;
  e.a = get_string(j, "a", path);
  e.b = get_string(j, "b", path);
  if (member(j, "length_km")) {
    e.length = get_number(j, "length_km", path);
  } else {
    const MapNode* na = map.find_node(e.a);
    const MapNode* nb = map.find_node(e.b);
    e.length = (na && nb) ? distance(na->pos, nb->pos) : 0.0;
  }
  e.ground_passable = get_bool_or(j, "ground_passable", path, true);
  return e;
}

Json write_edge(const MapEdge& e) {
  return Json{{"a", e.a}, {"b", e.b}, {"length_km", e.length}, {"ground_passable", e.ground_passable}};
}

ThreatRing read_ring(const Json& j, const std::string& path) {
  expect_object(j, path, {"id", "center", "radius_km", "affects", "window"});
  ThreatRing r;
  r.id = get_string(j, "id", path);
  const Json* c = member(j, "center");
  if (!c) fail(join(path, "center"), "missing required field");
  r.center = read_vec2(*c, join(path, "center"));
  r.radius = get_number(j, "radius_km", path);
  r.affects = read_classes(j, "affects", path,
                          {PlatformClass::GroundVehicle, PlatformClass::RotaryWing, PlatformClass::TiltRotor});
  const Json* w = member(j, "window");
  if (!w) fail(join(path, "window"), "missing required field");
  r.window = read_window(*w, join(path, "window"));
  return r;
}

Scenario scenario_from_json(const Json& root) {
  expect_object(root, "",
                {"schema", "name", "rng_seed", "duration_min", "tick_seconds", "time_compression", "day_night",
                 "observation", "precedence", "mortality", "scoring", "rules", "map", "facilities", "ccp_streams",
                 "platform_specs", "platforms", "roles", "adversary", "scheduled_rings", "casevac"});
  Scenario s;
  s.schema = get_string(root, "schema", "");
  s.name = get_string(root, "name", "");
  {
    const Json* seed = member(root, "rng_seed");
    if (seed) {
      if (!seed->is_number_unsigned() && !seed->is_number_integer()) fail("rng_seed", "expected an integer");
      s.rng_seed = seed->get<std::uint64_t>();
    }
  }
  s.duration = get_number_or(root, "duration_min", "", s.duration);
  s.tick_seconds = get_int_or(root, "tick_seconds", "", s.tick_seconds);
  s.time_compression = get_number_or(root, "time_compression", "", s.time_compression);

  if (const Json* dn = member(root, "day_night")) {
    const std::string p = "day_night";
    expect_object(*dn, p,
                  {"start_time_of_day_min", "dawn_min", "dusk_min", "cycle_min", "transition_min",
                   "night_visibility", "night_air_speed_factor"});
    auto& d = s.day_night;
    d.start_time_of_day = get_number_or(*dn, "start_time_of_day_min", p, d.start_time_of_day);
    d.dawn = get_number_or(*dn, "dawn_min", p, d.dawn);
    d.dusk = get_number_or(*dn, "dusk_min", p, d.dusk);
    d.cycle = get_number_or(*dn, "cycle_min", p, d.cycle);
    d.transition = get_number_or(*dn, "transition_min", p, d.transition);
    d.night_visibility = get_number_or(*dn, "night_visibility", p, d.night_visibility);
    d.night_air_speed_factor = get_number_or(*dn, "night_air_speed_factor", p, d.night_air_speed_factor);
  }
  if (const Json* ob = member(root, "observation")) {
    expect_object(*ob, "observation", {"radius_km", "requests_reveal_precedence"});
    s.observation.radius = get_number_or(*ob, "radius_km", "observation", s.observation.radius);
    s.observation.requests_reveal_precedence =
        get_bool_or(*ob, "requests_reveal_precedence", "observation", s.observation.requests_reveal_precedence);
  }
  if (const Json* pr = member(root, "precedence")) {
    expect_object(*pr, "precedence", {"urgent", "priority"});
    auto read_spec = [&](std::string_view key, PrecedenceSpec& spec) {
      const Json* v = member(*pr, key);
      if (!v) return;
      const std::string p = join("precedence", key);
      expect_object(*v, p, {"p_max", "e_s_min"});
      spec.p_max = get_number_or(*v, "p_max", p, spec.p_max);
      spec.e_s = get_number_or(*v, "e_s_min", p, spec.e_s);
    };
    read_spec("urgent", s.precedence.urgent);
    read_spec("priority", s.precedence.priority);
  }
  if (const Json* mo = member(root, "mortality")) {
    expect_object(*mo, "mortality", {"e_s1_min", "e_s2_min"});
    s.mortality.e_s1 = get_number_or(*mo, "e_s1_min", "mortality", s.mortality.e_s1);
    s.mortality.e_s2 = get_number_or(*mo, "e_s2_min", "mortality", s.mortality.e_s2);
  }
  if (const Json* sc = member(root, "scoring")) {
    expect_object(*sc, "scoring", {"mode", "clamp_floor"});
    if (member(*sc, "mode")) {
      s.scoring.kind = get_enum<ScoringModeKind>(*sc, "mode", "scoring", parse_scoring_mode);
    }
    s.scoring.clamp_floor = get_number_or(*sc, "clamp_floor", "scoring", s.scoring.clamp_floor);
  }
  if (const Json* ru = member(root, "rules")) {
    const std::string p = "rules";
    expect_object(*ru, p,
                  {"load_litter_min", "load_ambulatory_min", "transfer_per_patient_min", "dwell_role1_min",
                   "dwell_role2_min"});
    auto& r = s.rules;
    r.load_litter = get_number_or(*ru, "load_litter_min", p, r.load_litter);
    r.load_ambulatory = get_number_or(*ru, "load_ambulatory_min", p, r.load_ambulatory);
    r.transfer_per_patient = get_number_or(*ru, "transfer_per_patient_min", p, r.transfer_per_patient);
    r.dwell_role1 = get_number_or(*ru, "dwell_role1_min", p, r.dwell_role1);
    r.dwell_role2 = get_number_or(*ru, "dwell_role2_min", p, r.dwell_role2);
  }

  {
    const Json* mp = member(root, "map");
    if (!mp) fail("map", "missing required field");
    expect_object(*mp, "map", {"nodes", "roads", "sea_lanes"});
    const Json& nodes = get_array(*mp, "nodes", "map");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string p = join("map.nodes", i);
      expect_object(nodes[i], p, {"id", "pos", "kind"});
      MapNode n;
      n.id = get_string(nodes[i], "id", p);
      const Json* pos = member(nodes[i], "pos");
      if (!pos) fail(join(p, "pos"), "missing required field");
      n.pos = read_vec2(*pos, join(p, "pos"));
      n.kind = get_enum<NodeKind>(nodes[i], "kind", p, parse_node_kind);
      s.map.nodes.push_back(std::move(n));
    }
    s.map.reindex();
    const Json& roads = get_array(*mp, "roads", "map");
    for (std::size_t i = 0; i < roads.size(); ++i) s.map.roads.push_back(read_edge(roads[i], join("map.roads", i), s.map));
    const Json& lanes = get_array(*mp, "sea_lanes", "map");
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      s.map.sea_lanes.push_back(read_edge(lanes[i], join("map.sea_lanes", i), s.map));
    }
  }

  const Json& facilities = get_array(root, "facilities", "");
  for (std::size_t i = 0; i < facilities.size(); ++i) {
    const std::string p = join("facilities", i);
    const Json& j = facilities[i];
    expect_object(j, p, {"id", "role", "node", "bed_capacity", "pad_slots", "mobile", "speed_kmh", "active"});
    Facility f;
    f.id = get_string(j, "id", p);
    f.role = get_enum<FacilityRole>(j, "role", p, parse_facility_role);
    f.node = get_string(j, "node", p);
    f.bed_capacity = get_opt_int(j, "bed_capacity", p);
    f.pad_slots = get_opt_int(j, "pad_slots", p);
    f.mobile = get_bool_or(j, "mobile", p, false);
    f.speed_kmh = get_number_or(j, "speed_kmh", p, 0.0);
    f.active = get_bool_or(j, "active", p, true);
    s.facilities.push_back(std::move(f));
  }

  const Json& streams = get_array(root, "ccp_streams", "");
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const std::string p = join("ccp_streams", i);
    const Json& j = streams[i];
    expect_object(j, p,
                  {"ccp", "mean_wave_interval_min", "mean_wave_size", "rate_multiplier", "urgent_fraction",
                   "litter_fraction", "activation_windows"});
    CasualtyStreamParams c;
    c.ccp = get_string(j, "ccp", p);
    c.mean_wave_interval = get_number(j, "mean_wave_interval_min", p);
    c.mean_wave_size = get_number(j, "mean_wave_size", p);
    c.rate_multiplier = get_number_or(j, "rate_multiplier", p, 1.0);
    c.urgent_fraction = get_number(j, "urgent_fraction", p);
    c.litter_fraction = get_number(j, "litter_fraction", p);
    const Json& windows = get_array(j, "activation_windows", p);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      c.activation_windows.push_back(read_window(windows[k], join(join(p, "activation_windows"), k)));
    }
    s.ccp_streams.push_back(std::move(c));
  }

  const Json& specs = get_array(root, "platform_specs", "");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string p = join("platform_specs", i);
    const Json& j = specs[i];
    expect_object(j, p,
                  {"id", "class", "cruise_speed_kmh", "litter_capacity", "ambulatory_capacity", "conversion",
                   "medevac", "callsign_prefix"});
    PlatformSpec ps;
    ps.id = get_string(j, "id", p);
    ps.cls = get_enum<PlatformClass>(j, "class", p, parse_platform_class);
    ps.cruise_speed_kmh = get_number(j, "cruise_speed_kmh", p);
    ps.litter_capacity = get_int(j, "litter_capacity", p);
    ps.ambulatory_capacity = get_int(j, "ambulatory_capacity", p);
    ps.conversion = get_number_or(j, "conversion", p, 1.0);
    ps.medevac = get_bool_or(j, "medevac", p, true);
    ps.callsign_prefix = get_string_or(j, "callsign_prefix", p, "");
    s.platform_specs.push_back(std::move(ps));
  }

  const Json& platforms = get_array(root, "platforms", "");
  for (std::size_t i = 0; i < platforms.size(); ++i) {
    const std::string p = join("platforms", i);
    expect_object(platforms[i], p, {"id", "spec", "start", "owner"});
    PlatformInstance pi;
    pi.id = get_string(platforms[i], "id", p);
    pi.spec = get_string(platforms[i], "spec", p);
    pi.start = get_string(platforms[i], "start", p);
    pi.owner = get_string(platforms[i], "owner", p);
    s.platforms.push_back(std::move(pi));
  }

  const Json& roles = get_array(root, "roles", "");
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const std::string p = join("roles", i);
    const Json& j = roles[i];
    expect_object(j, p, {"name", "owned_platforms", "owned_facilities", "permissions", "pickup_from"});
    RoleAssignment r;
    r.name = get_string(j, "name", p);
    r.owned_platforms = get_strings(j, "owned_platforms", p);
    r.owned_facilities = get_strings(j, "owned_facilities", p);
    if (const Json* perm = member(j, "permissions")) {
      const std::string pp = join(p, "permissions");
      expect_object(*perm, pp, {"can_inject", "sees_all", "can_place_sites"});
      r.permissions.can_inject = get_bool_or(*perm, "can_inject", pp, false);
      r.permissions.sees_all = get_bool_or(*perm, "sees_all", pp, false);
      r.permissions.can_place_sites = get_bool_or(*perm, "can_place_sites", pp, false);
    }
    const Json& pickup = get_array(j, "pickup_from", p);
    for (std::size_t k = 0; k < pickup.size(); ++k) {
      const std::string pk = join(join(p, "pickup_from"), k);
      if (!pickup[k].is_string()) fail(pk, "expected a string");
      auto fr = parse_facility_role(pickup[k].get<std::string>());
      if (!fr) fail(pk, "unknown facility role");
      r.pickup_from.push_back(*fr);
    }
    s.roles.push_back(std::move(r));
  }

  if (const Json* adv = member(root, "adversary")) {
    const std::string p = "adversary";
    expect_object(*adv, p,
                  {"enabled", "first_after_min", "mean_interval_min", "radius_km", "duration_min", "affects",
                   "corridors"});
    auto& a = s.adversary;
    a.enabled = get_bool_or(*adv, "enabled", p, false);
    a.first_after = get_number_or(*adv, "first_after_min", p, a.first_after);
    a.mean_interval = get_number_or(*adv, "mean_interval_min", p, a.mean_interval);
    if (const Json* r = member(*adv, "radius_km")) {
      TimeWindow w = read_window(*r, join(p, "radius_km"));
      a.radius_min = w.start;
      a.radius_max = w.end;
    }
    if (const Json* d = member(*adv, "duration_min")) {
      TimeWindow w = read_window(*d, join(p, "duration_min"));
      a.duration_min = w.start;
      a.duration_max = w.end;
    }
    a.affects = read_classes(*adv, "affects", p, a.affects);
    const Json& corridors = get_array(*adv, "corridors", p);
    for (std::size_t i = 0; i < corridors.size(); ++i) {
      const std::string cp = join(join(p, "corridors"), i);
      expect_object(corridors[i], cp, {"a", "b", "half_width_km"});
      Corridor c;
      const Json* ca = member(corridors[i], "a");
      const Json* cb = member(corridors[i], "b");
      if (!ca) fail(join(cp, "a"), "missing required field");
      if (!cb) fail(join(cp, "b"), "missing required field");
      c.a = read_vec2(*ca, join(cp, "a"));
      c.b = read_vec2(*cb, join(cp, "b"));
      c.half_width = get_number(corridors[i], "half_width_km", cp);
      a.corridors.push_back(c);
    }
  }

  const Json& rings = get_array(root, "scheduled_rings", "");
  for (std::size_t i = 0; i < rings.size(); ++i) s.scheduled_rings.push_back(read_ring(rings[i], join("scheduled_rings", i)));

  if (const Json* cv = member(root, "casevac")) {
    expect_object(*cv, "casevac", {"spec", "staging", "window_min"});
    s.casevac.spec = get_string_or(*cv, "spec", "casevac", "");
    s.casevac.staging = get_string_or(*cv, "staging", "casevac", "");
    s.casevac.window = get_number_or(*cv, "window_min", "casevac", s.casevac.window);
  }
  return s;
}

int line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// ---------------------------------------------------------------------------
// Validation

class Validator {
 public:
  explicit Validator(const Scenario& s) : s_(s) {}

  std::vector<Violation> run() {
    top_level();
    map();
    facilities();
    streams();
    specs();
    platforms_and_roles();
    adversary();
    casevac();
    return std::move(out_);
  }

 private:
  void bad(std::string field, std::string msg) {
    out_.push_back({Violation::Kind::Invariant, std::move(field), std::move(msg)});
  }
  void dangling(std::string field, std::string msg) {
    out_.push_back({Violation::Kind::DanglingReference, std::move(field), std::move(msg)});
  }
  static bool finite(double v) { return std::isfinite(v); }

  void top_level() {
    if (s_.schema != kScenarioSchema) bad("schema", "unsupported schema '" + s_.schema + "'");
    if (s_.name.empty()) bad("name", "must not be empty");
    if (!(s_.duration > 0) || !finite(s_.duration)) bad("duration_min", "must be > 0");
    if (s_.tick_seconds < 1 || 60 % s_.tick_seconds != 0) bad("tick_seconds", "must be a positive divisor of 60");
    if (!(s_.time_compression > 0) || !finite(s_.time_compression)) bad("time_compression", "must be > 0");
    const auto& d = s_.day_night;
    if (!(d.cycle > 0)) bad("day_night.cycle_min", "must be > 0");
    if (!(d.dawn >= 0 && d.dawn < d.dusk && d.dusk < d.cycle)) {
      bad("day_night.dawn_min", "require 0 <= dawn < dusk < cycle");
    }
    if (!(d.transition >= 0) || d.dawn + d.transition > d.dusk || d.dusk + d.transition > d.cycle + d.dawn) {
      bad("day_night.transition_min", "transition must fit between dawn and dusk");
    }
    if (!(d.night_visibility > 0 && d.night_visibility <= 1)) bad("day_night.night_visibility", "must be in (0,1]");
    if (!(d.night_air_speed_factor > 0 && d.night_air_speed_factor <= 1)) {
      bad("day_night.night_air_speed_factor", "must be in (0,1]");
    }
    if (!(s_.observation.radius > 0)) bad("observation.radius_km", "must be > 0");
    if (!(s_.precedence.urgent.p_max > 0)) bad("precedence.urgent.p_max", "must be > 0");
    if (!(s_.precedence.urgent.e_s > 0)) bad("precedence.urgent.e_s_min", "must be > 0");
    if (!(s_.precedence.priority.p_max > 0)) bad("precedence.priority.p_max", "must be > 0");
    if (!(s_.precedence.priority.e_s > 0)) bad("precedence.priority.e_s_min", "must be > 0");
    if (!(s_.mortality.e_s1 > 0)) bad("mortality.e_s1_min", "must be > 0");
    if (!(s_.mortality.e_s2 > 0)) bad("mortality.e_s2_min", "must be > 0");
    if (!finite(s_.scoring.clamp_floor)) bad("scoring.clamp_floor", "must be finite");
    const auto& r = s_.rules;
    if (!(r.load_litter >= 0)) bad("rules.load_litter_min", "must be >= 0");
    if (!(r.load_ambulatory >= 0)) bad("rules.load_ambulatory_min", "must be >= 0");
    if (!(r.transfer_per_patient >= 0)) bad("rules.transfer_per_patient_min", "must be >= 0");
    if (!(r.dwell_role1 >= 0)) bad("rules.dwell_role1_min", "must be >= 0");
    if (!(r.dwell_role2 >= 0)) bad("rules.dwell_role2_min", "must be >= 0");
  }

  void map() {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s_.map.nodes.size(); ++i) {
      const auto& n = s_.map.nodes[i];
      const std::string p = "map.nodes[" + std::to_string(i) + "]";
      if (n.id.empty()) bad(p + ".id", "must not be empty");
      if (!ids.insert(n.id).second) bad(p + ".id", "duplicate node id '" + n.id + "'");
      if (!finite(n.pos.x) || !finite(n.pos.y)) bad(p + ".pos", "must be finite");
    }
    auto edges = [&](const std::vector<MapEdge>& list, const std::string& name, bool sea) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& e = list[i];
        const std::string p = "map." + name + "[" + std::to_string(i) + "]";
        const MapNode* a = s_.map.find_node(e.a);
        const MapNode* b = s_.map.find_node(e.b);
        if (!a) dangling(p + ".a", "unknown node '" + e.a + "'");
        if (!b) dangling(p + ".b", "unknown node '" + e.b + "'");
        if (!a || !b) continue;
        if (e.a == e.b) bad(p, "self loop");
        auto ok_kind = [&](NodeKind k) { return sea ? k != NodeKind::Land : k != NodeKind::Water; };
        if (!ok_kind(a->kind) || !ok_kind(b->kind)) {
          bad(p, sea ? "sea lanes connect port/water nodes" : "roads connect land/port nodes");
        }
        const double euclid = distance(a->pos, b->pos);
        if (!(e.length > 0)) bad(p + ".length_km", "must be > 0");
        else if (e.length + 1e-9 * std::max(1.0, euclid) < euclid) bad(p + ".length_km", "shorter than straight-line distance");
      }
    };
    edges(s_.map.roads, "roads", false);
    edges(s_.map.sea_lanes, "sea_lanes", true);
  }

  void facilities() {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s_.facilities.size(); ++i) {
      const auto& f = s_.facilities[i];
      const std::string p = "facilities[" + std::to_string(i) + "]";
      if (f.id.empty()) bad(p + ".id", "must not be empty");
      if (!ids.insert(f.id).second) bad(p + ".id", "duplicate facility id '" + f.id + "'");
      if (s_.map.find_node(f.id)) bad(p + ".id", "facility id collides with a node id");
      const MapNode* n = s_.map.find_node(f.node);
      if (!n) {
        dangling(p + ".node", "unknown node '" + f.node + "'");
      } else {
        const bool ship_role = f.role == FacilityRole::Role2 || f.role == FacilityRole::Role3;
        if (!ship_role && n->kind == NodeKind::Water) bad(p + ".node", "facility role requires a land or port node");
        if (f.mobile && n->kind == NodeKind::Land) bad(p + ".node", "mobile facilities sit on port/water nodes");
      }
      if (f.pad_slots && *f.pad_slots < 0) bad(p + ".pad_slots", "must be >= 0");
      if (f.bed_capacity && *f.bed_capacity < 0) bad(p + ".bed_capacity", "must be >= 0");
      if (f.mobile && !(f.speed_kmh > 0)) bad(p + ".speed_kmh", "mobile facilities need speed > 0");
      if (f.mobile && f.role == FacilityRole::CCP) bad(p + ".mobile", "CCPs cannot be mobile");
    }
  }

  void streams() {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < s_.ccp_streams.size(); ++i) {
      const auto& c = s_.ccp_streams[i];
      const std::string p = "ccp_streams[" + std::to_string(i) + "]";
      const Facility* f = s_.find_facility(c.ccp);
      if (!f) dangling(p + ".ccp", "unknown facility '" + c.ccp + "'");
      else if (f->role != FacilityRole::CCP) bad(p + ".ccp", "facility '" + c.ccp + "' is not a CCP");
      if (!seen.insert(c.ccp).second) bad(p + ".ccp", "duplicate stream for CCP");
      if (!(c.mean_wave_interval > 0)) bad(p + ".mean_wave_interval_min", "must be > 0");
      if (!(c.mean_wave_size > 0)) bad(p + ".mean_wave_size", "must be > 0");
      if (!(c.rate_multiplier > 0)) bad(p + ".rate_multiplier", "must be > 0");
      if (!(c.urgent_fraction >= 0 && c.urgent_fraction <= 1)) bad(p + ".urgent_fraction", "must be in [0,1]");
      if (!(c.litter_fraction >= 0 && c.litter_fraction <= 1)) bad(p + ".litter_fraction", "must be in [0,1]");
      for (std::size_t k = 0; k < c.activation_windows.size(); ++k) {
        const auto& w = c.activation_windows[k];
        if (!(w.start < w.end) || w.start < 0) {
          bad(p + ".activation_windows[" + std::to_string(k) + "]", "window must satisfy 0 <= start < end");
        }
        if (k > 0 && w.start < c.activation_windows[k - 1].end) {
          bad(p + ".activation_windows[" + std::to_string(k) + "]", "windows must be sorted and disjoint");
        }
      }
    }
  }

  void specs() {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s_.platform_specs.size(); ++i) {
      const auto& ps = s_.platform_specs[i];
      const std::string p = "platform_specs[" + std::to_string(i) + "]";
      if (!ids.insert(ps.id).second) bad(p + ".id", "duplicate spec id '" + ps.id + "'");
      if (!(ps.cruise_speed_kmh > 0)) bad(p + ".cruise_speed_kmh", "must be > 0");
      if (ps.litter_capacity < 0) bad(p + ".litter_capacity", "must be >= 0");
      if (ps.ambulatory_capacity < 0) bad(p + ".ambulatory_capacity", "must be >= 0");
      if (!(ps.conversion > 0)) bad(p + ".conversion", "must be > 0");
    }
  }

  void platforms_and_roles() {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s_.platforms.size(); ++i) {
      const auto& pi = s_.platforms[i];
      const std::string p = "platforms[" + std::to_string(i) + "]";
      if (pi.id.empty()) bad(p + ".id", "must not be empty");
      if (!ids.insert(pi.id).second) bad(p + ".id", "duplicate platform id '" + pi.id + "'");
      if (s_.find_facility(pi.id) || s_.map.find_node(pi.id)) bad(p + ".id", "platform id collides with a site id");
      const PlatformSpec* spec = s_.find_spec(pi.spec);
      if (!spec) dangling(p + ".spec", "unknown platform spec '" + pi.spec + "'");
      const Facility* start = s_.find_facility(pi.start);
      if (!start) dangling(p + ".start", "unknown facility '" + pi.start + "'");
      if (!s_.find_role(pi.owner)) dangling(p + ".owner", "unknown role '" + pi.owner + "'");
      if (spec && start) {
        const MapNode* n = s_.map.find_node(start->node);
        if (n && spec->cls == PlatformClass::GroundVehicle && n->kind == NodeKind::Water) {
          bad(p + ".start", "ground vehicle cannot start on water");
        }
        if (n && spec->cls == PlatformClass::Ship && n->kind == NodeKind::Land) {
          bad(p + ".start", "ship cannot start on land");
        }
      }
    }

    std::set<std::string> names;
    std::map<std::string, std::vector<std::string>> owners;
    for (std::size_t i = 0; i < s_.roles.size(); ++i) {
      const auto& r = s_.roles[i];
      const std::string p = "roles[" + std::to_string(i) + "]";
      if (r.name.empty()) bad(p + ".name", "must not be empty");
      if (!names.insert(r.name).second) bad(p + ".name", "duplicate role '" + r.name + "'");
      for (std::size_t k = 0; k < r.owned_platforms.size(); ++k) {
        const auto& id = r.owned_platforms[k];
        if (!ids.count(id)) {
          dangling(p + ".owned_platforms[" + std::to_string(k) + "]", "unknown platform '" + id + "'");
          continue;
        }
        owners[id].push_back(r.name);
      }
      for (std::size_t k = 0; k < r.owned_facilities.size(); ++k) {
        const Facility* f = s_.find_facility(r.owned_facilities[k]);
        const std::string fp = p + ".owned_facilities[" + std::to_string(k) + "]";
        if (!f) dangling(fp, "unknown facility '" + r.owned_facilities[k] + "'");
        else if (!f->mobile) bad(fp, "only mobile facilities can be owned");
      }
    }
    for (const auto& pi : s_.platforms) {
      auto it = owners.find(pi.id);
      if (it == owners.end()) {
        bad("roles", "platform '" + pi.id + "' is not owned by any role");
      } else if (it->second.size() > 1) {
        bad("roles", "platform '" + pi.id + "' is owned by more than one role");
      } else if (it->second.front() != pi.owner) {
        bad("platforms", "platform '" + pi.id + "' owner does not match owning role '" + it->second.front() + "'");
      }
    }
  }

  void adversary() {
    const auto& a = s_.adversary;
    if (a.enabled) {
      if (!(a.mean_interval > 0)) bad("adversary.mean_interval_min", "must be > 0");
      if (!(a.first_after >= 0)) bad("adversary.first_after_min", "must be >= 0");
      if (!(a.radius_min > 0 && a.radius_min <= a.radius_max)) bad("adversary.radius_km", "require 0 < min <= max");
      if (!(a.duration_min > 0 && a.duration_min <= a.duration_max)) {
        bad("adversary.duration_min", "require 0 < min <= max");
      }
      if (a.corridors.empty()) bad("adversary.corridors", "enabled adversary needs at least one corridor");
    }
    for (std::size_t i = 0; i < a.corridors.size(); ++i) {
      if (!(a.corridors[i].half_width > 0)) {
        bad("adversary.corridors[" + std::to_string(i) + "].half_width_km", "must be > 0");
      }
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s_.scheduled_rings.size(); ++i) {
      const auto& r = s_.scheduled_rings[i];
      const std::string p = "scheduled_rings[" + std::to_string(i) + "]";
      if (!ids.insert(r.id).second) bad(p + ".id", "duplicate ring id");
      if (!(r.radius > 0)) bad(p + ".radius_km", "must be > 0");
      if (!(r.window.start < r.window.end)) bad(p + ".window", "window must be well-ordered");
    }
  }

  void casevac() {
    const auto& c = s_.casevac;
    if (c.spec.empty()) return;
    if (!s_.find_spec(c.spec)) dangling("casevac.spec", "unknown platform spec '" + c.spec + "'");
    if (!s_.find_facility(c.staging)) dangling("casevac.staging", "unknown facility '" + c.staging + "'");
    if (!(c.window > 0)) bad("casevac.window_min", "must be > 0");
  }

  const Scenario& s_;
  std::vector<Violation> out_;
};

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Precedence p) { return name_of(kPrecedenceNames, p); }
std::string_view to_string(PatientKind k) { return name_of(kKindNames, k); }
std::string_view to_string(FacilityRole r) { return name_of(kRoleNames, r); }
std::string_view to_string(PlatformClass c) { return name_of(kClassNames, c); }
std::string_view to_string(NodeKind k) { return name_of(kNodeKindNames, k); }
std::string_view to_string(ScoringModeKind m) { return name_of(kScoringNames, m); }

std::optional<Precedence> parse_precedence(std::string_view s) { return value_of(kPrecedenceNames, s); }
std::optional<PatientKind> parse_patient_kind(std::string_view s) { return value_of(kKindNames, s); }
std::optional<FacilityRole> parse_facility_role(std::string_view s) { return value_of(kRoleNames, s); }
std::optional<PlatformClass> parse_platform_class(std::string_view s) { return value_of(kClassNames, s); }
std::optional<NodeKind> parse_node_kind(std::string_view s) { return value_of(kNodeKindNames, s); }
std::optional<ScoringModeKind> parse_scoring_mode(std::string_view s) { return value_of(kScoringNames, s); }

int care_level(FacilityRole r) {
  switch (r) {
    case FacilityRole::Role1: return 1;
    case FacilityRole::Role2: return 2;
    case FacilityRole::Role3: return 3;
    default: return 0;
  }
}

void WorldMap::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < nodes.size(); ++i) index_.emplace(nodes[i].id, i);
}

std::optional<std::size_t> WorldMap::node_index(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const MapNode* WorldMap::find_node(std::string_view id) const {
  auto i = node_index(id);
  return i ? &nodes[*i] : nullptr;
}

double PlatformSpec::total_seats() const {
  return std::max(static_cast<double>(ambulatory_capacity), conversion * litter_capacity);
}

bool ThreatRing::affects_class(PlatformClass c) const {
  return std::find(affects.begin(), affects.end(), c) != affects.end();
}

const Facility* Scenario::find_facility(std::string_view id) const {
  auto i = facility_index(id);
  return i ? &facilities[*i] : nullptr;
}

std::optional<std::size_t> Scenario::facility_index(std::string_view id) const {
  for (std::size_t i = 0; i < facilities.size(); ++i) {
    if (facilities[i].id == id) return i;
  }
  return std::nullopt;
}

const PlatformSpec* Scenario::find_spec(std::string_view id) const {
  auto i = spec_index(id);
  return i ? &platform_specs[*i] : nullptr;
}

std::optional<std::size_t> Scenario::spec_index(std::string_view id) const {
  for (std::size_t i = 0; i < platform_specs.size(); ++i) {
    if (platform_specs[i].id == id) return i;
  }
  return std::nullopt;
}

const RoleAssignment* Scenario::find_role(std::string_view name) const {
  for (const auto& r : roles) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const CasualtyStreamParams* Scenario::find_stream(std::string_view ccp) const {
  for (const auto& c : ccp_streams) {
    if (c.ccp == ccp) return &c;
  }
  return nullptr;
}

ScenarioError::ScenarioError(Kind kind, std::string field, const std::string& message, int line)
    : std::runtime_error(message), kind_(kind), field_(std::move(field)), line_(line) {}

Scenario load_scenario(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const int line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ScenarioError(ScenarioError::Kind::Parse, "<document>",
                        "syntax error at line " + std::to_string(line) + ": " + e.what(), line);
  }
  Scenario s = scenario_from_json(root);
  auto violations = validate_scenario(s);
  if (!violations.empty()) {
    const auto& v = violations.front();
    const auto kind = v.kind == Violation::Kind::DanglingReference ? ScenarioError::Kind::DanglingReference
                                                                   : ScenarioError::Kind::Invariant;
    throw ScenarioError(kind, v.field, v.field + ": " + v.message);
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

std::vector<Violation> validate_scenario(const Scenario& s) { return Validator(s).run(); }

Json to_json(const ThreatRing& r) {
  return Json{{"id", r.id},
              {"center", write_vec2(r.center)},
              {"radius_km", r.radius},
              {"affects", write_classes(r.affects)},
              {"window", write_window(r.window)}};
}

ThreatRing ring_from_json(const Json& j) { return read_ring(j, "ring"); }

Json scenario_to_json(const Scenario& s) {
  Json root;
  root["schema"] = s.schema;
  root["name"] = s.name;
  root["rng_seed"] = s.rng_seed;
  root["duration_min"] = s.duration;
  root["tick_seconds"] = s.tick_seconds;
  root["time_compression"] = s.time_compression;
  const auto& d = s.day_night;
  root["day_night"] = {{"start_time_of_day_min", d.start_time_of_day},
                       {"dawn_min", d.dawn},
                       {"dusk_min", d.dusk},
                       {"cycle_min", d.cycle},
                       {"transition_min", d.transition},
                       {"night_visibility", d.night_visibility},
                       {"night_air_speed_factor", d.night_air_speed_factor}};
  root["observation"] = {{"radius_km", s.observation.radius},
                         {"requests_reveal_precedence", s.observation.requests_reveal_precedence}};
  root["precedence"] = {
      {"urgent", {{"p_max", s.precedence.urgent.p_max}, {"e_s_min", s.precedence.urgent.e_s}}},
      {"priority", {{"p_max", s.precedence.priority.p_max}, {"e_s_min", s.precedence.priority.e_s}}}};
  root["mortality"] = {{"e_s1_min", s.mortality.e_s1}, {"e_s2_min", s.mortality.e_s2}};
  root["scoring"] = {{"mode", to_string(s.scoring.kind)}, {"clamp_floor", s.scoring.clamp_floor}};
  root["rules"] = {{"load_litter_min", s.rules.load_litter},
                   {"load_ambulatory_min", s.rules.load_ambulatory},
                   {"transfer_per_patient_min", s.rules.transfer_per_patient},
                   {"dwell_role1_min", s.rules.dwell_role1},
                   {"dwell_role2_min", s.rules.dwell_role2}};
  Json nodes = Json::array();
  for (const auto& n : s.map.nodes) nodes.push_back({{"id", n.id}, {"pos", write_vec2(n.pos)}, {"kind", to_string(n.kind)}});
  Json roads = Json::array();
  for (const auto& e : s.map.roads) roads.push_back(write_edge(e));
  Json lanes = Json::array();
  for (const auto& e : s.map.sea_lanes) lanes.push_back(write_edge(e));
  root["map"] = {{"nodes", nodes}, {"roads", roads}, {"sea_lanes", lanes}};

  Json facilities = Json::array();
  for (const auto& f : s.facilities) {
    Json j{{"id", f.id}, {"role", to_string(f.role)}, {"node", f.node}, {"mobile", f.mobile}, {"active", f.active}};
    if (f.bed_capacity) j["bed_capacity"] = *f.bed_capacity;
    if (f.pad_slots) j["pad_slots"] = *f.pad_slots;
    if (f.mobile) j["speed_kmh"] = f.speed_kmh;
    facilities.push_back(std::move(j));
  }
  root["facilities"] = facilities;

  Json streams = Json::array();
  for (const auto& c : s.ccp_streams) {
    Json windows = Json::array();
    for (const auto& w : c.activation_windows) windows.push_back(write_window(w));
    streams.push_back({{"ccp", c.ccp},
                       {"mean_wave_interval_min", c.mean_wave_interval},
                       {"mean_wave_size", c.mean_wave_size},
                       {"rate_multiplier", c.rate_multiplier},
                       {"urgent_fraction", c.urgent_fraction},
                       {"litter_fraction", c.litter_fraction},
                       {"activation_windows", windows}});
  }
  root["ccp_streams"] = streams;

  Json specs = Json::array();
  for (const auto& ps : s.platform_specs) {
    specs.push_back({{"id", ps.id},
                     {"class", to_string(ps.cls)},
                     {"cruise_speed_kmh", ps.cruise_speed_kmh},
                     {"litter_capacity", ps.litter_capacity},
                     {"ambulatory_capacity", ps.ambulatory_capacity},
                     {"conversion", ps.conversion},
                     {"medevac", ps.medevac},
                     {"callsign_prefix", ps.callsign_prefix}});
  }
  root["platform_specs"] = specs;

  Json platforms = Json::array();
  for (const auto& p : s.platforms) {
    platforms.push_back({{"id", p.id}, {"spec", p.spec}, {"start", p.start}, {"owner", p.owner}});
  }
  root["platforms"] = platforms;

  Json roles = Json::array();
  for (const auto& r : s.roles) {
    Json pickup = Json::array();
    for (auto fr : r.pickup_from) pickup.push_back(to_string(fr));
    roles.push_back({{"name", r.name},
                     {"owned_platforms", r.owned_platforms},
                     {"owned_facilities", r.owned_facilities},
                     {"permissions",
                      {{"can_inject", r.permissions.can_inject},
                       {"sees_all", r.permissions.sees_all},
                       {"can_place_sites", r.permissions.can_place_sites}}},
                     {"pickup_from", pickup}});
  }
  root["roles"] = roles;

  const auto& a = s.adversary;
  Json corridors = Json::array();
  for (const auto& c : a.corridors) {
    corridors.push_back({{"a", write_vec2(c.a)}, {"b", write_vec2(c.b)}, {"half_width_km", c.half_width}});
  }
  root["adversary"] = {{"enabled", a.enabled},
                       {"first_after_min", a.first_after},
                       {"mean_interval_min", a.mean_interval},
                       {"radius_km", Json::array({a.radius_min, a.radius_max})},
                       {"duration_min", Json::array({a.duration_min, a.duration_max})},
                       {"affects", write_classes(a.affects)},
                       {"corridors", corridors}};
  Json rings = Json::array();
  for (const auto& r : s.scheduled_rings) rings.push_back(to_json(r));
  root["scheduled_rings"] = rings;
  root["casevac"] = {{"spec", s.casevac.spec}, {"staging", s.casevac.staging}, {"window_min", s.casevac.window}};
  return root;
}

std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2); }

std::uint64_t scenario_fingerprint(const Scenario& s) {
  const std::string text = scenario_to_json(s).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace medevac
