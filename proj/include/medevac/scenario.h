#pragma once

// Static world description: domain types shared by every module, the
// scenario document format and its validation.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace medevac {

using Json = nlohmann::json;

/// In-game minutes.
using Minutes = double;
/// Kilometres.
using Km = double;

inline constexpr const char* kScenarioSchema = "medevac-scenario/1";

enum class Precedence { Urgent, Priority };
enum class PatientKind { Litter, Ambulatory };
enum class FacilityRole { CCP, Role1, Role2, Role3, AXP, HLZ };
enum class PlatformClass { RotaryWing, TiltRotor, GroundVehicle, Ship };
enum class NodeKind { Land, Port, Water };
enum class ScoringModeKind { LinearDecay, AsPrinted };

std::string_view to_string(Precedence p);
std::string_view to_string(PatientKind k);
std::string_view to_string(FacilityRole r);
std::string_view to_string(PlatformClass c);
std::string_view to_string(NodeKind k);
std::string_view to_string(ScoringModeKind m);

std::optional<Precedence> parse_precedence(std::string_view s);
std::optional<PatientKind> parse_patient_kind(std::string_view s);
std::optional<FacilityRole> parse_facility_role(std::string_view s);
std::optional<PlatformClass> parse_platform_class(std::string_view s);
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<ScoringModeKind> parse_scoring_mode(std::string_view s);

/// Care level credited by a facility role: 1..3 for Role1..Role3, 0 otherwise.
int care_level(FacilityRole r);
inline bool is_exchange_point(FacilityRole r) { return r == FacilityRole::AXP || r == FacilityRole::HLZ; }
inline bool is_air(PlatformClass c) { return c == PlatformClass::RotaryWing || c == PlatformClass::TiltRotor; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

struct TimeWindow {
  Minutes start = 0.0;
  Minutes end = 0.0;
  bool contains(Minutes t) const { return t >= start && t < end; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct PrecedenceSpec {
  double p_max = 0.0;
  Minutes e_s = 0.0;
  friend bool operator==(const PrecedenceSpec&, const PrecedenceSpec&) = default;
};

struct PrecedenceTable {
  PrecedenceSpec urgent{10.0, 60.0};
  PrecedenceSpec priority{8.0, 240.0};

  const PrecedenceSpec& operator[](Precedence p) const { return p == Precedence::Urgent ? urgent : priority; }
  friend bool operator==(const PrecedenceTable&, const PrecedenceTable&) = default;
};

struct MapNode {
  std::string id;
  Vec2 pos;
  NodeKind kind = NodeKind::Land;
  friend bool operator==(const MapNode&, const MapNode&) = default;
};

struct MapEdge {
  std::string a;
  std::string b;
  Km length = 0.0;
  bool ground_passable = true;
  friend bool operator==(const MapEdge&, const MapEdge&) = default;
};

/// Node/edge graph for roads and sea lanes. Air travel is free flight.
class WorldMap {
 public:
  std::vector<MapNode> nodes;
  std::vector<MapEdge> roads;
  std::vector<MapEdge> sea_lanes;

  /// Rebuilds the id index; call after mutating `nodes`.
  void reindex();
  std::optional<std::size_t> node_index(std::string_view id) const;
  const MapNode* find_node(std::string_view id) const;

  friend bool operator==(const WorldMap& a, const WorldMap& b) {
    return a.nodes == b.nodes && a.roads == b.roads && a.sea_lanes == b.sea_lanes;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct Facility {
  std::string id;
  FacilityRole role = FacilityRole::CCP;
  std::string node;
  std::optional<int> bed_capacity;  // nullopt = unbounded
  std::optional<int> pad_slots;     // nullopt = unbounded
  bool mobile = false;
  double speed_kmh = 0.0;  // mobile facilities only
  bool active = true;
  friend bool operator==(const Facility&, const Facility&) = default;
};

struct PlatformSpec {
  std::string id;
  PlatformClass cls = PlatformClass::GroundVehicle;
  double cruise_speed_kmh = 0.0;
  int litter_capacity = 0;
  int ambulatory_capacity = 0;
  /// Ambulatory seats consumed per litter loaded.
  double conversion = 1.0;
  bool medevac = true;
  std::string callsign_prefix;

  /// Seat budget in ambulatory-seat equivalents.
  double total_seats() const;
  friend bool operator==(const PlatformSpec&, const PlatformSpec&) = default;
};

struct CasualtyStreamParams {
  std::string ccp;
  Minutes mean_wave_interval = 60.0;
  double mean_wave_size = 1.0;
  double rate_multiplier = 1.0;
  double urgent_fraction = 0.5;
  double litter_fraction = 0.5;
  std::vector<TimeWindow> activation_windows;  // empty = always active
  friend bool operator==(const CasualtyStreamParams&, const CasualtyStreamParams&) = default;
};

struct PlatformInstance {
  std::string id;
  std::string spec;
  std::string start;  // facility id
  std::string owner;  // role name
  friend bool operator==(const PlatformInstance&, const PlatformInstance&) = default;
};

struct RolePermissions {
  bool can_inject = false;
  bool sees_all = false;
  bool can_place_sites = false;
  friend bool operator==(const RolePermissions&, const RolePermissions&) = default;
};

struct RoleAssignment {
  std::string name;
  std::vector<std::string> owned_platforms;
  std::vector<std::string> owned_facilities;  // mobile facilities the role may relocate
  RolePermissions permissions;
  /// Hint for the scripted policies: facility roles this role's platforms pick up from.
  std::vector<FacilityRole> pickup_from;
  friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

struct DayNightConfig {
  Minutes start_time_of_day = 360.0;  // clock time at t = 0
  Minutes dawn = 360.0;
  Minutes dusk = 1140.0;
  Minutes cycle = 1440.0;
  Minutes transition = 60.0;
  double night_visibility = 0.4;
  /// Multiplier applied to air cruise speed at night; 1.0 = information-only night.
  double night_air_speed_factor = 1.0;
  friend bool operator==(const DayNightConfig&, const DayNightConfig&) = default;
};

struct ObservationConfig {
  Km radius = 30.0;
  bool requests_reveal_precedence = true;
  friend bool operator==(const ObservationConfig&, const ObservationConfig&) = default;
};

struct MortalityConfig {
  Minutes e_s1 = 60.0;
  Minutes e_s2 = 240.0;
  friend bool operator==(const MortalityConfig&, const MortalityConfig&) = default;
};

struct ScoringMode {
  ScoringModeKind kind = ScoringModeKind::LinearDecay;
  double clamp_floor = 0.0;
  friend bool operator==(const ScoringMode&, const ScoringMode&) = default;
};

struct RulesConfig {
  Minutes load_litter = 1.0;
  Minutes load_ambulatory = 0.5;
  Minutes transfer_per_patient = 1.0;
  Minutes dwell_role1 = 15.0;
  Minutes dwell_role2 = 30.0;
  friend bool operator==(const RulesConfig&, const RulesConfig&) = default;
};

struct Corridor {
  Vec2 a;
  Vec2 b;
  Km half_width = 1.0;
  friend bool operator==(const Corridor&, const Corridor&) = default;
};

struct ThreatRing {
  std::string id;
  Vec2 center;
  Km radius = 1.0;
  std::vector<PlatformClass> affects;
  TimeWindow window;

  bool affects_class(PlatformClass c) const;
  bool active_at(Minutes t) const { return window.contains(t); }
  friend bool operator==(const ThreatRing&, const ThreatRing&) = default;
};

struct AdversaryParams {
  bool enabled = false;
  Minutes first_after = 0.0;
  Minutes mean_interval = 120.0;
  Km radius_min = 3.0;
  Km radius_max = 6.0;
  Minutes duration_min = 30.0;
  Minutes duration_max = 90.0;
  std::vector<PlatformClass> affects{PlatformClass::GroundVehicle, PlatformClass::RotaryWing,
                                     PlatformClass::TiltRotor};
  std::vector<Corridor> corridors;
  friend bool operator==(const AdversaryParams&, const AdversaryParams&) = default;
};

struct CasevacConfig {
  std::string spec;     // platform spec id; empty = casevac unavailable
  std::string staging;  // facility id
  Minutes window = 120.0;
  friend bool operator==(const CasevacConfig&, const CasevacConfig&) = default;
};

struct Scenario {
  std::string schema = kScenarioSchema;
  std::string name;
  std::uint64_t rng_seed = 1;
  Minutes duration = 720.0;
  int tick_seconds = 1;
  /// In-game minutes per real second (0.1 = 6x).
  double time_compression = 0.1;
  DayNightConfig day_night;
  ObservationConfig observation;
  PrecedenceTable precedence;
  MortalityConfig mortality;
  ScoringMode scoring;
  RulesConfig rules;
  WorldMap map;
  std::vector<Facility> facilities;
  std::vector<CasualtyStreamParams> ccp_streams;
  std::vector<PlatformSpec> platform_specs;
  std::vector<PlatformInstance> platforms;
  std::vector<RoleAssignment> roles;
  AdversaryParams adversary;
  std::vector<ThreatRing> scheduled_rings;
  CasevacConfig casevac;

  const Facility* find_facility(std::string_view id) const;
  const PlatformSpec* find_spec(std::string_view id) const;
  const RoleAssignment* find_role(std::string_view name) const;
  const CasualtyStreamParams* find_stream(std::string_view ccp) const;
  std::optional<std::size_t> facility_index(std::string_view id) const;
  std::optional<std::size_t> spec_index(std::string_view id) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Violation {
  enum class Kind { Invariant, DanglingReference };
  Kind kind = Kind::Invariant;
  std::string field;
  std::string message;
};

/// Raised by load_scenario. `field()` names the offending field path and
/// `line()` is set for syntax errors.
class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { Parse, DanglingReference, Invariant };

  ScenarioError(Kind kind, std::string field, const std::string& message, int line = 0);

  Kind kind() const { return kind_; }
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  std::string field_;
  int line_;
};

Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);
std::vector<Violation> validate_scenario(const Scenario& s);
Json scenario_to_json(const Scenario& s);
std::string serialize_scenario(const Scenario& s);
/// Stable 64-bit fingerprint of the canonical serialization.
std::uint64_t scenario_fingerprint(const Scenario& s);

Json to_json(const ThreatRing& r);
ThreatRing ring_from_json(const Json& j);

}  // namespace medevac
