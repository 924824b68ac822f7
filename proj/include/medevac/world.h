#pragma once

// Mutable simulation state. Only the engine writes it; everything else reads
// it through const references or serialized snapshots.

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "medevac/casualty.h"
#include "medevac/patient.h"
#include "medevac/scenario.h"
#include "medevac/world_map.h"

namespace medevac {

enum class PlatformPhase { Stationary, EnRoute, Queued, Despawned };

std::string_view to_string(PlatformPhase p);

/// Single-pad (or n-pad) landing queue at a facility.
struct PadQueue {
  struct Waiting {
    std::string platform;
    Minutes since = 0.0;
    friend bool operator==(const Waiting&, const Waiting&) = default;
  };
  std::vector<std::string> occupied;
  std::deque<Waiting> waiting;
  friend bool operator==(const PadQueue&, const PadQueue&) = default;
};

struct PendingUnload {
  std::vector<PatientId> patients;
  std::string site;
  Minutes completes_at = 0.0;
  friend bool operator==(const PendingUnload&, const PendingUnload&) = default;
};

struct PlatformState {
  std::string id;
  std::size_t spec = 0;  // index into Scenario::platform_specs
  std::string owner;
  PlatformPhase phase = PlatformPhase::Stationary;
  /// Facility id while on site or waiting in its pad queue.
  std::string site;
  /// Position when off site (halted, en route origin, free staging).
  MapPosition position;
  std::optional<Route> route;
  Minutes depart_time = 0.0;
  double speed_kmh = 0.0;
  /// Dispatch target: facility id or node id.
  std::string destination;
  bool halted = false;
  std::vector<PatientId> manifest;
  Minutes busy_until = 0.0;
  std::optional<PendingUnload> unloading;
  bool casevac = false;
  std::optional<Minutes> casevac_expiry;

  bool en_route() const { return phase == PlatformPhase::EnRoute; }
  bool active() const { return phase != PlatformPhase::Despawned; }
  friend bool operator==(const PlatformState&, const PlatformState&) = default;
};

struct FacilityState {
  std::string id;
  FacilityRole role = FacilityRole::CCP;
  bool active = true;
  MapPosition position;
  PadQueue pad;
  /// Mobile facilities in transit.
  std::optional<Route> route;
  Minutes depart_time = 0.0;
  friend bool operator==(const FacilityState&, const FacilityState&) = default;
};

struct CcpState {
  std::string ccp;
  std::size_t stream = 0;  // index into Scenario::ccp_streams
  bool active = false;
  std::optional<bool> override_active;  // set by instructor injects
  /// Drawn ahead: the next wave due at this CCP while it stays active.
  std::optional<Wave> pending;
  CasualtyRng rng;
  CasualtyRng mascal_rng;
};

struct CasevacRequest {
  enum class Status { Pending, Granted, Denied };
  std::string id;
  std::string role;
  std::string details;
  Minutes at = 0.0;
  Status status = Status::Pending;
  std::string platform;
};

struct RingRecord {
  ThreatRing ring;
  bool announced = false;
  bool expired = false;
};

/// Evacuation request surfaced team-wide when a wave lands at a CCP.
struct EvacRequest {
  long id = 0;
  std::string ccp;
  Minutes at = 0.0;
  std::vector<PatientId> patients;
  int urgent = 0;
  int priority = 0;
  int litter = 0;
  int ambulatory = 0;
};

struct World {
  std::shared_ptr<const Scenario> scenario;
  long tick = 0;
  int tick_seconds = 1;
  std::vector<Patient> patients;  // patients[id - 1]
  std::vector<PlatformState> platforms;
  std::vector<FacilityState> facilities;  // parallel to scenario->facilities
  std::vector<CcpState> ccps;
  std::vector<RingRecord> rings;  // every ring ever known; activity by window
  ThreatSpawner spawner;
  std::vector<TimeWindow> blackouts;
  std::vector<CasevacRequest> casevac_requests;
  std::vector<EvacRequest> evac_requests;
  long next_request_id = 1;
  long casevac_counter = 0;
  long casevac_request_counter = 0;

  Minutes now() const { return static_cast<double>(tick * tick_seconds) / 60.0; }
  Minutes time_at_tick(long t) const { return static_cast<double>(t * tick_seconds) / 60.0; }

  const PlatformSpec& spec_of(const PlatformState& p) const { return scenario->platform_specs[p.spec]; }
  PlatformState* find_platform(std::string_view id);
  const PlatformState* find_platform(std::string_view id) const;
  FacilityState* find_facility(std::string_view id);
  const FacilityState* find_facility(std::string_view id) const;
  const Facility* facility_config(std::string_view id) const { return scenario->find_facility(id); }
  Patient* find_patient(PatientId id);
  const Patient* find_patient(PatientId id) const;
  CcpState* find_ccp(std::string_view id);
  const CcpState* find_ccp(std::string_view id) const;

  /// Current map position of a platform (facility position while on site).
  MapPosition platform_position(const PlatformState& p) const;
  bool blackout_at(Minutes t) const;
  std::vector<ThreatRing> active_rings(Minutes t) const;

  /// Patients currently at a site (CCP, facility, or exchange point), in id order.
  std::vector<PatientId> patients_at(std::string_view site) const;
  int occupancy_at(std::string_view site) const;
  /// Platforms bound to an exchange point by patients they dropped there.
  bool bound_by_hold(std::string_view platform) const;
};

Json world_to_json(const World& w);
/// Restores dynamic state onto a world built for the same scenario.
void world_from_json(World& w, const Json& j);

}  // namespace medevac
