#pragma once

// Doctrinal legality: capacities, continuity of care, attended transfers and
// single-pad landing queues. Every check is a pure function of the world.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medevac/verdict.h"
#include "medevac/world.h"

namespace medevac {

enum class Verb { Dispatch, Load, Unload, TransferTo, Wait, RequestCasevac };

std::string_view to_string(Verb v);
std::optional<Verb> parse_verb(std::string_view s);

struct ActionRequest {
  std::string actor;     // role name
  std::string platform;  // platform id, or a mobile facility id for Dispatch
  Verb verb = Verb::Wait;
  /// Dispatch destination (facility or node id) or TransferTo receiver.
  std::string target;
  std::vector<PatientId> patients;
  std::string details;  // RequestCasevac free text
  Minutes issued_at = 0.0;

  friend bool operator==(const ActionRequest&, const ActionRequest&) = default;
};

Json to_json(const ActionRequest& a);
/// Throws std::invalid_argument on malformed input.
ActionRequest action_from_json(const Json& j);

struct Occupancy {
  int litter = 0;
  int ambulatory = 0;
  double seats = 0.0;  // ambulatory-seat equivalents
};

/// Seats used by `litter` and `ambulatory` patients under the conversion rule.
Occupancy occupancy_for(const PlatformSpec& spec, int litter, int ambulatory);
Occupancy manifest_occupancy(const World& w, const PlatformState& p);
/// Allowed iff litter <= litter_capacity and converted seats <= total_seats().
Verdict check_capacity(const PlatformSpec& spec, int litter, int ambulatory);

/// Stationary at `site`, not busy and not mid-unload.
Verdict check_on_site(const World& w, const PlatformState& p, std::string_view site);

Verdict check_load(const World& w, const PlatformState& p, std::span<const PatientId> patients,
                   std::string_view site);
Verdict check_unload(const World& w, const PlatformState& p, std::span<const PatientId> patients,
                     std::string_view site);
Verdict check_transfer(const World& w, std::string_view point, const PlatformState& from, const PlatformState& to,
                       std::span<const PatientId> patients);

/// Resolved dispatch target.
struct DispatchTarget {
  MapPosition position;
  std::string facility;  // empty for a bare node
};

std::optional<DispatchTarget> resolve_target(const World& w, std::string_view id);

/// Legality of sending `p` to `destination`; on success `route` holds the plan.
Verdict check_dispatch(const World& w, const PlatformState& p, std::string_view destination,
                       std::optional<Route>* route = nullptr);
/// Relocation of a mobile facility along sea lanes.
Verdict check_relocate(const World& w, std::string_view role, std::string_view facility, std::string_view node,
                       std::optional<Route>* route = nullptr);

/// Pseudo platform spec used to route a mobile facility.
PlatformSpec facility_motion_spec(const Facility& f);

/// Full legality of an action against the current snapshot (ownership first).
Verdict check_action(const World& w, const ActionRequest& a);

// ---------------------------------------------------------------------------
// Pad queue

struct PadArrival {
  bool granted = false;
  std::size_t position = 0;  // 1-based queue position when not granted
};

PadArrival pad_arrive(PadQueue& q, std::optional<int> slots, const std::string& platform, Minutes at);

struct PadPromotion {
  std::string platform;
  Minutes waited = 0.0;
};

/// Frees the platform's slot (or drops it from the queue) and promotes the
/// head of the queue into any free slot.
std::vector<PadPromotion> pad_depart(PadQueue& q, std::optional<int> slots, const std::string& platform, Minutes at);

/// Air landings need a pad: facilities with pad_slots == 0 refuse them.
bool pad_applies(const Facility& f, const PlatformSpec& spec);

// ---------------------------------------------------------------------------
// Exchange holds

struct ExchangeHold {
  std::string point;
  std::vector<PatientId> patients;
  std::vector<std::string> attending;
};

std::vector<ExchangeHold> exchange_holds(const World& w);

}  // namespace medevac
