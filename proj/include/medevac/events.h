#pragma once

// Append-only event log and the input (action + inject) log. Both are
// newline-delimited JSON with sorted keys, so equal logs are equal bytes.

#include <string>
#include <string_view>
#include <vector>

#include "medevac/scenario.h"

namespace medevac {

inline constexpr const char* kEventSchema = "medevac-events/1";
inline constexpr const char* kEngineVersion = "medevac-engine/1.0";

namespace ev {
inline constexpr std::string_view RunStarted = "RunStarted";
inline constexpr std::string_view RunEnded = "RunEnded";
inline constexpr std::string_view DayPhaseChanged = "DayPhaseChanged";
inline constexpr std::string_view InjectApplied = "InjectApplied";
inline constexpr std::string_view InjectRejected = "InjectRejected";
inline constexpr std::string_view ActionRejected = "ActionRejected";
inline constexpr std::string_view RingSpawned = "RingSpawned";
inline constexpr std::string_view RingExpired = "RingExpired";
inline constexpr std::string_view CcpStateChanged = "CcpStateChanged";
inline constexpr std::string_view WaveSpawned = "WaveSpawned";
inline constexpr std::string_view PatientSpawned = "PatientSpawned";
inline constexpr std::string_view Departed = "Departed";
inline constexpr std::string_view Arrived = "Arrived";
inline constexpr std::string_view Halted = "Halted";
inline constexpr std::string_view PadQueued = "PadQueued";
inline constexpr std::string_view PadGranted = "PadGranted";
inline constexpr std::string_view PadReleased = "PadReleased";
inline constexpr std::string_view Loaded = "Loaded";
inline constexpr std::string_view UnloadStarted = "UnloadStarted";
inline constexpr std::string_view Unloaded = "Unloaded";
inline constexpr std::string_view Transferred = "Transferred";
inline constexpr std::string_view Treated = "Treated";
inline constexpr std::string_view Died = "Died";
inline constexpr std::string_view DeadRemoved = "DeadRemoved";
inline constexpr std::string_view DeliveredRole3 = "DeliveredRole3";
inline constexpr std::string_view CasevacRequested = "CasevacRequested";
inline constexpr std::string_view CasevacGranted = "CasevacGranted";
inline constexpr std::string_view CasevacDenied = "CasevacDenied";
inline constexpr std::string_view PlatformDespawned = "PlatformDespawned";
inline constexpr std::string_view FacilityDeparted = "FacilityDeparted";
inline constexpr std::string_view FacilityArrived = "FacilityArrived";
}  // namespace ev

struct SimEvent {
  long seq = 0;
  long tick = 0;      // tick during which the event was emitted
  Minutes time = 0.0;  // in-game time of the happening
  std::string kind;
  std::string actor;  // role name, "instructor", or "engine"
  Json data = Json::object();

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

Json to_json(const SimEvent& e);
SimEvent event_from_json(const Json& j);
std::string to_ndjson(const std::vector<SimEvent>& events);
/// Throws std::invalid_argument naming the offending line.
std::vector<SimEvent> events_from_ndjson(std::string_view text);

/// One recorded input: an action or an inject, with its intake tick.
struct InputRecord {
  enum class Kind { Action, Inject };
  long seq = 0;
  long tick = 0;
  Kind kind = Kind::Action;
  std::string issuer;
  Json payload = Json::object();

  friend bool operator==(const InputRecord&, const InputRecord&) = default;
};

Json to_json(const InputRecord& r);
InputRecord input_from_json(const Json& j);
std::string to_ndjson(const std::vector<InputRecord>& inputs);
std::vector<InputRecord> inputs_from_ndjson(std::string_view text);

}  // namespace medevac
