#pragma once

// Fixed-step authoritative simulation. Happenings inside a tick are resolved
// at their analytic in-game times, so the log does not depend on tick length.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "medevac/events.h"
#include "medevac/rules.h"
#include "medevac/world.h"

namespace medevac {

enum class InjectKind { CcpSetActive, Mascal, CommBlackout, GrantCasevac, DenyCasevac, SpawnRing, DespawnRing };

std::string_view to_string(InjectKind k);
std::optional<InjectKind> parse_inject_kind(std::string_view s);

struct Inject {
  InjectKind kind = InjectKind::CcpSetActive;
  std::string ccp;
  bool active = true;
  long count = 0;
  TimeWindow window;      // CommBlackout
  std::string request;    // Grant/DenyCasevac
  std::optional<ThreatRing> ring;  // SpawnRing; window.start <= now means immediately
  std::string ring_id;    // DespawnRing

  friend bool operator==(const Inject&, const Inject&) = default;
};

Json to_json(const Inject& i);
/// Throws std::invalid_argument on malformed input.
Inject inject_from_json(const Json& j);

enum class DayPhase { Day, Dusk, Night, Dawn };
std::string_view to_string(DayPhase p);

struct DayNightState {
  DayPhase phase = DayPhase::Day;
  double visibility = 1.0;  // in (0, 1]
};

DayNightState day_night_phase(const DayNightConfig& cfg, Minutes t);
/// First phase boundary strictly after t.
Minutes next_phase_boundary(const DayNightConfig& cfg, Minutes t);

struct EngineOptions {
  std::optional<int> tick_seconds;
  std::optional<std::uint64_t> seed;
  std::optional<ScoringMode> scoring;
  /// Assert doctrine invariants after every tick that emitted events.
  bool checker = false;
  /// Compare the event-log fold against live state every N ticks (0 = off).
  long fold_check_every = 0;
};

struct Intake {
  bool accepted = false;
  long seq = 0;
  std::string reason;
};

class Engine {
 public:
  explicit Engine(std::shared_ptr<const Scenario> scenario, EngineOptions opts = {});

  Intake enqueue_action(const ActionRequest& a);
  Intake enqueue_inject(const Inject& i, const std::string& issuer);

  /// Advances `ticks` ticks; a paused engine does not advance.
  void step(long ticks = 1);
  /// Steps until the clock reaches the scenario duration, then ends the run.
  void run_to_end();
  /// Emits RunEnded once; later steps are ignored.
  void finish();
  bool ended() const { return ended_; }
  bool at_end() const;

  void pause() { paused_ = true; }
  void resume() { paused_ = false; }
  bool paused() const { return paused_; }

  const World& world() const { return world_; }
  const Scenario& scenario() const { return *world_.scenario; }
  std::shared_ptr<const Scenario> scenario_ptr() const { return world_.scenario; }
  const std::vector<SimEvent>& events() const { return events_; }
  const std::vector<InputRecord>& inputs() const { return inputs_; }
  const std::vector<std::string>& breaches() const { return breaches_; }
  std::uint64_t seed() const { return seed_; }
  const ScoringMode& scoring() const { return scoring_; }
  long end_tick() const;
  DayNightState day_night() const { return day_night_phase(scenario().day_night, world_.now()); }

  /// Identity stamped into archives: engine version, seed, tick, scoring mode, scenario fingerprint.
  Json manifest() const;

  Json checkpoint() const;
  static Engine restore(std::shared_ptr<const Scenario> scenario, const Json& checkpoint);

  /// Re-runs recorded inputs at their intake ticks. With `until_tick` the
  /// replay stops at that tick (dropping later inputs unless `finish_run`);
  /// without it the replay runs to the end. RunEnded is emitted when the
  /// replay runs to the end or `finish_run` is set.
  static Engine replay(std::shared_ptr<const Scenario> scenario, EngineOptions opts,
                       const std::vector<InputRecord>& inputs, std::optional<long> until_tick = std::nullopt,
                       bool finish_run = false);

 private:
  struct Queued {
    long seq = 0;
    std::string issuer;
    std::optional<ActionRequest> action;
    std::optional<Inject> inject;
  };

  void step_one();
  void emit(Minutes t, std::string_view kind, std::string actor, Json data);
  Intake record_input(InputRecord::Kind kind, const std::string& issuer, Json payload);
  Verdict check_inject(const Inject& i, const std::string& issuer) const;

  void apply_inject(const Queued& q, Minutes t);
  void apply_action(const Queued& q, Minutes t);
  void apply_dispatch(PlatformState& p, const std::string& actor, const std::string& destination, Route route,
                      Minutes t);
  void apply_relocate(const std::string& actor, const std::string& facility, const std::string& node, Route route,
                      Minutes t);

  void phase_day_night(Minutes ts, Minutes te);
  void phase_rings(Minutes ts, Minutes te);
  void phase_waves(Minutes ts, Minutes te);
  void phase_movement(Minutes ts, Minutes te);
  void phase_resolution(Minutes ts, Minutes te);
  void phase_mortality(Minutes te);

  /// raw_size is the wave's Poisson draw; nullopt marks a mascal burst.
  void spawn_patients(const std::string& ccp, const std::vector<PatientDraft>& drafts, Minutes t,
                      std::optional<long> raw_size, const std::string& actor);
  /// Applies any death whose analytic time precedes t.
  bool settle(Patient& p, Minutes t);
  void kill(Patient& p, Minutes at);
  void remove_dead(PlatformState& p, Minutes t);
  void release_pad(PlatformState& p, Minutes t);
  void arrive(PlatformState& p, Minutes t, int depth);
  void try_despawn(PlatformState& p, Minutes t);
  void refresh_ccp_schedule(CcpState& c, Minutes t);
  bool ccp_active_at(const CcpState& c, Minutes t) const;
  Minutes platform_speed(const PlatformState& p, Minutes t) const;
  MapPosition facility_position_at(const FacilityState& f, Minutes t) const;
  MapPosition mover_position(const Route& r, Minutes depart, double speed, Minutes t) const;

  void run_checks();

  World world_;
  std::uint64_t seed_ = 0;
  ScoringMode scoring_;
  EngineOptions opts_;
  MortalityParams mortality_;
  std::vector<SimEvent> events_;
  std::vector<InputRecord> inputs_;
  std::vector<Queued> queue_;
  std::vector<std::string> breaches_;
  std::vector<std::uint8_t> terminal_seen_;
  long next_input_seq_ = 0;
  bool paused_ = false;
  bool ended_ = false;
  std::size_t checked_events_ = 0;
};

}  // namespace medevac
