#pragma once

// Reward function and debrief statistics. Every statistic is a pure function
// of the event log.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medevac/events.h"
#include "medevac/patient.h"
#include "medevac/world.h"

namespace medevac {

inline constexpr double kDeathScore = -10.0;

/// Score for a patient who reached Role 2 `dt` minutes after initialization.
double delivery_score(const PrecedenceSpec& spec, const ScoringMode& mode, Minutes dt);
/// Throws std::logic_error for a patient that is neither dead nor past Role 2.
double patient_score(const Patient& p, const PrecedenceSpec& spec, const ScoringMode& mode);

struct ScoreBoard {
  double score = 0.0;
  long spawned = 0;
  long saves = 0;   // reached Role 3
  long deaths = 0;
  long alive = 0;   // still in the network
  friend bool operator==(const ScoreBoard&, const ScoreBoard&) = default;
};

Json to_json(const ScoreBoard& b);
ScoreBoard score_screen(const std::vector<SimEvent>& log);
/// Running score over the live world (terminal patients only).
ScoreBoard live_score(const World& w, const ScoringMode& mode);

/// Mean with a normal-approximation 95% interval; the interval is absent for n < 2.
struct MeanCI {
  long n = 0;
  double mean = 0.0;
  std::optional<double> half_width;
  friend bool operator==(const MeanCI&, const MeanCI&) = default;
};

MeanCI mean_ci(const std::vector<double>& xs);
Json to_json(const MeanCI& m);

struct DelayRecord {
  PatientId patient = 0;
  std::string node;
  Precedence precedence = Precedence::Priority;
  Minutes delay = 0.0;
  /// Wait still open at run end, or ended by death.
  bool censored = false;
  friend bool operator==(const DelayRecord&, const DelayRecord&) = default;
};

struct DelayGroup {
  std::string node;
  Precedence precedence = Precedence::Priority;
  MeanCI stats;      // uncensored records only
  long censored = 0;
  friend bool operator==(const DelayGroup&, const DelayGroup&) = default;
};

struct DelayStats {
  std::vector<DelayRecord> records;  // order of wait closure; waits open at run end come last
  std::vector<DelayGroup> groups;    // sorted by (node, precedence)
  friend bool operator==(const DelayStats&, const DelayStats&) = default;
};

DelayStats delay_stats(const std::vector<SimEvent>& log);

struct EvacGroup {
  Precedence precedence = Precedence::Priority;
  Minutes standard = 0.0;
  MeanCI stats;
  long compliant = 0;  // t2 - t0 <= standard
  friend bool operator==(const EvacGroup&, const EvacGroup&) = default;
};

struct EvacRecord {
  PatientId patient = 0;
  Precedence precedence = Precedence::Priority;
  Minutes evac_time = 0.0;
  friend bool operator==(const EvacRecord&, const EvacRecord&) = default;
};

struct EvacStats {
  std::vector<EvacRecord> records;
  std::vector<EvacGroup> groups;  // urgent, priority; only precedences with deliveries
  friend bool operator==(const EvacStats&, const EvacStats&) = default;
};

EvacStats evac_time_stats(const std::vector<SimEvent>& log);

struct CountPoint {
  Minutes t = 0.0;
  long count = 0;
  friend bool operator==(const CountPoint&, const CountPoint&) = default;
};

struct PositionSample {
  Minutes t = 0.0;
  std::string platform;
  Vec2 pos;
  friend bool operator==(const PositionSample&, const PositionSample&) = default;
};

struct Timeseries {
  /// Step-function patient counts per CCP and Role 1 site.
  std::map<std::string, std::vector<CountPoint>> counts;
  std::vector<PositionSample> positions;
};

Timeseries timeseries(const std::vector<SimEvent>& log, Minutes cadence = 5.0);

/// CSV text per statistic: score, delay_records, delays, evac_times,
/// patient_counts, positions.
std::map<std::string, std::string> debrief_tables(const std::vector<SimEvent>& log);
/// Writes one CSV per statistic plus summary.json into `dir`.
void write_debrief(const std::vector<SimEvent>& log, const std::string& dir);
/// The summary document alone.
Json debrief_summary(const std::vector<SimEvent>& log);

}  // namespace medevac
