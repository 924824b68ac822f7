#pragma once

// Casualty generation per CCP and the two-clock urgent mortality model.

#include <cmath>
#include <vector>

#include "medevac/patient.h"
#include "medevac/random.h"
#include "medevac/scenario.h"
#include "medevac/verdict.h"

namespace medevac {

/// -ln(0.8): the golden-hour calibration puts 20% of deaths inside one standard.
inline const double kGoldenHourHazard = -std::log(0.8);

struct MortalityParams {
  double lambda1 = 0.0;  // per minute
  double lambda2 = 0.0;  // per minute
  Minutes e_s1 = 0.0;
  Minutes e_s2 = 0.0;

  static MortalityParams from_standards(Minutes e_s1, Minutes e_s2);
  static MortalityParams from_config(const MortalityConfig& c) { return from_standards(c.e_s1, c.e_s2); }
};

/// Both budgets derive from the single uniform draw `u` in (0, 1).
/// Throws std::domain_error when u is outside the open interval.
DeathTimes sample_death_times(const MortalityParams& params, double u);

struct MortalityOutcome {
  enum class Status { Alive, DiedPreRole1, DiedPreRole2, SurvivedToRole2 };
  Status status = Status::Alive;
  Minutes at = 0.0;  // death time for the Died* states

  bool died() const { return status == Status::DiedPreRole1 || status == Status::DiedPreRole2; }
};

/// Evaluates the urgent-patient clocks at `now`. Before Role 1 only the
/// first clock applies; after Role 1 arrival only the second. Throws
/// std::logic_error for patients without death times.
MortalityOutcome check_mortality(const Patient& p, Minutes now);

struct PatientDraft {
  Precedence precedence = Precedence::Priority;
  PatientKind kind = PatientKind::Ambulatory;
  Minutes t0 = 0.0;
  std::optional<DeathTimes> death;
};

struct Wave {
  Minutes time = 0.0;
  long raw_size = 0;  // Poisson draw before the minimum-one adjustment
  std::vector<PatientDraft> patients;
};

/// Per-CCP random substreams: wave timing/size/mix, and mortality draws.
struct CasualtyRng {
  RngStream waves;
  RngStream mortality;

  CasualtyRng() = default;
  CasualtyRng(std::uint64_t seed, std::string_view ccp, std::string_view purpose = "ccp");
};

bool stream_active_at(const CasualtyStreamParams& stream, Minutes t);

Minutes draw_wave_gap(const CasualtyStreamParams& stream, RngStream& rng);
PatientDraft draw_patient(const CasualtyStreamParams& stream, const MortalityParams& mortality, CasualtyRng& rng,
                          Minutes t0);
Wave draw_wave(const CasualtyStreamParams& stream, const MortalityParams& mortality, CasualtyRng& rng,
               Minutes wave_time);

/// Next wave after `now`, or nullopt when the CCP is inactive at `now`.
std::optional<Wave> next_wave(const CasualtyStreamParams& stream, const MortalityParams& mortality,
                              CasualtyRng& rng, Minutes now);

struct MascalResult {
  Verdict verdict;
  std::vector<PatientDraft> patients;
};

/// Mass-casualty burst: n patients at `now` with the stream's mix fractions.
MascalResult mascal_burst(const CasualtyStreamParams& stream, const MortalityParams& mortality, bool ccp_active,
                          long n, CasualtyRng& rng, Minutes now);

}  // namespace medevac
