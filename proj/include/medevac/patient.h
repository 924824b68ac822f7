#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "medevac/scenario.h"

namespace medevac {

using PatientId = std::uint32_t;

/// Budgets sampled once per urgent casualty.
struct DeathTimes {
  /// Lifespan from initialization if Role 1 care is never reached.
  Minutes t_death1 = 0.0;
  /// Additional lifespan granted from the moment Role 1 care is reached.
  Minutes t_death2 = 0.0;
  friend bool operator==(const DeathTimes&, const DeathTimes&) = default;
};

enum class PatientLocation { AtCCP, Onboard, AtFacility, AtExchangePoint, Dead, Delivered };

std::string_view to_string(PatientLocation l);
std::optional<PatientLocation> parse_patient_location(std::string_view s);

struct Patient {
  PatientId id = 0;
  Precedence precedence = Precedence::Priority;
  PatientKind kind = PatientKind::Ambulatory;
  std::string origin_ccp;
  Minutes t0 = 0.0;
  std::optional<Minutes> t1;
  std::optional<Minutes> t2;
  std::optional<Minutes> t3;
  std::optional<DeathTimes> death;  // set iff precedence == Urgent

  PatientLocation location = PatientLocation::AtCCP;
  /// Platform id when Onboard, facility id when AtCCP/AtFacility/AtExchangePoint.
  std::string where;
  bool treated_at_current_facility = false;
  /// End of the treatment dwell at the current facility.
  std::optional<Minutes> ready_at;
  /// Start of the current wait for pickup (spawn at a CCP, treatment end at a facility).
  std::optional<Minutes> waiting_since;
  /// Platform that dropped the patient at an exchange point.
  std::string attending_platform;
  std::optional<Minutes> died_at;

  int highest_role() const { return t3 ? 3 : t2 ? 2 : t1 ? 1 : 0; }
  bool alive() const { return location != PatientLocation::Dead; }
  bool dead() const { return location == PatientLocation::Dead; }
  /// Scorable: dead, or reached Role 2.
  bool terminal() const { return dead() || t2.has_value(); }

  friend bool operator==(const Patient&, const Patient&) = default;
};

}  // namespace medevac
