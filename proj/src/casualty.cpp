#include "medevac/casualty.h"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace medevac {

namespace {
constexpr std::array<std::string_view, 6> kLocationNames{"at_ccp", "onboard", "at_facility", "at_exchange_point",
                                                          "dead", "delivered"};
}

std::string_view to_string(PatientLocation l) { return kLocationNames[static_cast<std::size_t>(l)]; }

std::optional<PatientLocation> parse_patient_location(std::string_view s) {
  for (std::size_t i = 0; i < kLocationNames.size(); ++i) {
    if (kLocationNames[i] == s) return static_cast<PatientLocation>(i);
  }
  return std::nullopt;
}

MortalityParams MortalityParams::from_standards(Minutes e_s1, Minutes e_s2) {
  if (!(e_s1 > 0.0) || !(e_s2 > 0.0)) throw std::domain_error("evacuation standards must be positive");
  return {kGoldenHourHazard / e_s1, kGoldenHourHazard / e_s2, e_s1, e_s2};
}

DeathTimes sample_death_times(const MortalityParams& params, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("sample_death_times: u must lie in (0, 1)");
  const double t1 = -std::log(u) / params.lambda1;
  // lambda1 / lambda2 == e_s2 / e_s1; scaling t1 keeps the ratio exact.
  return {t1, t1 * (params.e_s2 / params.e_s1)};
}

MortalityOutcome check_mortality(const Patient& p, Minutes now) {
  if (p.precedence != Precedence::Urgent || !p.death) {
    throw std::logic_error("check_mortality: patient " + std::to_string(p.id) + " carries no death times");
  }
  using Status = MortalityOutcome::Status;
  if (p.t2) return {Status::SurvivedToRole2, 0.0};
  const double elapsed = now - p.t0;
  if (!p.t1) {
    if (elapsed > p.death->t_death1) return {Status::DiedPreRole1, p.t0 + p.death->t_death1};
    return {Status::Alive, 0.0};
  }
  if (elapsed > (*p.t1 - p.t0) + p.death->t_death2) return {Status::DiedPreRole2, *p.t1 + p.death->t_death2};
  return {Status::Alive, 0.0};
}

CasualtyRng::CasualtyRng(std::uint64_t seed, std::string_view ccp, std::string_view purpose)
    : waves(seed, std::string(purpose) + ".waves", ccp), mortality(seed, std::string(purpose) + ".mortality", ccp) {}

bool stream_active_at(const CasualtyStreamParams& stream, Minutes t) {
  if (stream.activation_windows.empty()) return true;
  return std::any_of(stream.activation_windows.begin(), stream.activation_windows.end(),
                     [t](const TimeWindow& w) { return w.contains(t); });
}

Minutes draw_wave_gap(const CasualtyStreamParams& stream, RngStream& rng) {
  return rng.exponential(stream.mean_wave_interval / stream.rate_multiplier);
}

PatientDraft draw_patient(const CasualtyStreamParams& stream, const MortalityParams& mortality, CasualtyRng& rng,
                          Minutes t0) {
  PatientDraft d;
  d.t0 = t0;
  d.precedence = rng.waves.bernoulli(stream.urgent_fraction) ? Precedence::Urgent : Precedence::Priority;
  d.kind = rng.waves.bernoulli(stream.litter_fraction) ? PatientKind::Litter : PatientKind::Ambulatory;
  if (d.precedence == Precedence::Urgent) d.death = sample_death_times(mortality, rng.mortality.uniform01());
  return d;
}

Wave draw_wave(const CasualtyStreamParams& stream, const MortalityParams& mortality, CasualtyRng& rng,
               Minutes wave_time) {
  Wave w;
  w.time = wave_time;
  w.raw_size = rng.waves.poisson(stream.mean_wave_size);
  const long n = std::max(1L, w.raw_size);
  w.patients.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) w.patients.push_back(draw_patient(stream, mortality, rng, wave_time));
  return w;
}

std::optional<Wave> next_wave(const CasualtyStreamParams& stream, const MortalityParams& mortality,
                              CasualtyRng& rng, Minutes now) {
  if (!stream_active_at(stream, now)) return std::nullopt;
  const Minutes gap = draw_wave_gap(stream, rng.waves);
  return draw_wave(stream, mortality, rng, now + gap);
}

MascalResult mascal_burst(const CasualtyStreamParams& stream, const MortalityParams& mortality, bool ccp_active,
                          long n, CasualtyRng& rng, Minutes now) {
  MascalResult r;
  if (n < 1) {
    r.verdict = Verdict::reject("mascal size must be at least 1");
    return r;
  }
  if (!ccp_active) {
    r.verdict = Verdict::reject("ccp " + stream.ccp + " is inactive");
    return r;
  }
  r.patients.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) r.patients.push_back(draw_patient(stream, mortality, rng, now));
  return r;
}

}  // namespace medevac
