#include "medevac/world.h"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace medevac {

std::string_view to_string(PlatformPhase p) {
  static constexpr std::array<std::string_view, 4> names{"stationary", "en_route", "queued", "despawned"};
  return names[static_cast<std::size_t>(p)];
}

PlatformState* World::find_platform(std::string_view id) {
  for (auto& p : platforms) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const PlatformState* World::find_platform(std::string_view id) const {
  return const_cast<World*>(this)->find_platform(id);
}

FacilityState* World::find_facility(std::string_view id) {
  for (auto& f : facilities) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

const FacilityState* World::find_facility(std::string_view id) const {
  return const_cast<World*>(this)->find_facility(id);
}

Patient* World::find_patient(PatientId id) {
  if (id == 0 || id > patients.size()) return nullptr;
  return &patients[id - 1];
}

const Patient* World::find_patient(PatientId id) const { return const_cast<World*>(this)->find_patient(id); }

CcpState* World::find_ccp(std::string_view id) {
  for (auto& c : ccps) {
    if (c.ccp == id) return &c;
  }
  return nullptr;
}

const CcpState* World::find_ccp(std::string_view id) const { return const_cast<World*>(this)->find_ccp(id); }

MapPosition World::platform_position(const PlatformState& p) const {
  if (p.phase == PlatformPhase::Stationary || p.phase == PlatformPhase::Queued) {
    if (!p.site.empty()) {
      if (const auto* f = find_facility(p.site)) return f->position;
    }
  }
  return p.position;
}

bool World::blackout_at(Minutes t) const {
  return std::any_of(blackouts.begin(), blackouts.end(), [t](const TimeWindow& w) { return w.contains(t); });
}

std::vector<ThreatRing> World::active_rings(Minutes t) const {
  std::vector<ThreatRing> out;
  for (const auto& r : rings) {
    if (r.ring.active_at(t)) out.push_back(r.ring);
  }
  return out;
}

std::vector<PatientId> World::patients_at(std::string_view site) const {
  std::vector<PatientId> out;
  for (const auto& p : patients) {
    const bool here = p.location == PatientLocation::AtCCP || p.location == PatientLocation::AtFacility ||
                      p.location == PatientLocation::AtExchangePoint;
    if (here && p.where == site) out.push_back(p.id);
  }
  return out;
}

int World::occupancy_at(std::string_view site) const {
  int n = 0;
  for (const auto& p : patients) {
    if ((p.location == PatientLocation::AtFacility || p.location == PatientLocation::AtExchangePoint ||
         p.location == PatientLocation::AtCCP || p.location == PatientLocation::Delivered) &&
        p.where == site) {
      ++n;
    }
  }
  for (const auto& pl : platforms) {
    if (pl.unloading && pl.unloading->site == site) n += static_cast<int>(pl.unloading->patients.size());
  }
  return n;
}

bool World::bound_by_hold(std::string_view platform) const {
  return std::any_of(patients.begin(), patients.end(), [&](const Patient& p) {
    return p.location == PatientLocation::AtExchangePoint && p.attending_platform == platform;
  });
}

}  // namespace medevac

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace medevac {
namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

Json patient_json(const Patient& p) {
  Json j{{"id", p.id},
         {"precedence", std::string(to_string(p.precedence))},
         {"kind", std::string(to_string(p.kind))},
         {"origin_ccp", p.origin_ccp},
         {"t0", p.t0},
         {"t1", opt(p.t1)},
         {"t2", opt(p.t2)},
         {"t3", opt(p.t3)},
         {"location", std::string(to_string(p.location))},
         {"where", p.where},
         {"treated", p.treated_at_current_facility},
         {"ready_at", opt(p.ready_at)},
         {"waiting_since", opt(p.waiting_since)},
         {"attending", p.attending_platform},
         {"died_at", opt(p.died_at)}};
  j["death"] = p.death ? Json{{"t_death1", p.death->t_death1}, {"t_death2", p.death->t_death2}} : Json(nullptr);
  return j;
}

Patient patient_from(const Json& j) {
  Patient p;
  p.id = j.at("id").get<PatientId>();
  p.precedence = *parse_precedence(j.at("precedence").get<std::string>());
  p.kind = *parse_patient_kind(j.at("kind").get<std::string>());
  p.origin_ccp = j.at("origin_ccp").get<std::string>();
  p.t0 = j.at("t0").get<double>();
  p.t1 = opt_from<double>(j.at("t1"));
  p.t2 = opt_from<double>(j.at("t2"));
  p.t3 = opt_from<double>(j.at("t3"));
  p.location = *parse_patient_location(j.at("location").get<std::string>());
  p.where = j.at("where").get<std::string>();
  p.treated_at_current_facility = j.at("treated").get<bool>();
  p.ready_at = opt_from<double>(j.at("ready_at"));
  p.waiting_since = opt_from<double>(j.at("waiting_since"));
  p.attending_platform = j.at("attending").get<std::string>();
  p.died_at = opt_from<double>(j.at("died_at"));
  if (!j.at("death").is_null()) {
    p.death = DeathTimes{j.at("death").at("t_death1").get<double>(), j.at("death").at("t_death2").get<double>()};
  }
  return p;
}

Json pad_json(const PadQueue& q) {
  Json waiting = Json::array();
  for (const auto& w : q.waiting) waiting.push_back({{"platform", w.platform}, {"since", w.since}});
  return {{"occupied", q.occupied}, {"waiting", waiting}};
}

PadQueue pad_from(const Json& j) {
  PadQueue q;
  q.occupied = j.at("occupied").get<std::vector<std::string>>();
  for (const auto& w : j.at("waiting")) q.waiting.push_back({w.at("platform").get<std::string>(), w.at("since").get<double>()});
  return q;
}

Json platform_json(const PlatformState& p) {
  Json j{{"id", p.id},
         {"spec", p.spec},
         {"owner", p.owner},
         {"phase", std::string(to_string(p.phase))},
         {"site", p.site},
         {"position", to_json(p.position)},
         {"route", p.route ? to_json(*p.route) : Json(nullptr)},
         {"depart_time", p.depart_time},
         {"speed_kmh", p.speed_kmh},
         {"destination", p.destination},
         {"halted", p.halted},
         {"manifest", p.manifest},
         {"busy_until", p.busy_until},
         {"casevac", p.casevac},
         {"casevac_expiry", opt(p.casevac_expiry)}};
  if (p.unloading) {
    j["unloading"] = {{"patients", p.unloading->patients},
                      {"site", p.unloading->site},
                      {"completes_at", p.unloading->completes_at}};
  } else {
    j["unloading"] = nullptr;
  }
  return j;
}

PlatformPhase phase_from(const std::string& s) {
  for (auto ph : {PlatformPhase::Stationary, PlatformPhase::EnRoute, PlatformPhase::Queued, PlatformPhase::Despawned}) {
    if (to_string(ph) == s) return ph;
  }
  throw std::invalid_argument("unknown platform phase '" + s + "'");
}

PlatformState platform_from(const Json& j) {
  PlatformState p;
  p.id = j.at("id").get<std::string>();
  p.spec = j.at("spec").get<std::size_t>();
  p.owner = j.at("owner").get<std::string>();
  p.phase = phase_from(j.at("phase").get<std::string>());
  p.site = j.at("site").get<std::string>();
  p.position = position_from_json(j.at("position"));
  if (!j.at("route").is_null()) p.route = route_from_json(j.at("route"));
  p.depart_time = j.at("depart_time").get<double>();
  p.speed_kmh = j.at("speed_kmh").get<double>();
  p.destination = j.at("destination").get<std::string>();
  p.halted = j.at("halted").get<bool>();
  p.manifest = j.at("manifest").get<std::vector<PatientId>>();
  p.busy_until = j.at("busy_until").get<double>();
  p.casevac = j.at("casevac").get<bool>();
  p.casevac_expiry = opt_from<double>(j.at("casevac_expiry"));
  if (!j.at("unloading").is_null()) {
    const auto& u = j.at("unloading");
    p.unloading = PendingUnload{u.at("patients").get<std::vector<PatientId>>(), u.at("site").get<std::string>(),
                                u.at("completes_at").get<double>()};
  }
  return p;
}

Json facility_json(const FacilityState& f) {
  return {{"id", f.id},
          {"active", f.active},
          {"position", to_json(f.position)},
          {"pad", pad_json(f.pad)},
          {"route", f.route ? to_json(*f.route) : Json(nullptr)},
          {"depart_time", f.depart_time}};
}

void facility_from(FacilityState& f, const Json& j) {
  f.active = j.at("active").get<bool>();
  f.position = position_from_json(j.at("position"));
  f.pad = pad_from(j.at("pad"));
  f.route.reset();
  if (!j.at("route").is_null()) f.route = route_from_json(j.at("route"));
  f.depart_time = j.at("depart_time").get<double>();
}

Json draft_json(const PatientDraft& d) {
  Json j{{"precedence", std::string(to_string(d.precedence))}, {"kind", std::string(to_string(d.kind))}, {"t0", d.t0}};
  j["death"] = d.death ? Json{{"t_death1", d.death->t_death1}, {"t_death2", d.death->t_death2}} : Json(nullptr);
  return j;
}

PatientDraft draft_from(const Json& j) {
  PatientDraft d;
  d.precedence = *parse_precedence(j.at("precedence").get<std::string>());
  d.kind = *parse_patient_kind(j.at("kind").get<std::string>());
  d.t0 = j.at("t0").get<double>();
  if (!j.at("death").is_null()) {
    d.death = DeathTimes{j.at("death").at("t_death1").get<double>(), j.at("death").at("t_death2").get<double>()};
  }
  return d;
}

Json ccp_json(const CcpState& c) {
  Json j{{"ccp", c.ccp},
         {"active", c.active},
         {"override", opt(c.override_active)},
         {"rng_waves", c.rng.waves.state()},
         {"rng_mortality", c.rng.mortality.state()},
         {"mascal_waves", c.mascal_rng.waves.state()},
         {"mascal_mortality", c.mascal_rng.mortality.state()}};
  if (c.pending) {
    Json drafts = Json::array();
    for (const auto& d : c.pending->patients) drafts.push_back(draft_json(d));
    j["pending"] = {{"time", c.pending->time}, {"raw_size", c.pending->raw_size}, {"patients", drafts}};
  } else {
    j["pending"] = nullptr;
  }
  return j;
}

void ccp_from(CcpState& c, const Json& j) {
  c.active = j.at("active").get<bool>();
  c.override_active = opt_from<bool>(j.at("override"));
  c.rng.waves.set_state(j.at("rng_waves").get<std::string>());
  c.rng.mortality.set_state(j.at("rng_mortality").get<std::string>());
  c.mascal_rng.waves.set_state(j.at("mascal_waves").get<std::string>());
  c.mascal_rng.mortality.set_state(j.at("mascal_mortality").get<std::string>());
  c.pending.reset();
  if (!j.at("pending").is_null()) {
    Wave w;
    w.time = j.at("pending").at("time").get<double>();
    w.raw_size = j.at("pending").at("raw_size").get<long>();
    for (const auto& d : j.at("pending").at("patients")) w.patients.push_back(draft_from(d));
    c.pending = std::move(w);
  }
}

constexpr std::array<std::string_view, 3> kCasevacStatus{"pending", "granted", "denied"};

}  // namespace

Json world_to_json(const World& w) {
  Json j;
  j["tick"] = w.tick;
  j["tick_seconds"] = w.tick_seconds;
  j["patients"] = Json::array();
  for (const auto& p : w.patients) j["patients"].push_back(patient_json(p));
  j["platforms"] = Json::array();
  for (const auto& p : w.platforms) j["platforms"].push_back(platform_json(p));
  j["facilities"] = Json::array();
  for (const auto& f : w.facilities) j["facilities"].push_back(facility_json(f));
  j["ccps"] = Json::array();
  for (const auto& c : w.ccps) j["ccps"].push_back(ccp_json(c));
  j["rings"] = Json::array();
  for (const auto& r : w.rings) {
    j["rings"].push_back({{"ring", to_json(r.ring)}, {"announced", r.announced}, {"expired", r.expired}});
  }
  j["spawner"] = w.spawner.to_json();
  j["blackouts"] = Json::array();
  for (const auto& b : w.blackouts) j["blackouts"].push_back({b.start, b.end});
  j["casevac_requests"] = Json::array();
  for (const auto& r : w.casevac_requests) {
    j["casevac_requests"].push_back({{"id", r.id},
                                     {"role", r.role},
                                     {"details", r.details},
                                     {"at", r.at},
                                     {"status", std::string(kCasevacStatus[static_cast<std::size_t>(r.status)])},
                                     {"platform", r.platform}});
  }
  j["evac_requests"] = Json::array();
  for (const auto& r : w.evac_requests) {
    j["evac_requests"].push_back({{"id", r.id},
                                  {"ccp", r.ccp},
                                  {"at", r.at},
                                  {"patients", r.patients},
                                  {"urgent", r.urgent},
                                  {"priority", r.priority},
                                  {"litter", r.litter},
                                  {"ambulatory", r.ambulatory}});
  }
  j["next_request_id"] = w.next_request_id;
  j["casevac_counter"] = w.casevac_counter;
  j["casevac_request_counter"] = w.casevac_request_counter;
  return j;
}

void world_from_json(World& w, const Json& j) {
  w.tick = j.at("tick").get<long>();
  w.tick_seconds = j.at("tick_seconds").get<int>();
  w.patients.clear();
  for (const auto& p : j.at("patients")) w.patients.push_back(patient_from(p));
  w.platforms.clear();
  for (const auto& p : j.at("platforms")) w.platforms.push_back(platform_from(p));
  const auto& facs = j.at("facilities");
  if (facs.size() != w.facilities.size()) throw std::invalid_argument("checkpoint facility count mismatch");
  for (std::size_t i = 0; i < facs.size(); ++i) facility_from(w.facilities[i], facs[i]);
  const auto& ccps = j.at("ccps");
  if (ccps.size() != w.ccps.size()) throw std::invalid_argument("checkpoint CCP count mismatch");
  for (std::size_t i = 0; i < ccps.size(); ++i) ccp_from(w.ccps[i], ccps[i]);
  w.rings.clear();
  for (const auto& r : j.at("rings")) {
    w.rings.push_back({ring_from_json(r.at("ring")), r.at("announced").get<bool>(), r.at("expired").get<bool>()});
  }
  w.spawner.restore(j.at("spawner"));
  w.blackouts.clear();
  for (const auto& b : j.at("blackouts")) w.blackouts.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  w.casevac_requests.clear();
  for (const auto& r : j.at("casevac_requests")) {
    CasevacRequest c;
    c.id = r.at("id").get<std::string>();
    c.role = r.at("role").get<std::string>();
    c.details = r.at("details").get<std::string>();
    c.at = r.at("at").get<double>();
    const auto status = r.at("status").get<std::string>();
    for (std::size_t i = 0; i < kCasevacStatus.size(); ++i) {
      if (kCasevacStatus[i] == status) c.status = static_cast<CasevacRequest::Status>(i);
    }
    c.platform = r.at("platform").get<std::string>();
    w.casevac_requests.push_back(std::move(c));
  }
  w.evac_requests.clear();
  for (const auto& r : j.at("evac_requests")) {
    EvacRequest e;
    e.id = r.at("id").get<long>();
    e.ccp = r.at("ccp").get<std::string>();
    e.at = r.at("at").get<double>();
    e.patients = r.at("patients").get<std::vector<PatientId>>();
    e.urgent = r.at("urgent").get<int>();
    e.priority = r.at("priority").get<int>();
    e.litter = r.at("litter").get<int>();
    e.ambulatory = r.at("ambulatory").get<int>();
    w.evac_requests.push_back(std::move(e));
  }
  w.next_request_id = j.at("next_request_id").get<long>();
  w.casevac_counter = j.at("casevac_counter").get<long>();
  w.casevac_request_counter = j.at("casevac_request_counter").get<long>();
}

}  // namespace medevac
