#include "medevac/observation.h"

#include <algorithm>

#include "medevac/rules.h"
#include "medevac/scoring.h"

namespace medevac {
namespace {

Json pos_json(Vec2 p) { return Json::array({p.x, p.y}); }

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json patient_detail(const Patient& p) {
  return {{"id", p.id},
          {"precedence", std::string(to_string(p.precedence))},
          {"kind", std::string(to_string(p.kind))},
          {"location", std::string(to_string(p.location))},
          {"where", p.where},
          {"highest_role", p.highest_role()},
          {"treated", p.treated_at_current_facility}};
}

Json instructor_patient(const Patient& p) {
  Json j = patient_detail(p);
  j["t0"] = p.t0;
  j["t1"] = opt(p.t1);
  j["t2"] = opt(p.t2);
  j["t3"] = opt(p.t3);
  j["died_at"] = opt(p.died_at);
  j["origin_ccp"] = p.origin_ccp;
  return j;
}

Json casualty_counts(const World& w, std::string_view site) {
  Json j = Json::object();
  int urgent = 0;
  int priority = 0;
  int litter = 0;
  int ambulatory = 0;
  for (PatientId id : w.patients_at(site)) {
    const Patient& p = *w.find_patient(id);
    (p.precedence == Precedence::Urgent ? urgent : priority) += 1;
    (p.kind == PatientKind::Litter ? litter : ambulatory) += 1;
  }
  j["count"] = urgent + priority;
  j["urgent"] = urgent;
  j["priority"] = priority;
  j["litter"] = litter;
  j["ambulatory"] = ambulatory;
  return j;
}

}  // namespace

Km observation_radius(const Scenario& sc, Minutes t) {
  return sc.observation.radius * day_night_phase(sc.day_night, t).visibility;
}

bool site_observed(const World& w, std::string_view site, Minutes t) {
  const FacilityState* target = w.find_facility(site);
  if (!target) return false;
  const Km r = observation_radius(*w.scenario, t);
  for (const auto& p : w.platforms) {
    if (!p.active()) continue;
    if (p.site == site) return true;
    if (distance(w.platform_position(p).pos, target->position.pos) <= r) return true;
  }
  for (const auto& f : w.facilities) {
    if (f.role == FacilityRole::CCP || !f.active) continue;
    if (distance(f.position.pos, target->position.pos) <= r) return true;
  }
  return false;
}

bool sees_everything(const Scenario& sc, std::string_view role) {
  const RoleAssignment* r = sc.find_role(role);
  return r && (r->permissions.sees_all || r->permissions.can_inject);
}

Json view_for(const World& w, const std::string& role, const ScoringMode& mode) {
  const Scenario& sc = *w.scenario;
  const Minutes t = w.now();
  const bool full = sees_everything(sc, role);
  const auto dn = day_night_phase(sc.day_night, t);

  Json platforms = Json::object();
  for (const auto& p : w.platforms) {
    if (!p.active()) continue;
    const MapPosition pos = w.platform_position(p);
    Json j{{"id", p.id}, {"owner", p.owner}, {"position", pos_json(pos.pos)}};
    if (full || p.owner == role) {
      const PlatformSpec& spec = w.spec_of(p);
      const Occupancy occ = manifest_occupancy(w, p);
      Json manifest = Json::array();
      for (PatientId id : p.manifest) manifest.push_back(patient_detail(*w.find_patient(id)));
      j["spec"] = spec.id;
      j["class"] = std::string(to_string(spec.cls));
      j["phase"] = std::string(to_string(p.phase));
      j["site"] = p.site;
      j["destination"] = p.en_route() ? Json(p.destination) : Json(nullptr);
      j["halted"] = p.halted;
      j["busy_until"] = p.busy_until;
      j["unloading"] = p.unloading.has_value();
      j["capacity"] = {{"litter", spec.litter_capacity},
                       {"ambulatory", spec.ambulatory_capacity},
                       {"seats", spec.total_seats()},
                       {"used_litter", occ.litter},
                       {"used_seats", occ.seats}};
      j["manifest"] = manifest;
      j["casevac"] = p.casevac;
      j["expires_at"] = opt(p.casevac_expiry);
    }
    platforms[p.id] = j;
  }

  Json facilities = Json::object();
  Json casualties = Json::object();
  for (std::size_t i = 0; i < w.facilities.size(); ++i) {
    const auto& f = w.facilities[i];
    const auto& cfg = sc.facilities[i];
    Json j{{"id", f.id},
           {"role", std::string(to_string(f.role))},
           {"position", pos_json(f.position.pos)},
           {"moving", f.route.has_value()}};
    if (full) {
      j["active"] = f.active;
      j["pad_queue"] = f.pad.waiting.size();
      j["beds"] = opt(cfg.bed_capacity);
      j["occupancy"] = w.occupancy_at(f.id);
    }
    facilities[f.id] = j;
    Json c{{"site", f.id}};
    if (full || site_observed(w, f.id, t)) c.update(casualty_counts(w, f.id));
    casualties[f.id] = c;
  }

  Json rings = Json::array();
  for (const auto& r : w.rings) {
    if (r.announced && !r.expired && r.ring.active_at(t)) rings.push_back(to_json(r.ring));
  }

  const bool reveal = full || sc.observation.requests_reveal_precedence;
  Json requests = Json::array();
  for (const auto& r : w.evac_requests) {
    Json j{{"id", r.id}, {"ccp", r.ccp}, {"at", r.at}, {"size", r.patients.size()}};
    if (reveal) {
      j["urgent"] = r.urgent;
      j["priority"] = r.priority;
      j["litter"] = r.litter;
      j["ambulatory"] = r.ambulatory;
    }
    requests.push_back(j);
  }

  Json casevac = Json::array();
  for (const auto& r : w.casevac_requests) {
    if (!full && r.role != role) continue;
    static constexpr const char* kStatus[] = {"pending", "granted", "denied"};
    casevac.push_back({{"id", r.id},
                       {"role", r.role},
                       {"details", r.details},
                       {"at", r.at},
                       {"status", kStatus[static_cast<int>(r.status)]},
                       {"platform", r.platform}});
  }

  Json view{{"role", role},
            {"tick", w.tick},
            {"time", t},
            {"day_phase", std::string(to_string(dn.phase))},
            {"visibility", dn.visibility},
            {"observation_radius", observation_radius(sc, t)},
            {"blackout", w.blackout_at(t)},
            {"platforms", platforms},
            {"facilities", facilities},
            {"casualties", casualties},
            {"rings", rings},
            {"evac_requests", requests},
            {"casevac_requests", casevac}};
  if (full) {
    Json patients = Json::array();
    for (const auto& p : w.patients) patients.push_back(instructor_patient(p));
    Json ccps = Json::object();
    for (const auto& c : w.ccps) ccps[c.ccp] = c.active;
    view["patients"] = patients;
    view["ccps"] = ccps;
    view["score"] = to_json(live_score(w, mode));
  }
  return view;
}

namespace {

bool owns_platform(const World& w, std::string_view role, const Json& id) {
  if (!id.is_string()) return false;
  const PlatformState* p = w.find_platform(id.get<std::string>());
  return p && p->owner == role;
}

bool owns_field(const World& w, std::string_view role, const Json& data, const char* key) {
  return data.contains(key) && owns_platform(w, role, data[key]);
}

}  // namespace

std::optional<Json> event_for_role(const World& w, const SimEvent& e, std::string_view role) {
  Json j = to_json(e);
  Json& d = j["data"];
  if (e.kind == ev::PatientSpawned && d.contains("death")) d.erase("death");
  if (sees_everything(*w.scenario, role)) return j;

  const std::string_view k = e.kind;
  if (k == ev::RunStarted) {
    d.erase("seed");
    return j;
  }
  if (k == ev::RunEnded || k == ev::DayPhaseChanged || k == ev::RingSpawned || k == ev::RingExpired ||
      k == ev::FacilityDeparted || k == ev::FacilityArrived) {
    return j;
  }
  if (k == ev::WaveSpawned) {
    d.erase("raw_size");
    d.erase("mascal");
    if (!w.scenario->observation.requests_reveal_precedence) {
      for (const char* f : {"urgent", "priority", "litter", "ambulatory"}) d.erase(f);
    }
    return j;
  }
  if (k == ev::ActionRejected) {
    if (e.actor == role) return j;
    return std::nullopt;
  }
  if (k == ev::CasevacRequested || k == ev::CasevacDenied) {
    if (d.value("role", "") == role) return j;
    return std::nullopt;
  }
  if (k == ev::CasevacGranted) {
    if (d.value("owner", "") == role) return j;
    return std::nullopt;
  }
  if (k == ev::Died) {
    if (owns_field(w, role, d, "where")) return j;
    return std::nullopt;
  }
  if (k == ev::Halted && d.contains("facility")) return j;
  if (k == ev::Transferred) {
    if (owns_field(w, role, d, "from") || owns_field(w, role, d, "to")) return j;
    return std::nullopt;
  }
  if (k == ev::Departed || k == ev::Arrived || k == ev::Halted || k == ev::PadQueued || k == ev::PadGranted ||
      k == ev::PadReleased || k == ev::Loaded || k == ev::UnloadStarted || k == ev::Unloaded ||
      k == ev::DeadRemoved || k == ev::PlatformDespawned) {
    if (owns_field(w, role, d, "platform")) return j;
    return std::nullopt;
  }
  // Patient spawns, treatment, injects and CCP schedule changes stay with full-view roles.
  return std::nullopt;
}

}  // namespace medevac
