#include "medevac/rules.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace medevac {
namespace {

constexpr std::array<std::string_view, 6> kVerbNames{"dispatch", "load", "unload", "transfer_to", "wait",
                                                     "request_casevac"};

std::string fmt_seats(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string pid(PatientId id) { return "patient " + std::to_string(id); }

bool has_duplicates(std::span<const PatientId> ids) {
  std::set<PatientId> seen(ids.begin(), ids.end());
  return seen.size() != ids.size();
}

bool owns_facility(const RoleAssignment& role, std::string_view facility) {
  return std::find(role.owned_facilities.begin(), role.owned_facilities.end(), facility) !=
         role.owned_facilities.end();
}

}  // namespace

std::string_view to_string(Verb v) { return kVerbNames[static_cast<std::size_t>(v)]; }

std::optional<Verb> parse_verb(std::string_view s) {
  for (std::size_t i = 0; i < kVerbNames.size(); ++i) {
    if (kVerbNames[i] == s) return static_cast<Verb>(i);
  }
  return std::nullopt;
}

Json to_json(const ActionRequest& a) {
  Json j = Json::object();
  j["actor"] = a.actor;
  j["platform"] = a.platform;
  j["verb"] = std::string(to_string(a.verb));
  j["target"] = a.target;
  j["patients"] = a.patients;
  j["details"] = a.details;
  j["issued_at"] = a.issued_at;
  return j;
}

ActionRequest action_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("action must be an object");
  ActionRequest a;
  try {
    a.actor = j.value("actor", std::string{});
    a.platform = j.value("platform", std::string{});
    const auto verb = parse_verb(j.at("verb").get<std::string>());
    if (!verb) throw std::invalid_argument("unknown verb '" + j.at("verb").get<std::string>() + "'");
    a.verb = *verb;
    a.target = j.value("target", std::string{});
    if (j.contains("patients")) a.patients = j.at("patients").get<std::vector<PatientId>>();
    a.details = j.value("details", std::string{});
    a.issued_at = j.value("issued_at", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed action: ") + e.what());
  }
  return a;
}

Occupancy occupancy_for(const PlatformSpec& spec, int litter, int ambulatory) {
  return {litter, ambulatory, ambulatory + spec.conversion * litter};
}

Occupancy manifest_occupancy(const World& w, const PlatformState& p) {
  int litter = 0;
  int amb = 0;
  for (PatientId id : p.manifest) {
    const Patient* pt = w.find_patient(id);
    if (!pt) continue;
    (pt->kind == PatientKind::Litter ? litter : amb) += 1;
  }
  return occupancy_for(w.spec_of(p), litter, amb);
}

Verdict check_capacity(const PlatformSpec& spec, int litter, int ambulatory) {
  const Occupancy o = occupancy_for(spec, litter, ambulatory);
  if (litter > spec.litter_capacity || o.seats > spec.total_seats() + 1e-9) {
    return Verdict::reject("capacity: litter " + std::to_string(litter) + "/" + std::to_string(spec.litter_capacity) +
                           ", seats " + fmt_seats(o.seats) + "/" + fmt_seats(spec.total_seats()));
  }
  return Verdict::ok();
}

Verdict check_on_site(const World& w, const PlatformState& p, std::string_view site) {
  if (!p.active()) return Verdict::reject("platform " + p.id + " is not in play");
  if (p.phase != PlatformPhase::Stationary || p.site != site) return Verdict::reject("not on site");
  if (p.unloading || p.busy_until > w.now()) return Verdict::reject("busy");
  return Verdict::ok();
}

Verdict check_load(const World& w, const PlatformState& p, std::span<const PatientId> patients,
                   std::string_view site) {
  if (auto v = check_on_site(w, p, site); !v) return v;
  if (patients.empty()) return Verdict::reject("empty load");
  if (has_duplicates(patients)) return Verdict::reject("duplicate patient in request");
  int litter = 0;
  int amb = 0;
  for (PatientId id : patients) {
    const Patient* pt = w.find_patient(id);
    if (!pt) return Verdict::reject("unknown " + pid(id));
    if (pt->dead()) return Verdict::reject(pid(id) + " is dead");
    const bool present = (pt->location == PatientLocation::AtCCP || pt->location == PatientLocation::AtFacility ||
                          pt->location == PatientLocation::AtExchangePoint) &&
                         pt->where == site;
    if (!present) return Verdict::reject(pid(id) + " is not at " + std::string(site));
    if (pt->location == PatientLocation::AtFacility && !pt->treated_at_current_facility) {
      return Verdict::reject(pid(id) + " still in treatment");
    }
    (pt->kind == PatientKind::Litter ? litter : amb) += 1;
  }
  const Occupancy cur = manifest_occupancy(w, p);
  return check_capacity(w.spec_of(p), cur.litter + litter, cur.ambulatory + amb);
}

Verdict check_unload(const World& w, const PlatformState& p, std::span<const PatientId> patients,
                     std::string_view site) {
  if (auto v = check_on_site(w, p, site); !v) return v;
  if (patients.empty()) return Verdict::reject("empty unload");
  if (has_duplicates(patients)) return Verdict::reject("duplicate patient in request");
  const Facility* fac = w.facility_config(site);
  const FacilityState* fs = w.find_facility(site);
  if (!fac || !fs) return Verdict::reject("unknown site " + std::string(site));
  if (fac->role == FacilityRole::CCP) return Verdict::reject("cannot unload at a collection point");
  if (!fs->active) return Verdict::reject("facility " + fac->id + " is inactive");
  const int level = care_level(fac->role);
  for (PatientId id : patients) {
    const Patient* pt = w.find_patient(id);
    if (!pt) return Verdict::reject("unknown " + pid(id));
    if (pt->location != PatientLocation::Onboard || pt->where != p.id) {
      return Verdict::reject(pid(id) + " is not aboard " + p.id);
    }
    if (pt->dead()) return Verdict::reject(pid(id) + " is dead");
    if (level > 0 && pt->highest_role() != level - 1) {
      return Verdict::reject("continuity of care: " + pid(id) + " has reached role " +
                             std::to_string(pt->highest_role()) + ", cannot enter role " + std::to_string(level));
    }
  }
  if (fac->bed_capacity) {
    const int after = w.occupancy_at(site) + static_cast<int>(patients.size());
    if (after > *fac->bed_capacity) {
      return Verdict::reject("beds: " + std::to_string(after) + "/" + std::to_string(*fac->bed_capacity));
    }
  }
  return Verdict::ok();
}

Verdict check_transfer(const World& w, std::string_view point, const PlatformState& from, const PlatformState& to,
                       std::span<const PatientId> patients) {
  const Facility* fac = w.facility_config(point);
  if (!fac || !is_exchange_point(fac->role)) return Verdict::reject("transfers happen only at an exchange point");
  if (from.id == to.id) return Verdict::reject("cannot transfer to the same platform");
  if (auto v = check_on_site(w, from, point); !v) return Verdict::reject("sender: " + v.reason);
  if (auto v = check_on_site(w, to, point); !v) return Verdict::reject("receiver: " + v.reason);
  if (patients.empty()) return Verdict::reject("empty transfer");
  if (has_duplicates(patients)) return Verdict::reject("duplicate patient in request");
  int litter = 0;
  int amb = 0;
  for (PatientId id : patients) {
    const Patient* pt = w.find_patient(id);
    if (!pt) return Verdict::reject("unknown " + pid(id));
    if (pt->dead()) return Verdict::reject(pid(id) + " is dead");
    const bool aboard = pt->location == PatientLocation::Onboard && pt->where == from.id;
    const bool held = pt->location == PatientLocation::AtExchangePoint && pt->where == point &&
                      pt->attending_platform == from.id;
    if (!aboard && !held) return Verdict::reject(pid(id) + " is not in the care of " + from.id);
    (pt->kind == PatientKind::Litter ? litter : amb) += 1;
  }
  const Occupancy cur = manifest_occupancy(w, to);
  return check_capacity(w.spec_of(to), cur.litter + litter, cur.ambulatory + amb);
}

std::optional<DispatchTarget> resolve_target(const World& w, std::string_view id) {
  if (const FacilityState* f = w.find_facility(id)) return DispatchTarget{f->position, f->id};
  if (auto n = w.scenario->map.node_index(id)) {
    return DispatchTarget{MapPosition::at_node(w.scenario->map, *n), {}};
  }
  return std::nullopt;
}

bool pad_applies(const Facility& f, const PlatformSpec& spec) { return is_air(spec.cls) && f.pad_slots.has_value(); }

Verdict check_dispatch(const World& w, const PlatformState& p, std::string_view destination,
                       std::optional<Route>* route) {
  if (!p.active()) return Verdict::reject("platform " + p.id + " is not in play");
  if (p.unloading || p.busy_until > w.now()) return Verdict::reject("busy");
  if (w.bound_by_hold(p.id)) return Verdict::reject("attended transfer: patients left at an exchange point");
  const auto target = resolve_target(w, destination);
  if (!target) return Verdict::reject("unknown destination " + std::string(destination));
  if (!target->facility.empty() && p.phase != PlatformPhase::EnRoute && p.site == target->facility) {
    return Verdict::reject("already at " + target->facility);
  }
  const PlatformSpec& spec = w.spec_of(p);
  if (!target->facility.empty()) {
    const Facility* fac = w.facility_config(target->facility);
    if (pad_applies(*fac, spec) && *fac->pad_slots == 0) return Verdict::reject("no landing pad at " + fac->id);
  }
  const MapPosition from = w.platform_position(p);
  if (from == target->position) {
    if (route) *route = Route{route_mode_for(spec.cls), from, target->position, {}, 0.0, 0.0};
    return Verdict::ok();
  }
  std::optional<Route> r;
  try {
    const auto rings = w.active_rings(w.now());
    r = plan_route(w.scenario->map, spec, from, target->position, rings, w.now());
  } catch (const std::invalid_argument&) {
    r.reset();
  }
  if (!r) return Verdict::reject("unreachable");
  if (route) *route = std::move(r);
  return Verdict::ok();
}

PlatformSpec facility_motion_spec(const Facility& f) {
  PlatformSpec s;
  s.id = f.id;
  s.cls = PlatformClass::Ship;
  s.cruise_speed_kmh = f.speed_kmh;
  return s;
}

Verdict check_relocate(const World& w, std::string_view role, std::string_view facility, std::string_view node,
                       std::optional<Route>* route) {
  const RoleAssignment* r = w.scenario->find_role(role);
  const Facility* fac = w.facility_config(facility);
  const FacilityState* fs = w.find_facility(facility);
  if (!r || !fac || !fs || !owns_facility(*r, facility)) return Verdict::reject("ownership");
  if (!fac->mobile) return Verdict::reject("facility " + fac->id + " is fixed");
  const auto n = w.scenario->map.node_index(node);
  if (!n) return Verdict::reject("unknown destination " + std::string(node));
  const MapPosition to = MapPosition::at_node(w.scenario->map, *n);
  if (fs->position == to) return Verdict::reject("already at " + std::string(node));
  std::optional<Route> plan;
  try {
    const auto rings = w.active_rings(w.now());
    plan = plan_route(w.scenario->map, facility_motion_spec(*fac), fs->position, to, rings, w.now());
  } catch (const std::invalid_argument&) {
    plan.reset();
  }
  if (!plan) return Verdict::reject("unreachable");
  if (route) *route = std::move(plan);
  return Verdict::ok();
}

Verdict check_action(const World& w, const ActionRequest& a) {
  const RoleAssignment* role = w.scenario->find_role(a.actor);
  if (!role) return Verdict::reject("unknown role " + a.actor);
  if (a.verb == Verb::RequestCasevac) {
    if (w.scenario->casevac.spec.empty()) return Verdict::reject("casevac unavailable in this scenario");
    return Verdict::ok();
  }
  const PlatformState* p = w.find_platform(a.platform);
  if (!p) {
    if (a.verb == Verb::Dispatch && w.find_facility(a.platform)) return check_relocate(w, a.actor, a.platform, a.target);
    return Verdict::reject("ownership");
  }
  if (p->owner != a.actor) return Verdict::reject("ownership");
  if (!p->active()) return Verdict::reject("platform " + p->id + " is not in play");
  switch (a.verb) {
    case Verb::Dispatch:
      return check_dispatch(w, *p, a.target);
    case Verb::Load:
      return check_load(w, *p, a.patients, p->site);
    case Verb::Unload:
      return check_unload(w, *p, a.patients, p->site);
    case Verb::TransferTo: {
      const PlatformState* to = w.find_platform(a.target);
      if (!to || !to->active()) return Verdict::reject("receiver " + a.target + " absent");
      return check_transfer(w, p->site, *p, *to, a.patients);
    }
    case Verb::Wait:
      return Verdict::ok();
    case Verb::RequestCasevac:
      break;
  }
  return Verdict::ok();
}

PadArrival pad_arrive(PadQueue& q, std::optional<int> slots, const std::string& platform, Minutes at) {
  if (!slots || static_cast<int>(q.occupied.size()) < *slots) {
    if (q.waiting.empty()) {
      q.occupied.push_back(platform);
      return {true, 0};
    }
  }
  q.waiting.push_back({platform, at});
  return {false, q.waiting.size()};
}

std::vector<PadPromotion> pad_depart(PadQueue& q, std::optional<int> slots, const std::string& platform,
                                     Minutes at) {
  std::erase(q.occupied, platform);
  std::erase_if(q.waiting, [&](const PadQueue::Waiting& wt) { return wt.platform == platform; });
  std::vector<PadPromotion> promoted;
  while (!q.waiting.empty() && (!slots || static_cast<int>(q.occupied.size()) < *slots)) {
    const auto head = q.waiting.front();
    q.waiting.pop_front();
    q.occupied.push_back(head.platform);
    promoted.push_back({head.platform, at - head.since});
  }
  return promoted;
}

std::vector<ExchangeHold> exchange_holds(const World& w) {
  std::map<std::string, ExchangeHold> holds;
  for (const auto& p : w.patients) {
    if (p.location != PatientLocation::AtExchangePoint) continue;
    auto& h = holds[p.where];
    h.point = p.where;
    h.patients.push_back(p.id);
    if (!p.attending_platform.empty() &&
        std::find(h.attending.begin(), h.attending.end(), p.attending_platform) == h.attending.end()) {
      h.attending.push_back(p.attending_platform);
    }
  }
  std::vector<ExchangeHold> out;
  for (auto& [_, h] : holds) out.push_back(std::move(h));
  return out;
}

}  // namespace medevac
