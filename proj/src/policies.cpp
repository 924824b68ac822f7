#include "medevac/policies.h"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>
#include <stdexcept>

namespace medevac {
namespace {

bool idle(const World& w, const PlatformState& p) {
  return p.active() && p.phase == PlatformPhase::Stationary && !p.unloading && p.busy_until <= w.now();
}

ActionRequest make(const std::string& role, const PlatformState& p, Verb verb, Minutes now) {
  ActionRequest a;
  a.actor = role;
  a.platform = p.id;
  a.verb = verb;
  a.issued_at = now;
  return a;
}

std::vector<FacilityRole> pickup_roles(const Scenario& sc, const std::string& role) {
  const RoleAssignment* r = sc.find_role(role);
  if (r && !r->pickup_from.empty()) return r->pickup_from;
  return {FacilityRole::CCP};
}

bool loadable(const World& w, const Patient& p) {
  if (p.dead()) return false;
  if (p.location == PatientLocation::AtCCP) return true;
  if (p.location == PatientLocation::AtFacility) {
    const Facility* f = w.facility_config(p.where);
    return p.treated_at_current_facility && f && care_level(f->role) < 3;
  }
  return false;
}

/// Largest prefix-greedy selection of `ordered` that fits the platform.
std::vector<PatientId> fill(const World& w, const PlatformState& p, const std::vector<PatientId>& ordered) {
  const PlatformSpec& spec = w.spec_of(p);
  const Occupancy cur = manifest_occupancy(w, p);
  int litter = cur.litter;
  int amb = cur.ambulatory;
  std::vector<PatientId> out;
  for (PatientId id : ordered) {
    const Patient& pt = *w.find_patient(id);
    const int l = litter + (pt.kind == PatientKind::Litter ? 1 : 0);
    const int a = amb + (pt.kind == PatientKind::Ambulatory ? 1 : 0);
    if (!check_capacity(spec, l, a)) continue;
    litter = l;
    amb = a;
    out.push_back(id);
  }
  return out;
}

Minutes eta_of(const PlatformState& p, const Route& r, const World& w) {
  const double v = p.speed_kmh > 0 ? p.speed_kmh : w.spec_of(p).cruise_speed_kmh;
  return r.total_distance / v * 60.0;
}

}  // namespace

std::vector<ActionRequest> GreedyPolicy::decide(const World& w, const std::string& role) {
  const Scenario& sc = *w.scenario;
  const Minutes now = w.now();
  std::vector<ActionRequest> out;
  std::vector<const PlatformState*> free;
  const auto pickups = pickup_roles(sc, role);

  // Deliveries first: anything aboard goes to the next level of care.
  for (const auto& p : w.platforms) {
    if (p.owner != role || !idle(w, p)) continue;
    std::vector<PatientId> alive;
    int level = 3;
    for (PatientId id : p.manifest) {
      const Patient& pt = *w.find_patient(id);
      if (pt.dead()) continue;
      alive.push_back(id);
      level = std::min(level, pt.highest_role());
    }
    if (alive.empty()) {
      free.push_back(&p);
      continue;
    }
    const int target = level + 1;
    const Facility* here = sc.find_facility(p.site);
    if (here && care_level(here->role) == target) {
      std::vector<PatientId> drop;
      for (PatientId id : alive) {
        if (w.find_patient(id)->highest_role() == level) drop.push_back(id);
      }
      ActionRequest a = make(role, p, Verb::Unload, now);
      a.patients = drop;
      if (check_action(w, a)) out.push_back(std::move(a));
      continue;
    }
    std::optional<std::pair<Minutes, std::string>> best;
    for (std::size_t i = 0; i < sc.facilities.size(); ++i) {
      const Facility& f = sc.facilities[i];
      if (care_level(f.role) != target || !w.facilities[i].active) continue;
      std::optional<Route> route;
      if (!check_dispatch(w, p, f.id, &route)) continue;
      const Minutes eta = eta_of(p, *route, w);
      if (!best || eta < best->first) best = std::make_pair(eta, f.id);
    }
    if (best) {
      ActionRequest a = make(role, p, Verb::Dispatch, now);
      a.target = best->second;
      out.push_back(std::move(a));
    }
  }
  if (free.empty()) return out;

  std::vector<const Patient*> waiting;
  for (const auto& pt : w.patients) {
    if (!loadable(w, pt)) continue;
    const Facility* f = sc.find_facility(pt.where);
    if (!f || std::find(pickups.begin(), pickups.end(), f->role) == pickups.end()) continue;
    waiting.push_back(&pt);
  }
  std::sort(waiting.begin(), waiting.end(), [&](const Patient* a, const Patient* b) {
    if (triage_ && a->precedence != b->precedence) return a->precedence == Precedence::Urgent;
    const Minutes wa = a->waiting_since.value_or(a->t0);
    const Minutes wb = b->waiting_since.value_or(b->t0);
    if (wa != wb) return wa < wb;
    return a->id < b->id;
  });
  auto at_site = [&](const std::string& site, const std::set<PatientId>& claimed) {
    std::vector<PatientId> ids;
    for (const Patient* pt : waiting) {
      if (pt->where == site && !claimed.count(pt->id)) ids.push_back(pt->id);
    }
    return ids;
  };

  // Platforms already heading to a pickup site claim what they can carry.
  std::set<PatientId> claimed;
  for (const auto& p : w.platforms) {
    if (!p.active() || !p.en_route() || !p.manifest.empty()) continue;
    for (PatientId id : fill(w, p, at_site(p.destination, claimed))) claimed.insert(id);
  }

  for (const Patient* pt : waiting) {
    if (free.empty()) break;
    if (claimed.count(pt->id)) continue;
    const std::string site = pt->where;
    const PlatformState* chosen = nullptr;
    Minutes best = std::numeric_limits<double>::infinity();
    bool on_site = false;
    for (const PlatformState* p : free) {
      if (p->site == site) {
        chosen = p;
        on_site = true;
        break;
      }
      std::optional<Route> route;
      if (!check_dispatch(w, *p, site, &route)) continue;
      const Minutes eta = eta_of(*p, *route, w);
      if (eta < best) {
        best = eta;
        chosen = p;
      }
    }
    if (!chosen) continue;
    const auto load = fill(w, *chosen, at_site(site, claimed));
    if (on_site) {
      ActionRequest a = make(role, *chosen, Verb::Load, now);
      a.patients = load;
      if (!check_action(w, a)) continue;
      out.push_back(std::move(a));
    } else {
      ActionRequest a = make(role, *chosen, Verb::Dispatch, now);
      a.target = site;
      out.push_back(std::move(a));
    }
    for (PatientId id : load) claimed.insert(id);
    std::erase(free, chosen);
  }

  // Idle platforms lift off a pad that someone is queued for and hold at the node.
  for (const PlatformState* p : free) {
    const FacilityState* fs = w.find_facility(p->site);
    if (!fs || fs->pad.waiting.empty()) continue;
    if (std::find(fs->pad.occupied.begin(), fs->pad.occupied.end(), p->id) == fs->pad.occupied.end()) continue;
    ActionRequest a = make(role, *p, Verb::Dispatch, now);
    a.target = sc.find_facility(p->site)->node;
    if (check_action(w, a)) out.push_back(std::move(a));
  }
  return out;
}

std::vector<ActionRequest> RandomLegalPolicy::decide(const World& w, const std::string& role) {
  const Scenario& sc = *w.scenario;
  const Minutes now = w.now();
  std::vector<ActionRequest> out;
  auto subset = [&](std::vector<PatientId> ids) {
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng_.index(i)]);
    const std::size_t k = 1 + rng_.index(std::min<std::size_t>(ids.size(), 4));
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  for (const auto& p : w.platforms) {
    if (p.owner != role || !idle(w, p)) continue;
    std::vector<ActionRequest> options;
    if (!p.site.empty()) {
      std::vector<PatientId> here;
      for (PatientId id : w.patients_at(p.site)) {
        const Patient& pt = *w.find_patient(id);
        if (pt.location == PatientLocation::Delivered) continue;
        here.push_back(id);
      }
      if (!here.empty()) {
        ActionRequest a = make(role, p, Verb::Load, now);
        a.patients = subset(here);
        options.push_back(std::move(a));
      }
      if (!p.manifest.empty()) {
        ActionRequest a = make(role, p, Verb::Unload, now);
        a.patients = subset(p.manifest);
        options.push_back(std::move(a));
      }
      for (const auto& other : w.platforms) {
        if (&other == &p || !other.active() || other.site != p.site) continue;
        std::vector<PatientId> movable = p.manifest;
        for (PatientId id : here) {
          if (w.find_patient(id)->attending_platform == p.id) movable.push_back(id);
        }
        if (movable.empty()) break;
        ActionRequest a = make(role, p, Verb::TransferTo, now);
        a.target = other.id;
        a.patients = subset(movable);
        options.push_back(std::move(a));
        break;
      }
    }
    for (int k = 0; k < 2; ++k) {
      ActionRequest a = make(role, p, Verb::Dispatch, now);
      a.target = sc.facilities[rng_.index(sc.facilities.size())].id;
      options.push_back(std::move(a));
    }
    if (!sc.map.nodes.empty() && rng_.bernoulli(0.1)) {
      ActionRequest a = make(role, p, Verb::Dispatch, now);
      a.target = sc.map.nodes[rng_.index(sc.map.nodes.size())].id;
      options.push_back(std::move(a));
    }
    std::erase_if(options, [&](const ActionRequest& a) { return !check_action(w, a); });
    // Waiting is always an option, weighted like one more candidate.
    const std::size_t pick = rng_.index(options.size() + 1);
    if (pick < options.size()) out.push_back(std::move(options[pick]));
  }
  if (const RoleAssignment* r = sc.find_role(role)) {
    for (const auto& fid : r->owned_facilities) {
      const FacilityState* fs = w.find_facility(fid);
      if (!fs || fs->route || !rng_.bernoulli(0.02) || sc.map.nodes.empty()) continue;
      ActionRequest a;
      a.actor = role;
      a.platform = fid;
      a.verb = Verb::Dispatch;
      a.target = sc.map.nodes[rng_.index(sc.map.nodes.size())].id;
      a.issued_at = now;
      if (check_action(w, a)) out.push_back(std::move(a));
    }
  }
  return out;
}

namespace {

std::string normalize(const std::string& name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (std::isupper(static_cast<unsigned char>(c))) {
      if (i > 0 && name[i - 1] != '_') out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += c == '-' ? '_' : c;
    }
  }
  return out;
}

}  // namespace

bool is_policy_name(const std::string& name) {
  const std::string n = normalize(name);
  return n == "idle" || n == "random_legal" || n == "greedy_nearest" || n == "triage_greedy";
}

std::unique_ptr<Policy> make_policy(const std::string& name, std::uint64_t seed, const std::string& role) {
  const std::string n = normalize(name);
  if (n == "idle") return std::make_unique<IdlePolicy>();
  if (n == "random_legal") return std::make_unique<RandomLegalPolicy>(seed, role);
  if (n == "greedy_nearest") return std::make_unique<GreedyPolicy>(false);
  if (n == "triage_greedy") return std::make_unique<GreedyPolicy>(true);
  throw std::invalid_argument("unknown policy '" + name + "'");
}

}  // namespace medevac
