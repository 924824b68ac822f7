#include "medevac/projection.h"

#include <algorithm>

namespace medevac {
namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json patient_json(const std::string& location, const std::string& where, Json t1, Json t2, Json t3, Json died_at,
                  bool treated) {
  return {{"location", location}, {"where", where}, {"t1", std::move(t1)}, {"t2", std::move(t2)},
          {"t3", std::move(t3)},  {"died_at", std::move(died_at)}, {"treated", treated}};
}

}  // namespace

Json live_projection(const World& w) {
  Json patients = Json::object();
  for (const auto& p : w.patients) {
    patients[std::to_string(p.id)] = patient_json(std::string(to_string(p.location)), p.where, opt(p.t1), opt(p.t2),
                                                  opt(p.t3), opt(p.died_at), p.treated_at_current_facility);
  }
  Json platforms = Json::object();
  for (const auto& p : w.platforms) {
    platforms[p.id] = {{"phase", std::string(to_string(p.phase))}, {"site", p.site}, {"manifest", p.manifest}};
  }
  Json ccps = Json::object();
  for (const auto& c : w.ccps) ccps[c.ccp] = c.active;
  std::vector<std::string> rings;
  for (const auto& r : w.rings) {
    if (r.announced && !r.expired) rings.push_back(r.ring.id);
  }
  std::sort(rings.begin(), rings.end());
  return {{"patients", patients}, {"platforms", platforms}, {"ccps", ccps}, {"rings", rings}};
}

void EventFolder::apply(const SimEvent& e) {
  const Json& d = e.data;
  const std::string& k = e.kind;
  if (k == ev::RunStarted) {
    for (const auto& p : d.at("platforms")) {
      platforms_[p.at("id").get<std::string>()] = {p.at("phase").get<std::string>(), p.at("site").get<std::string>(), {}};
    }
    for (const auto& [id, active] : d.at("ccps").items()) ccps_[id] = active.get<bool>();
  } else if (k == ev::PatientSpawned) {
    PatientView v;
    v.where = d.at("ccp").get<std::string>();
    patients_[d.at("patient").get<PatientId>()] = v;
  } else if (k == ev::Loaded) {
    auto& pl = platforms_[d.at("platform").get<std::string>()];
    for (const auto& entry : d.at("patients")) {
      const auto id = entry.at("patient").get<PatientId>();
      auto& pv = patients_[id];
      pv.location = "onboard";
      pv.where = d.at("platform").get<std::string>();
      pv.treated = false;
      pl.manifest.push_back(id);
    }
  } else if (k == ev::Unloaded) {
    auto& pl = platforms_[d.at("platform").get<std::string>()];
    const auto role = parse_facility_role(d.at("role").get<std::string>()).value_or(FacilityRole::CCP);
    const int level = care_level(role);
    for (const auto& j : d.at("patients")) {
      const auto id = j.get<PatientId>();
      auto& pv = patients_[id];
      std::erase(pl.manifest, id);
      pv.where = d.at("site").get<std::string>();
      pv.treated = false;
      if (is_exchange_point(role)) {
        pv.location = "at_exchange_point";
      } else if (level == 3) {
        pv.location = "delivered";
        pv.t3 = e.time;
      } else {
        pv.location = "at_facility";
        (level == 1 ? pv.t1 : pv.t2) = e.time;
      }
    }
  } else if (k == ev::Transferred) {
    auto& from = platforms_[d.at("from").get<std::string>()];
    auto& to = platforms_[d.at("to").get<std::string>()];
    for (const auto& j : d.at("patients")) {
      const auto id = j.get<PatientId>();
      std::erase(from.manifest, id);
      to.manifest.push_back(id);
      auto& pv = patients_[id];
      pv.location = "onboard";
      pv.where = d.at("to").get<std::string>();
    }
  } else if (k == ev::Treated) {
    patients_[d.at("patient").get<PatientId>()].treated = true;
  } else if (k == ev::Died) {
    auto& pv = patients_[d.at("patient").get<PatientId>()];
    pv.location = "dead";
    pv.died_at = e.time;
  } else if (k == ev::DeadRemoved) {
    auto& pl = platforms_[d.at("platform").get<std::string>()];
    for (const auto& j : d.at("patients")) std::erase(pl.manifest, j.get<PatientId>());
  } else if (k == ev::Departed) {
    auto& pl = platforms_[d.at("platform").get<std::string>()];
    pl.phase = "en_route";
    pl.site.clear();
  } else if (k == ev::Arrived) {
    auto& pl = platforms_[d.at("platform").get<std::string>()];
    pl.phase = "stationary";
    pl.site = d.at("site").get<std::string>();
  } else if (k == ev::PadQueued) {
    platforms_[d.at("platform").get<std::string>()].phase = "queued";
  } else if (k == ev::PadGranted) {
    platforms_[d.at("platform").get<std::string>()].phase = "stationary";
  } else if (k == ev::Halted) {
    if (d.contains("platform")) {
      auto& pl = platforms_[d.at("platform").get<std::string>()];
      pl.phase = "stationary";
      pl.site.clear();
    }
  } else if (k == ev::PlatformDespawned) {
    auto& pl = platforms_[d.at("platform").get<std::string>()];
    pl.phase = "despawned";
    pl.site.clear();
  } else if (k == ev::CasevacGranted) {
    platforms_[d.at("platform").get<std::string>()] = {"stationary", d.at("staging").get<std::string>(), {}};
  } else if (k == ev::RingSpawned) {
    rings_.insert(d.at("id").get<std::string>());
  } else if (k == ev::RingExpired) {
    rings_.erase(d.at("id").get<std::string>());
  } else if (k == ev::CcpStateChanged) {
    ccps_[d.at("ccp").get<std::string>()] = d.at("active").get<bool>();
  }
}

Json EventFolder::projection() const {
  Json patients = Json::object();
  for (const auto& [id, v] : patients_) {
    patients[std::to_string(id)] = patient_json(v.location, v.where, v.t1, v.t2, v.t3, v.died_at, v.treated);
  }
  Json platforms = Json::object();
  for (const auto& [id, v] : platforms_) platforms[id] = {{"phase", v.phase}, {"site", v.site}, {"manifest", v.manifest}};
  Json ccps = Json::object();
  for (const auto& [id, a] : ccps_) ccps[id] = a;
  return {{"patients", patients},
          {"platforms", platforms},
          {"ccps", ccps},
          {"rings", std::vector<std::string>(rings_.begin(), rings_.end())}};
}

Json fold_events(const std::vector<SimEvent>& events) {
  EventFolder f;
  for (const auto& e : events) f.apply(e);
  return f.projection();
}

}  // namespace medevac
