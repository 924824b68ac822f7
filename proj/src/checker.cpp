#include "medevac/checker.h"

#include <map>

#include "medevac/rules.h"

namespace medevac {
namespace {

std::string pid(PatientId id) { return "patient " + std::to_string(id); }

void check_patient(const Patient& p, std::vector<std::string>& out) {
  const bool urgent = p.precedence == Precedence::Urgent;
  if (urgent != p.death.has_value()) out.push_back(pid(p.id) + ": death times present iff urgent");
  if (p.t3 && !p.t2) out.push_back(pid(p.id) + ": role 3 without role 2");
  if (p.t2 && !p.t1) out.push_back(pid(p.id) + ": role 2 without role 1");
  if (p.t1 && *p.t1 < p.t0) out.push_back(pid(p.id) + ": t1 before t0");
  if (p.t2 && p.t1 && *p.t2 < *p.t1) out.push_back(pid(p.id) + ": t2 before t1");
  if (p.t3 && p.t2 && *p.t3 < *p.t2) out.push_back(pid(p.id) + ": t3 before t2");
  if (p.dead() != p.died_at.has_value()) out.push_back(pid(p.id) + ": death time without death");
  if (p.died_at && *p.died_at < p.t0) out.push_back(pid(p.id) + ": died before spawn");
  if (p.dead() && !urgent) out.push_back(pid(p.id) + ": priority patient died");
  if (p.dead() && p.t2) out.push_back(pid(p.id) + ": died after reaching role 2");
  if ((p.location == PatientLocation::Delivered) != p.t3.has_value()) {
    out.push_back(pid(p.id) + ": delivered state and role 3 stamp disagree");
  }
}

}  // namespace

std::vector<std::string> check_invariants(const World& w) {
  std::vector<std::string> out;
  for (const auto& p : w.patients) check_patient(p, out);

  std::map<PatientId, std::string> aboard;
  for (const auto& pl : w.platforms) {
    const Occupancy occ = manifest_occupancy(w, pl);
    if (auto v = check_capacity(w.spec_of(pl), occ.litter, occ.ambulatory); !v) {
      out.push_back("platform " + pl.id + ": " + v.reason);
    }
    if (!pl.active() && !pl.manifest.empty()) out.push_back("platform " + pl.id + ": despawned with patients aboard");
    for (PatientId id : pl.manifest) {
      const Patient* p = w.find_patient(id);
      if (!p) {
        out.push_back("platform " + pl.id + ": unknown " + pid(id) + " in manifest");
        continue;
      }
      if (!aboard.emplace(id, pl.id).second) out.push_back(pid(id) + ": in two manifests");
      const bool consistent = (p->location == PatientLocation::Onboard || p->dead()) && p->where == pl.id;
      if (!consistent) out.push_back(pid(id) + ": listed on " + pl.id + " but not aboard it");
    }
  }
  for (const auto& p : w.patients) {
    if (p.location == PatientLocation::Onboard && !aboard.count(p.id)) out.push_back(pid(p.id) + ": aboard no manifest");
  }

  for (const auto& p : w.patients) {
    if (p.location != PatientLocation::AtExchangePoint) continue;
    const PlatformState* att = w.find_platform(p.attending_platform);
    if (!att || !att->active() || att->en_route() || att->site != p.where) {
      out.push_back(pid(p.id) + ": unattended at exchange point " + p.where);
    }
  }

  for (std::size_t i = 0; i < w.facilities.size(); ++i) {
    const auto& fs = w.facilities[i];
    const auto& cfg = w.scenario->facilities[i];
    if (cfg.pad_slots && static_cast<int>(fs.pad.occupied.size()) > *cfg.pad_slots) {
      out.push_back("facility " + fs.id + ": pad over capacity");
    }
    if (!fs.pad.waiting.empty() && cfg.pad_slots && static_cast<int>(fs.pad.occupied.size()) < *cfg.pad_slots) {
      out.push_back("facility " + fs.id + ": free pad with a queue");
    }
    for (std::size_t k = 1; k < fs.pad.waiting.size(); ++k) {
      if (fs.pad.waiting[k].since < fs.pad.waiting[k - 1].since) out.push_back("facility " + fs.id + ": queue out of order");
    }
    if (cfg.bed_capacity && w.occupancy_at(fs.id) > *cfg.bed_capacity && cfg.role != FacilityRole::CCP) {
      out.push_back("facility " + fs.id + ": beds over capacity");
    }
  }
  return out;
}

}  // namespace medevac
