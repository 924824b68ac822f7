#pragma once

// Canonical state projection, computed two ways: from the live world, and by
// folding the event log. The two must agree at every tick.

#include <map>
#include <set>
#include <vector>

#include "medevac/events.h"
#include "medevac/world.h"

namespace medevac {

Json live_projection(const World& w);

/// Incremental fold over an event log.
class EventFolder {
 public:
  void apply(const SimEvent& e);
  Json projection() const;

 private:
  struct PatientView {
    std::string location = "at_ccp";
    std::string where;
    Json t1 = nullptr;
    Json t2 = nullptr;
    Json t3 = nullptr;
    Json died_at = nullptr;
    bool treated = false;
  };
  struct PlatformView {
    std::string phase = "stationary";
    std::string site;
    std::vector<PatientId> manifest;
  };

  std::map<PatientId, PatientView> patients_;
  std::map<std::string, PlatformView> platforms_;
  std::map<std::string, bool> ccps_;
  std::set<std::string> rings_;
};

Json fold_events(const std::vector<SimEvent>& events);

}  // namespace medevac
