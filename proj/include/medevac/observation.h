#pragma once

// Role-filtered views of a world snapshot (fog of war).

#include <string>

#include <optional>

#include "medevac/engine.h"
#include "medevac/events.h"
#include "medevac/world.h"

namespace medevac {

/// Effective observation radius at time t: configured radius scaled by visibility.
Km observation_radius(const Scenario& sc, Minutes t);

/// True when some friendly observer lies within the effective radius of `site`.
/// Observers are active platforms and non-CCP facilities.
bool site_observed(const World& w, std::string_view site, Minutes t);

/// The view sent to `role`. Roles with sees_all (and the instructor) get the
/// full picture plus live scoring; no view ever carries death times.
Json view_for(const World& w, const std::string& role, const ScoringMode& mode);

/// True when the role receives the full picture.
bool sees_everything(const Scenario& sc, std::string_view role);

/// The wire form of `e` as delivered to `role`, or nullopt when the role does
/// not receive it. Death times are stripped for every recipient; full-view
/// roles otherwise get every event unchanged, so their feed contains every
/// other role's feed.
std::optional<Json> event_for_role(const World& w, const SimEvent& e, std::string_view role);

}  // namespace medevac
