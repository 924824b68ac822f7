#pragma once

#include <string>
#include <vector>

#include "medevac/world.h"

namespace medevac {

/// Doctrine invariants over a world snapshot. Returns one message per breach.
std::vector<std::string> check_invariants(const World& w);

}  // namespace medevac
