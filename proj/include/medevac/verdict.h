#pragma once

#include <string>
#include <utility>

namespace medevac {

/// Outcome of a legality check. Rejections are values, not errors.
struct Verdict {
  bool allowed = true;
  std::string reason;

  static Verdict ok() { return {}; }
  static Verdict reject(std::string why) { return {false, std::move(why)}; }
  explicit operator bool() const { return allowed; }
};

}  // namespace medevac
