#pragma once

// Scripted baseline policies for headless runs. A policy maps the snapshot
// seen by one role to the actions it issues at a decision epoch.

#include <memory>
#include <string>
#include <vector>

#include "medevac/random.h"
#include "medevac/rules.h"
#include "medevac/world.h"

namespace medevac {

/// Policies decide once per this many in-game seconds.
inline constexpr int kDecisionEpochSeconds = 60;

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  /// Actions are legal against `w` when issued; earlier actions in the same
  /// batch may still make later ones illegal at apply time.
  virtual std::vector<ActionRequest> decide(const World& w, const std::string& role) = 0;
};

class IdlePolicy final : public Policy {
 public:
  std::string name() const override { return "idle"; }
  std::vector<ActionRequest> decide(const World&, const std::string&) override { return {}; }
};

class RandomLegalPolicy final : public Policy {
 public:
  RandomLegalPolicy(std::uint64_t seed, const std::string& role) : rng_(seed, "policy", role) {}
  std::string name() const override { return "random_legal"; }
  std::vector<ActionRequest> decide(const World& w, const std::string& role) override;

 private:
  RngStream rng_;
};

/// Sends the nearest idle platform to the oldest waiting casualty. With
/// `triage`, urgent casualties go first and age breaks ties.
class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(bool triage) : triage_(triage) {}
  std::string name() const override { return triage_ ? "triage_greedy" : "greedy_nearest"; }
  std::vector<ActionRequest> decide(const World& w, const std::string& role) override;

 private:
  bool triage_;
};

/// Accepts idle, random_legal, greedy_nearest, triage_greedy (or the
/// CamelCase spellings). Throws std::invalid_argument for anything else.
std::unique_ptr<Policy> make_policy(const std::string& name, std::uint64_t seed, const std::string& role);
bool is_policy_name(const std::string& name);

}  // namespace medevac
