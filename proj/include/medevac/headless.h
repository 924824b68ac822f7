#pragma once

// Unpaced batch runs, run archives and archive verification.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "medevac/engine.h"
#include "medevac/scoring.h"

namespace medevac {

inline constexpr const char* kArchiveFormat = "medevac-archive/1";

struct RunConfig {
  std::shared_ptr<const Scenario> scenario;
  std::optional<std::uint64_t> seed;
  /// role -> policy name; roles not listed stay idle.
  std::map<std::string, std::string> policies;
  std::optional<Minutes> duration;
  std::optional<ScoringMode> scoring;
  std::optional<int> tick_seconds;
  bool checker = false;
  long fold_check_every = 0;
};

struct RunResult {
  std::unique_ptr<Engine> engine;
  ScoreBoard score;
  std::vector<std::string> breaches;
};

/// Throws std::invalid_argument for unknown roles or policy names.
RunResult run_headless(const RunConfig& cfg);

/// Writes scenario.json, manifest.json, inputs.ndjson and events.ndjson.
void write_archive(const Engine& engine, const std::string& dir);

struct ReplayVerdict {
  enum class Status { Pass, Fail, Refused };
  Status status = Status::Pass;
  /// First event seq where the logs differ (Fail only).
  std::optional<long> first_diff;
  std::string message;
};

ReplayVerdict verify_archive(const std::string& dir);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace medevac
