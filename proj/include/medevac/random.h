#pragma once

// Named, seeded random substreams. Every draw goes through RngStream so a
// run is reproducible from (seed, purpose, entity) alone, and adding an
// entity never perturbs another entity's stream.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace medevac {

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t stream_key(std::uint64_t seed, std::string_view purpose, std::string_view entity);

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::string_view purpose, std::string_view entity = {});

  /// Uniform on the open interval (0, 1).
  double uniform01();
  double uniform(double lo, double hi);
  /// Exponential with the given mean, by inversion.
  double exponential(double mean);
  /// Poisson with the given mean (inversion below 30, PTRS above).
  long poisson(double mean);
  bool bernoulli(double p);
  std::size_t index(std::size_t n);

  std::string state() const;
  void set_state(const std::string& s);

  friend bool operator==(const RngStream& a, const RngStream& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace medevac
