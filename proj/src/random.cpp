#include "medevac/random.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace medevac {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

long poisson_inversion(RngStream& rng, double mean) {
  const double u = rng.uniform01();
  double p = std::exp(-mean);
  double cdf = p;
  long k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p <= 0.0 && static_cast<double>(k) > mean) break;
  }
  return k;
}

// Hörmann's transformed rejection with squeeze.
long poisson_ptrs(RngStream& rng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform01() - 0.5;
    const double v = rng.uniform01();
    const double us = 0.5 - std::fabs(u);
    const long k = static_cast<long>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + static_cast<double>(k) * loglam - std::lgamma(static_cast<double>(k) + 1.0)) {
      return k;
    }
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view purpose, std::string_view entity) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ fnv1a64(purpose));
  k = splitmix64(k ^ fnv1a64(entity));
  return k;
}

RngStream::RngStream(std::uint64_t seed, std::string_view purpose, std::string_view entity)
    : engine_(stream_key(seed, purpose, entity)) {}

double RngStream::uniform01() {
  // 53 random bits centred in their cell: never 0, never 1.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double RngStream::exponential(double mean) { return -std::log(uniform01()) * mean; }

long RngStream::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  return mean < 30.0 ? poisson_inversion(*this, mean) : poisson_ptrs(*this, mean);
}

bool RngStream::bernoulli(double p) { return uniform01() < p; }

std::size_t RngStream::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::index: empty range");
  return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
}

std::string RngStream::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void RngStream::set_state(const std::string& s) {
  std::istringstream in(s);
  in >> engine_;
  if (!in) throw std::runtime_error("RngStream: corrupt state");
}

}  // namespace medevac
