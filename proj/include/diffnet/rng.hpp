#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace diffnet {

// Deterministic random source. All sampling goes through explicit inverse-CDF
// (or Box-Muller) transforms on top of std::mt19937_64 so that a given seed
// produces the same stream on every platform, independent of the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_bits() { return engine_(); }

  // Uniform on the open interval (0, 1): values are (k + 0.5) * 2^-53,
  // never exactly 0 or 1.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on the open interval (lo, hi).
  double uniform(double lo, double hi) {
    double r = lo + uniform01() * (hi - lo);
    if (r >= hi) r = std::nextafter(hi, lo);
    if (r <= lo) r = std::nextafter(lo, hi);
    return r;
  }

  // Exponential with rate lambda > 0 via inverse CDF; uniform01() > 0 keeps
  // the log argument strictly positive.
  double exponential(double lambda) { return -std::log(uniform01()) / lambda; }

  // Normal(mean, sigma) via Box-Muller, one value per call (no cached pair).
  double normal(double mean, double sigma) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, count).
  std::uint64_t index(std::uint64_t count) { return engine_() % count; }

  // Decorrelates seeds that differ only in a small salt (used to key
  // independent sub-streams such as per-query estimators).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace diffnet
