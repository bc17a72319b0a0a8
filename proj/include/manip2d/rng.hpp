#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace manip2d {

/// Deterministic RNG stream. Wraps mt19937_64 with explicit, cache-free
/// uniform/normal mappings so that saved streams resume bit-exactly.
class Rng {
 public:
  Rng() : eng_(0x9e3779b97f4a7c15ull) {}
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; always consumes two raw draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Uniform integer in [0, n). Multiply-shift, no modulo bias to speak of.
  int uniform_int(int n) {
    return static_cast<int>((static_cast<__uint128_t>(eng_()) * static_cast<uint64_t>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Derives an independent child stream (for per-env / per-episode seeding).
  static uint64_t derive_seed(uint64_t base, uint64_t index) {
    uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::string save() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void load(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

  bool operator==(const Rng& other) const { return eng_ == other.eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace manip2d
