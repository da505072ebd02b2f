#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <random>
#include <vector>

namespace pb {

/// Deterministic random source for the whole run.
///
/// Wraps std::mt19937_64 but implements its own bounded draws so results do
/// not depend on the standard library's distribution internals. Every draw is
/// a pure function of the engine state, which makes checkpointed state strings
/// sufficient to resume a run mid-stream.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1). 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform_real(double lo, double hi) {
    if (hi < lo) throw std::invalid_argument("uniform_real: hi < lo");
    return lo + (hi - lo) * uniform();
  }

  /// Uniform in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    // Rejection sampling over the top of the range to avoid modulo bias.
    const std::uint64_t span = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % span);
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[uniform_index(v.size())];
  }

  /// Child stream seeded from this one; advances this engine by one draw.
  Rng split() { return Rng(next_u64()); }

  /// Engine state as text, suitable for a checkpoint.
  std::string state_string() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  static Rng from_state_string(const std::string& s) {
    Rng r;
    std::istringstream is(s);
    is >> r.engine_;
    if (is.fail()) throw std::invalid_argument("Rng: bad state string");
    return r;
  }

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pb
