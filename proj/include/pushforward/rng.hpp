#pragma once

#include <cstdint>
#include <utility>

namespace pf {

// Counter-based generator (splitmix64 finalizer over an additive counter).
// Identical seed => identical stream on every platform; fork() derives an
// independent stream so particles/workers can draw concurrently without
// sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1], safe under log()
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    auto [z0, z1] = normal_pair();
    spare_ = z1;
    has_spare_ = true;
    return z0;
  }

  std::pair<double, double> normal_pair();

  // Index below n with rejection sampling (unbiased).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Independent deterministic substream.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t z = state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1));
    z = (z ^ (z >> 29)) * 0xFF51AFD7ED558CCDULL;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ULL;
    return Rng(z ^ (z >> 32));
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pf
