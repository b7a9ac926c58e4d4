#pragma once

#include <cstdint>
#include <vector>

namespace opinionxf {

// pcg32: 64-bit state / 32-bit output PCG generator (XSH-RR variant).
// Seeding and update follow the reference implementation exactly so the
// stream can be reproduced from any language; constants and the shuffle
// algorithm are pinned in docs/rng.md. Every random draw in the project
// (splits, synthetic data, weight init) goes through this generator.
class Pcg32 {
 public:
  static constexpr std::uint64_t kDefaultStream = 54u;

  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next();
    state_ += seed;
    next();
  }

  std::uint32_t next() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  // next() % n. The modulo bias is far below anything observable at the
  // corpus sizes involved and keeps the stream trivial to reproduce.
  std::uint32_t bounded(std::uint32_t n) { return n <= 1u ? 0u : next() % n; }

  // Uniform in [0, 1) with 32-bit resolution.
  double next_double() {
    return static_cast<double>(next()) * (1.0 / 4294967296.0);
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

// Fisher-Yates, iterating from the back; one bounded() draw per position.
template <typename T>
void shuffle(std::vector<T>& values, Pcg32& rng) {
  if (values.size() < 2) return;
  for (std::size_t i = values.size() - 1; i > 0; --i) {
    const auto j = rng.bounded(static_cast<std::uint32_t>(i + 1));
    std::swap(values[i], values[j]);
  }
}

}  // namespace opinionxf
