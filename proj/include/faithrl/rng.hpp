#pragma once

// Splittable counter-based pseudo-random generator. Every random decision in
// the toolkit derives from one root seed through named splits, so any
// component can be re-run in isolation and still see the same stream
// regardless of evaluation order or parallel scheduling.
//
// The mixer is splitmix64 (Vigna's public-domain finalizer, the one used to
// seed the xorshift family). A generator is (key, counter): draws hash
// key ⊕ mix(counter), splits derive a child key from (key, label).

#include <cstdint>
#include <string_view>

namespace faithrl {

namespace detail {

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the label bytes, then hardened through the mixer.
inline uint64_t hash_label(uint64_t key, std::string_view label) {
  uint64_t h = 0xcbf29ce484222325ULL ^ key;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

}  // namespace detail

class Rng {
 public:
  Rng() : key_(0), counter_(0) {}
  explicit Rng(uint64_t seed) : key_(detail::splitmix64(seed)), counter_(0) {}

  // Independent child stream; never advances this generator.
  Rng split(std::string_view label) const {
    Rng child;
    child.key_ = detail::hash_label(key_, label);
    child.counter_ = 0;
    return child;
  }

  Rng split(std::string_view label, uint64_t index) const {
    Rng child;
    child.key_ = detail::splitmix64(detail::hash_label(key_, label) ^
                                    (0x9e3779b97f4a7c15ULL * (index + 1)));
    child.counter_ = 0;
    return child;
  }

  uint64_t next_u64() { return detail::splitmix64(key_ ^ counter_++); }

  // Uniform in [0, 1): 53 mantissa bits, never returns 1.0.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n must be positive. Rejection-free Lemire-style
  // reduction is unnecessary here: modulo bias at n << 2^64 is far below any
  // tolerance in this toolkit, but we keep the multiply-shift reduction anyway.
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller (one value per call; simple beats fast here).
  double next_gaussian();

 private:
  uint64_t key_;
  uint64_t counter_;
};

}  // namespace faithrl
