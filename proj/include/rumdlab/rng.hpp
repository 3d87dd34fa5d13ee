#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace rumdlab {

// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based generator: value = mix(key ^ mix(counter)). Streams derived
// by split() are independent of draw order, so parallel workers can own
// disjoint streams while the overall run stays reproducible from one seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(seed ^ mix64(stream ^ 0x5851f42d4c957f2dULL))) {}

  CounterRng split(std::uint64_t tag) const { return CounterRng(key_, tag ^ 0xa3ec647659359acdULL); }

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  // uniform in [0, 1), 53-bit resolution
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  int next_sign() { return (next_u64() >> 63) ? -1 : 1; }

  // uniform in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  double next_gaussian() {
    // Box-Muller; two fresh uniforms per call keeps the stream counter-pure.
    double u1 = next_unit(), u2 = next_unit();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rumdlab
