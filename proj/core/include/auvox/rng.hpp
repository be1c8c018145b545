#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace auvox {

// Portable deterministic generator built on the splitmix64 mixing function.
// All state is 64-bit integer, so sequences are identical on every platform
// for a given seed; never use std::mt19937 or the platform default engine in
// anything whose output is checked against frozen fixtures.
//
// Independent streams are derived with derive(), so e.g. per-frame or
// per-fold work can be generated out of order or in parallel.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Child generator whose stream is a pure function of (this seed, label).
  Rng derive(std::uint64_t label) const { return Rng(mix(state_ ^ mix(label))); }
  Rng derive(std::string_view label) const { return derive(fnv1a(label)); }
  Rng derive(std::string_view label, std::uint64_t index) const {
    return derive(fnv1a(label) ^ mix(index));
  }

  // Uniform in [0,1) with 53 random bits; exact dyadic rational.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n); Lemire's multiply-shift without rejection.
  // The bias is < n / 2^64, irrelevant for fixture generation.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Approximate standard normal: Irwin-Hall sum of 12 uniforms minus 6.
  // Uses only adds, so it is bit-portable (no libm transcendentals).
  double gaussian() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform01();
    return s - 6.0;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

 private:
  std::uint64_t state_;
};

}  // namespace auvox
