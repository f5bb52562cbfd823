#pragma once

#include <cstdint>
#include <string_view>

namespace cxrgen {

// Stable 64-bit hashing for split assignment and the mock detector.
// std::hash is implementation-defined and would not reproduce across
// platforms or standard library versions.

constexpr uint64_t mix64(uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t seeded_hash(std::string_view key, uint64_t seed) {
  return mix64(fnv1a64(key) ^ mix64(seed + 0x9e3779b97f4a7c15ull));
}

// splitmix64-style stream keyed by (key, seed).
class HashStream {
 public:
  HashStream(std::string_view key, uint64_t seed) : state_(seeded_hash(key, seed)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Value in [0, n). Modulo bias is irrelevant for the small n used here.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

}  // namespace cxrgen
