#pragma once

#include <cstdint>

namespace wigner {

// Counter-based splittable generator built on the splitmix64 finalizer.
// Every matrix entry, replica and grid block gets its own stream derived by
// split(), so sampling is independent of traversal order and trivially
// parallel. Same scheme as the reference splitmix64 of Steele et al.

inline constexpr std::uint64_t kDefaultSeed = 0xC0FFEEull;
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derive the key of child stream i from a parent key.
constexpr std::uint64_t split(std::uint64_t key, std::uint64_t i) {
  return mix64(key + kGolden * (i + 1));
}

constexpr std::uint64_t split(std::uint64_t key, std::uint64_t i, std::uint64_t j) {
  return split(split(key, i), j);
}

class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) : state_(key) {}

  constexpr std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform on [0,1), 53 mantissa bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe under log().
  double next_unit_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  bool next_bit() { return (next_u64() >> 63) != 0; }

 private:
  std::uint64_t state_;
};

}  // namespace wigner
