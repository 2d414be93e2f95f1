#pragma once

#include <cstdint>
#include <string_view>

namespace rba {

// splitmix64 finalizer. All seed derivation in the project goes through this
// mixer so that streams are identical across platforms and standard library
// versions (std::uniform_*_distribution is implementation-defined and never
// used).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

constexpr std::uint64_t hash_str(std::string_view s, std::uint64_t seed = 0) noexcept {
  // FNV-style byte fold, finished by the mixer. Not the published FNV-1a
  // digest (io::fnv1a_hex is); this one only derives internal seed streams.
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return mix64(h);
}

// Minimal counter-based generator (splitmix64 stream). Period 2^64, fully
// specified output; plenty for desk-scale corpus synthesis and sampling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept { return mix64(state_++); }

  // Uniform double in [0, 1) with 53-bit resolution.
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace rba
