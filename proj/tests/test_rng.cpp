#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "rba/rng.hpp"

using namespace rba;

TEST_SUITE("rng") {

TEST_CASE("mix64 is deterministic and avalanches") {
  CHECK(mix64(42) == mix64(42));
  CHECK(mix64(42) != mix64(43));

  // One-bit input flips should change roughly half the output bits.
  int total = 0;
  for (int bit = 0; bit < 64; ++bit) {
    const std::uint64_t a = mix64(0x12345678ULL);
    const std::uint64_t b = mix64(0x12345678ULL ^ (1ULL << bit));
    total += __builtin_popcountll(a ^ b);
  }
  const double mean_flips = total / 64.0;
  CHECK(mean_flips > 24.0);
  CHECK(mean_flips < 40.0);
}

TEST_CASE("hash_combine depends on both arguments and on order") {
  CHECK(hash_combine(1, 2) != hash_combine(2, 1));
  CHECK(hash_combine(1, 2) != hash_combine(1, 3));
  CHECK(hash_combine(1, 2) == hash_combine(1, 2));
}

TEST_CASE("hash_str distinguishes strings") {
  CHECK(hash_str("abc") != hash_str("abd"));
  CHECK(hash_str("") != hash_str("a"));
  CHECK(hash_str("instr-000001") == hash_str("instr-000001"));
}

TEST_CASE("Rng streams are deterministic and seed-separated") {
  Rng a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
  }
  bool differs = false;
  Rng a2(7);
  for (int i = 0; i < 100; ++i) {
    if (a2.next_u64() != c.next_u64()) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("next_double lies in [0,1) and covers the range") {
  Rng r(123);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = r.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("next_below is unbiased enough and in range") {
  Rng r(99);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = r.next_below(7);
    REQUIRE(v < 7);
    counts[static_cast<int>(v)]++;
  }
  for (int k = 0; k < 7; ++k) {
    CHECK(counts[k] > n / 7 - 600);
    CHECK(counts[k] < n / 7 + 600);
  }
}

TEST_CASE("distinct stream tags do not collide on small seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 64; ++s) {
    seen.insert(mix64(s));
  }
  CHECK(seen.size() == 64);
}

}  // TEST_SUITE
