#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "rba/errors.hpp"
#include "rba/kernels.hpp"
#include "rba/rng.hpp"

using namespace rba;

namespace {

// Plain-loop oracles, written independently of kernels_scalar.cpp.
double ref_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * rng.next_double() - 1.0;
  return v;
}

// Sizes straddling the 4-wide register boundary and the unrolled tails.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 63, 64, 65, 257};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar lane matches plain-loop oracles") {
  kernels::force_lane(kernels::Lane::scalar);
  const auto& ops = kernels::active();
  Rng rng(11);

  for (std::size_t n : kSizes) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);

    CHECK(ops.dot(a.data(), b.data(), n) == doctest::Approx(ref_dot(a, b)).epsilon(1e-14));

    auto y = b;
    ops.axpy(0.37, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y[i] == doctest::Approx(b[i] + 0.37 * a[i]).epsilon(1e-14));
    }

    std::vector<double> out(n);
    ops.vadd(a.data(), b.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] + b[i]);

    auto s = a;
    ops.scale(-1.5, s.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(s[i] == -1.5 * a[i]);
  }
  kernels::reset_lane();
}

TEST_CASE("scalar matvec matches row-by-row dot") {
  kernels::force_lane(kernels::Lane::scalar);
  const auto& ops = kernels::active();
  Rng rng(12);

  for (std::size_t rows : {1u, 3u, 8u, 33u}) {
    for (std::size_t cols : {1u, 2u, 5u, 16u, 19u}) {
      auto m = random_vec(rng, rows * cols);
      auto v = random_vec(rng, cols);
      std::vector<double> out(rows);
      ops.matvec(m.data(), rows, cols, v.data(), out.data());
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += m[r * cols + c] * v[c];
        CHECK(out[r] == doctest::Approx(s).epsilon(1e-14));
      }
    }
  }
  kernels::reset_lane();
}

TEST_CASE("wide lane agrees with scalar within reassociation tolerance") {
  if (!kernels::lane_available(kernels::Lane::avx2)) {
    MESSAGE("avx2 lane unavailable on this host; equivalence vacuous");
    return;
  }
  const auto& sc = kernels::scalar_ops();
  kernels::force_lane(kernels::Lane::avx2);
  const auto& wd = kernels::active();
  Rng rng(13);

  for (std::size_t n : kSizes) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);

    CHECK(wd.dot(a.data(), b.data(), n) ==
          doctest::Approx(sc.dot(a.data(), b.data(), n)).epsilon(1e-12));

    auto y1 = b, y2 = b;
    sc.axpy(2.25, a.data(), y1.data(), n);
    wd.axpy(2.25, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-12));
    }

    std::vector<double> o1(n), o2(n);
    sc.vadd(a.data(), b.data(), o1.data(), n);
    wd.vadd(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);  // elementwise add has a single rounding per entry

    auto s1 = a, s2 = a;
    sc.scale(0.125, s1.data(), n);
    wd.scale(0.125, s2.data(), n);
    CHECK(s1 == s2);
  }

  for (std::size_t rows : {2u, 9u, 33u}) {
    for (std::size_t cols : {3u, 16u, 21u}) {
      auto m = random_vec(rng, rows * cols);
      auto v = random_vec(rng, cols);
      std::vector<double> o1(rows), o2(rows);
      sc.matvec(m.data(), rows, cols, v.data(), o1.data());
      wd.matvec(m.data(), rows, cols, v.data(), o2.data());
      for (std::size_t r = 0; r < rows; ++r) {
        CHECK(o2[r] == doctest::Approx(o1[r]).epsilon(1e-12));
      }
    }
  }
  kernels::reset_lane();
}

TEST_CASE("force_lane selects, reset_lane restores the startup choice") {
  const auto startup = kernels::active_lane();
  kernels::force_lane(kernels::Lane::scalar);
  CHECK(kernels::active_lane() == kernels::Lane::scalar);
  CHECK(kernels::lane_name(kernels::active_lane()) == "scalar");
  kernels::reset_lane();
  CHECK(kernels::active_lane() == startup);
}

TEST_CASE("forcing an unavailable lane throws LaneUnavailable") {
  if (kernels::lane_available(kernels::Lane::avx2)) {
    return;  // nothing is unavailable on this host
  }
  try {
    kernels::force_lane(kernels::Lane::avx2);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.code() == "LaneUnavailable");
  }
  CHECK(kernels::lane_name(kernels::Lane::avx2) == "avx2");
}

}  // TEST_SUITE
