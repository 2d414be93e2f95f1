#pragma once

#include <cstddef>
#include <string_view>

namespace rba::kernels {

// Dense double-precision primitives used by the policy forward/backward
// passes and the SGD update. The scalar lane is the reference semantics;
// wide lanes may reassociate accumulation and must agree with scalar within
// the tolerance pinned in tests/test_kernels.cpp. Lane selection happens
// once at startup (CPU probe, overridable via RBA_KERNELS=scalar|avx2 or
// force_lane()) so a given host runs one lane for the whole process.
struct Ops {
  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = a[i] + b[i]
  void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
  // y[i] *= alpha
  void (*scale)(double alpha, double* y, std::size_t n);
  // out[r] = dot(m[r*cols .. r*cols+cols), v) for r in [0, rows)
  void (*matvec)(const double* m, std::size_t rows, std::size_t cols,
                 const double* v, double* out);
};

enum class Lane { scalar, avx2 };

std::string_view lane_name(Lane lane);
bool lane_available(Lane lane);

// Ops table of the active lane. Cheap enough to call per operation.
const Ops& active();
Lane active_lane();

// Test hooks. force_lane throws ValidationError if the lane is unavailable
// on this host; reset_lane restores the startup choice.
void force_lane(Lane lane);
void reset_lane();

const Ops& scalar_ops();

}  // namespace rba::kernels
