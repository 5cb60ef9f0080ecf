#pragma once

#include <cstddef>

namespace retsim::kernels {

// Inner loops of the split-step propagator, in split (re/im) layout. Every
// variant of an entry must produce bit-identical results: identical IEEE
// operations per element, no fused multiply-add, and the norm reduction uses
// a fixed four-accumulator blocking independent of vector width.
struct Ops {
  const char* name;

  // a[j] *= p[j]  (complex), used to apply diagonal phase factors
  void (*complex_scale)(double* ar, double* ai,
                        const double* pr, const double* pi, std::size_t n);

  // y[j] = x[j-1] + x[j+1] with zero boundary terms (nearest-neighbor sum)
  void (*neighbor_sum)(const double* xr, const double* xi,
                       double* yr, double* yi, std::size_t n);

  // t[j] = c * y[j]; acc[j] += t[j]  (complex scalar c), one Taylor step
  void (*scale_accum)(const double* yr, const double* yi,
                      double cr, double ci,
                      double* tr, double* ti,
                      double* accr, double* acci, std::size_t n);

  // sum_j xr[j]^2 + xi[j]^2; partial sums s_m over j = m (mod 4) on the
  // 4-aligned prefix, combined as (s0+s2)+(s1+s3), then a sequential tail
  double (*norm_sq)(const double* xr, const double* xi, std::size_t n);
};

const Ops& scalar_ops();
const Ops* avx2_ops_or_null();  // null when not compiled in

bool avx2_available();          // compiled in and supported by this CPU

// Table used by the propagator. Chosen once per process: RETSIM_KERNELS
// (scalar|avx2) overrides auto-detection. select() switches explicitly and
// returns false if the requested variant is unavailable.
const Ops& active();
bool select(const char* name);

}  // namespace retsim::kernels
