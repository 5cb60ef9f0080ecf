#include "retsim/kernels.hpp"

#include <immintrin.h>

namespace retsim::kernels {
namespace {

void complex_scale(double* ar, double* ai,
                   const double* pr, const double* pi, std::size_t n) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vr = _mm256_loadu_pd(ar + j);
    const __m256d vi = _mm256_loadu_pd(ai + j);
    const __m256d wr = _mm256_loadu_pd(pr + j);
    const __m256d wi = _mm256_loadu_pd(pi + j);
    const __m256d re = _mm256_sub_pd(_mm256_mul_pd(vr, wr), _mm256_mul_pd(vi, wi));
    const __m256d im = _mm256_add_pd(_mm256_mul_pd(vr, wi), _mm256_mul_pd(vi, wr));
    _mm256_storeu_pd(ar + j, re);
    _mm256_storeu_pd(ai + j, im);
  }
  for (; j < n; ++j) {
    const double re = ar[j] * pr[j] - ai[j] * pi[j];
    const double im = ar[j] * pi[j] + ai[j] * pr[j];
    ar[j] = re;
    ai[j] = im;
  }
}

void neighbor_sum(const double* xr, const double* xi,
                  double* yr, double* yi, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    yr[0] = 0.0 + 0.0;
    yi[0] = 0.0 + 0.0;
    return;
  }
  yr[0] = 0.0 + xr[1];
  yi[0] = 0.0 + xi[1];
  std::size_t j = 1;
  for (; j + 4 <= n - 1; j += 4) {
    _mm256_storeu_pd(yr + j, _mm256_add_pd(_mm256_loadu_pd(xr + j - 1),
                                           _mm256_loadu_pd(xr + j + 1)));
    _mm256_storeu_pd(yi + j, _mm256_add_pd(_mm256_loadu_pd(xi + j - 1),
                                           _mm256_loadu_pd(xi + j + 1)));
  }
  for (; j + 1 < n; ++j) {
    yr[j] = xr[j - 1] + xr[j + 1];
    yi[j] = xi[j - 1] + xi[j + 1];
  }
  yr[n - 1] = xr[n - 2] + 0.0;
  yi[n - 1] = xi[n - 2] + 0.0;
}

void scale_accum(const double* yr, const double* yi,
                 double cr, double ci,
                 double* tr, double* ti,
                 double* accr, double* acci, std::size_t n) {
  const __m256d vcr = _mm256_set1_pd(cr);
  const __m256d vci = _mm256_set1_pd(ci);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vr = _mm256_loadu_pd(yr + j);
    const __m256d vi = _mm256_loadu_pd(yi + j);
    const __m256d re = _mm256_sub_pd(_mm256_mul_pd(vcr, vr), _mm256_mul_pd(vci, vi));
    const __m256d im = _mm256_add_pd(_mm256_mul_pd(vcr, vi), _mm256_mul_pd(vci, vr));
    _mm256_storeu_pd(tr + j, re);
    _mm256_storeu_pd(ti + j, im);
    _mm256_storeu_pd(accr + j, _mm256_add_pd(_mm256_loadu_pd(accr + j), re));
    _mm256_storeu_pd(acci + j, _mm256_add_pd(_mm256_loadu_pd(acci + j), im));
  }
  for (; j < n; ++j) {
    const double re = cr * yr[j] - ci * yi[j];
    const double im = cr * yi[j] + ci * yr[j];
    tr[j] = re;
    ti[j] = im;
    accr[j] += re;
    acci[j] += im;
  }
}

double norm_sq(const double* xr, const double* xi, std::size_t n) {
  // Vector lane m holds the scalar variant's partial sum s_m (j = m mod 4).
  __m256d acc = _mm256_setzero_pd();
  const std::size_t nb = n & ~std::size_t(3);
  for (std::size_t j = 0; j < nb; j += 4) {
    const __m256d vr = _mm256_loadu_pd(xr + j);
    const __m256d vi = _mm256_loadu_pd(xi + j);
    acc = _mm256_add_pd(acc, _mm256_add_pd(_mm256_mul_pd(vr, vr),
                                           _mm256_mul_pd(vi, vi)));
  }
  const __m128d lo = _mm256_castpd256_pd128(acc);    // (s0, s1)
  const __m128d hi = _mm256_extractf128_pd(acc, 1);  // (s2, s3)
  const __m128d pair = _mm_add_pd(lo, hi);           // (s0+s2, s1+s3)
  double s = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
  for (std::size_t j = nb; j < n; ++j) s += xr[j] * xr[j] + xi[j] * xi[j];
  return s;
}

}  // namespace

const Ops* avx2_ops_impl() {
  static const Ops ops{"avx2", complex_scale, neighbor_sum, scale_accum,
                       norm_sq};
  return &ops;
}

}  // namespace retsim::kernels
