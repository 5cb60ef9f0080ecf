#include "retsim/kernels.hpp"

namespace retsim::kernels {
namespace {

void complex_scale(double* ar, double* ai,
                   const double* pr, const double* pi, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
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
  for (std::size_t j = 1; j + 1 < n; ++j) {
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
  for (std::size_t j = 0; j < n; ++j) {
    const double re = cr * yr[j] - ci * yi[j];
    const double im = cr * yi[j] + ci * yr[j];
    tr[j] = re;
    ti[j] = im;
    accr[j] += re;
    acci[j] += im;
  }
}

double norm_sq(const double* xr, const double* xi, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t nb = n & ~std::size_t(3);
  for (std::size_t j = 0; j < nb; j += 4) {
    s0 += xr[j] * xr[j] + xi[j] * xi[j];
    s1 += xr[j + 1] * xr[j + 1] + xi[j + 1] * xi[j + 1];
    s2 += xr[j + 2] * xr[j + 2] + xi[j + 2] * xi[j + 2];
    s3 += xr[j + 3] * xr[j + 3] + xi[j + 3] * xi[j + 3];
  }
  double s = (s0 + s2) + (s1 + s3);
  for (std::size_t j = nb; j < n; ++j) s += xr[j] * xr[j] + xi[j] * xi[j];
  return s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", complex_scale, neighbor_sum, scale_accum,
                       norm_sq};
  return ops;
}

}  // namespace retsim::kernels
