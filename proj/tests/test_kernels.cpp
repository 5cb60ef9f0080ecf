#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <random>
#include <vector>

#include "retsim/kernels.hpp"

using retsim::kernels::Ops;

namespace {

struct Buffers {
  std::vector<double> ar, ai, pr, pi, yr, yi, tr, ti, accr, acci;

  explicit Buffers(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto* v : {&ar, &ai, &pr, &pi, &yr, &yi, &tr, &ti, &accr, &acci}) {
      v->resize(n);
      for (double& x : *v) x = dist(gen);
    }
  }
};

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("scalar complex_scale matches std::complex arithmetic") {
  const Ops& ops = retsim::kernels::scalar_ops();
  Buffers b(17, 1);
  std::vector<std::complex<double>> expect(17);
  for (int j = 0; j < 17; ++j)
    expect[j] = std::complex<double>(b.ar[j], b.ai[j]) *
                std::complex<double>(b.pr[j], b.pi[j]);
  ops.complex_scale(b.ar.data(), b.ai.data(), b.pr.data(), b.pi.data(), 17);
  for (int j = 0; j < 17; ++j) {
    CHECK(b.ar[j] == doctest::Approx(expect[j].real()).epsilon(1e-15));
    CHECK(b.ai[j] == doctest::Approx(expect[j].imag()).epsilon(1e-15));
  }
}

TEST_CASE("scalar neighbor_sum applies zero boundaries") {
  const Ops& ops = retsim::kernels::scalar_ops();
  std::vector<double> xr = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> xi = {-1.0, -2.0, -3.0, -4.0};
  std::vector<double> yr(4), yi(4);
  ops.neighbor_sum(xr.data(), xi.data(), yr.data(), yi.data(), 4);
  CHECK(yr == std::vector<double>{2.0, 4.0, 6.0, 3.0});
  CHECK(yi == std::vector<double>{-2.0, -4.0, -6.0, -3.0});

  ops.neighbor_sum(xr.data(), xi.data(), yr.data(), yi.data(), 1);
  CHECK(yr[0] == 0.0);
  CHECK(yi[0] == 0.0);

  ops.neighbor_sum(xr.data(), xi.data(), yr.data(), yi.data(), 2);
  CHECK(yr[0] == 2.0);
  CHECK(yr[1] == 1.0);
}

TEST_CASE("scalar norm_sq uses the blocked reduction order") {
  const Ops& ops = retsim::kernels::scalar_ops();
  Buffers b(11, 2);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int j = 0; j < 8; j += 4) {
    s0 += b.ar[j] * b.ar[j] + b.ai[j] * b.ai[j];
    s1 += b.ar[j + 1] * b.ar[j + 1] + b.ai[j + 1] * b.ai[j + 1];
    s2 += b.ar[j + 2] * b.ar[j + 2] + b.ai[j + 2] * b.ai[j + 2];
    s3 += b.ar[j + 3] * b.ar[j + 3] + b.ai[j + 3] * b.ai[j + 3];
  }
  double expect = (s0 + s2) + (s1 + s3);
  for (int j = 8; j < 11; ++j)
    expect += b.ar[j] * b.ar[j] + b.ai[j] * b.ai[j];
  CHECK(ops.norm_sq(b.ar.data(), b.ai.data(), 11) == expect);
}

TEST_CASE("scale_accum writes the term and accumulates") {
  const Ops& ops = retsim::kernels::scalar_ops();
  Buffers b(9, 3);
  const double cr = 0.3, ci = -0.7;
  Buffers ref = b;
  ops.scale_accum(b.yr.data(), b.yi.data(), cr, ci, b.tr.data(), b.ti.data(),
                  b.accr.data(), b.acci.data(), 9);
  for (int j = 0; j < 9; ++j) {
    const std::complex<double> t =
        std::complex<double>(cr, ci) * std::complex<double>(ref.yr[j], ref.yi[j]);
    CHECK(b.tr[j] == doctest::Approx(t.real()).epsilon(1e-15));
    CHECK(b.accr[j] ==
          doctest::Approx(ref.accr[j] + t.real()).epsilon(1e-15));
  }
}

TEST_CASE("avx2 kernels are bit-identical to scalar") {
  if (!retsim::kernels::avx2_available()) {
    MESSAGE("AVX2 unavailable on this host; skipping equivalence checks");
    return;
  }
  const Ops& scalar = retsim::kernels::scalar_ops();
  const Ops* avx2 = retsim::kernels::avx2_ops_or_null();
  REQUIRE(avx2 != nullptr);

  for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 15, 16, 31, 63, 64, 67, 129}) {
    CAPTURE(n);
    Buffers a(n, 100 + n), b = a;

    scalar.complex_scale(a.ar.data(), a.ai.data(), a.pr.data(), a.pi.data(), n);
    avx2->complex_scale(b.ar.data(), b.ai.data(), b.pr.data(), b.pi.data(), n);
    CHECK(bit_equal(a.ar, b.ar));
    CHECK(bit_equal(a.ai, b.ai));

    scalar.neighbor_sum(a.ar.data(), a.ai.data(), a.yr.data(), a.yi.data(), n);
    avx2->neighbor_sum(b.ar.data(), b.ai.data(), b.yr.data(), b.yi.data(), n);
    CHECK(bit_equal(a.yr, b.yr));
    CHECK(bit_equal(a.yi, b.yi));

    scalar.scale_accum(a.yr.data(), a.yi.data(), 0.123, -0.456, a.tr.data(),
                       a.ti.data(), a.accr.data(), a.acci.data(), n);
    avx2->scale_accum(b.yr.data(), b.yi.data(), 0.123, -0.456, b.tr.data(),
                      b.ti.data(), b.accr.data(), b.acci.data(), n);
    CHECK(bit_equal(a.tr, b.tr));
    CHECK(bit_equal(a.ti, b.ti));
    CHECK(bit_equal(a.accr, b.accr));
    CHECK(bit_equal(a.acci, b.acci));

    const double ns = scalar.norm_sq(a.ar.data(), a.ai.data(), n);
    const double nv = avx2->norm_sq(b.ar.data(), b.ai.data(), n);
    CHECK(std::memcmp(&ns, &nv, sizeof(double)) == 0);
  }
}

TEST_CASE("kernel selection") {
  CHECK(retsim::kernels::select("scalar"));
  CHECK(std::string(retsim::kernels::active().name) == "scalar");
  CHECK_FALSE(retsim::kernels::select("bogus"));
  CHECK(std::string(retsim::kernels::active().name) == "scalar");
  if (retsim::kernels::avx2_available()) {
    CHECK(retsim::kernels::select("avx2"));
    CHECK(std::string(retsim::kernels::active().name) == "avx2");
  } else {
    CHECK_FALSE(retsim::kernels::select("avx2"));
  }
  // restore auto choice for any later tests in this binary
  retsim::kernels::select(retsim::kernels::avx2_available() ? "avx2"
                                                            : "scalar");
}
