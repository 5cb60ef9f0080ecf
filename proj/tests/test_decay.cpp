#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "retsim/cascade.hpp"
#include "retsim/decay.hpp"

using namespace retsim;

namespace {

Trajectory synthetic_trajectory(double TB, int n_periods, int per_period,
                                double gamma) {
  Trajectory tr;
  tr.bloch_period = TB;
  const int total = n_periods * per_period;
  for (int i = 0; i <= total; ++i) {
    const double t = TB * static_cast<double>(i) / per_period;
    tr.sample_times.push_back(t);
    tr.survival_series.push_back(std::exp(-gamma * t / TB));
    tr.norm_series.push_back(1.0);
    tr.band_populations.push_back({tr.survival_series.back(),
                                   1.0 - tr.survival_series.back(), 0.0,
                                   0.0});
  }
  return tr;
}

}  // namespace

TEST_CASE("cascade_plateaus wraps a survival sequence") {
  const std::vector<double> P{1.0, 0.7, 0.5, 0.36};
  const PlateauSamples s = cascade_plateaus(P);
  CHECK(s.period == 1.0);
  CHECK(s.source == "cascade");
  REQUIRE(s.n_values.size() == 4);
  for (int n = 0; n < 4; ++n) {
    CHECK(s.n_values[n] == n);
    CHECK(s.P_values[n] == P[n]);
  }
  CHECK_THROWS_AS(cascade_plateaus({}), std::invalid_argument);
}

TEST_CASE("sample_plateaus picks the stroboscopic points") {
  const double TB = 2.0 * 3.14159265358979323846;
  const Trajectory tr = synthetic_trajectory(TB, 4, 16, 0.3);
  const PlateauSamples s = sample_plateaus(tr);
  CHECK(s.period == TB);
  CHECK(s.source == "trajectory");
  REQUIRE(s.n_values.size() == 5);
  for (int n = 0; n <= 4; ++n) {
    CHECK(s.n_values[n] == n);
    CHECK(s.P_values[n] == tr.survival_series[16 * n]);
  }
}

TEST_CASE("sample_plateaus coverage requirements") {
  CHECK_THROWS_AS(sample_plateaus(synthetic_trajectory(1.0, 2, 16, 0.3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_plateaus(synthetic_trajectory(1.0, 4, 6, 0.3)),
                  std::invalid_argument);
  Trajectory empty;
  empty.bloch_period = 1.0;
  CHECK_THROWS_AS(sample_plateaus(empty), std::invalid_argument);
  Trajectory no_period = synthetic_trajectory(1.0, 4, 16, 0.3);
  no_period.bloch_period = 0.0;
  CHECK_THROWS_AS(sample_plateaus(no_period), std::invalid_argument);
}

TEST_CASE("fit_exponential recovers a pure exponential exactly") {
  const double Z = 0.83, gamma = 0.21, TB = 5.5;
  PlateauSamples s;
  s.period = TB;
  s.source = "cascade";
  for (int n = 0; n <= 10; ++n) {
    s.n_values.push_back(n);
    s.P_values.push_back(Z * std::exp(-gamma * n));
  }
  const DecayEstimate est = fit_exponential(s, 2);
  CHECK(est.Z == doctest::Approx(Z).epsilon(1e-12));
  CHECK(est.gamma_per_period == doctest::Approx(gamma).epsilon(1e-12));
  CHECK(est.gamma_per_time == doctest::Approx(gamma / TB).epsilon(1e-12));
  CHECK(est.n_min == 2);
  CHECK(est.n_max == 10);
  CHECK(est.residual < 1e-12);
  CHECK(!est.nonexponential_warning);
}

TEST_CASE("fit_exponential flags non-exponential samples") {
  PlateauSamples s;
  s.period = 1.0;
  for (int n = 0; n <= 10; ++n) {
    s.n_values.push_back(n);
    const double wobble = (n % 2 == 0) ? 0.12 : -0.12;
    s.P_values.push_back(std::exp(-0.2 * n + wobble));
  }
  const DecayEstimate est = fit_exponential(s, 0);
  CHECK(est.nonexponential_warning);
  CHECK(est.residual > 0.05);
}

TEST_CASE("fit_exponential validation") {
  PlateauSamples s;
  s.period = 1.0;
  for (int n = 0; n <= 5; ++n) {
    s.n_values.push_back(n);
    s.P_values.push_back(std::exp(-0.1 * n));
  }
  CHECK_THROWS_AS(fit_exponential(s, -1), std::invalid_argument);
  CHECK_THROWS_AS(fit_exponential(s, 4), std::invalid_argument);  // 2 points
  PlateauSamples bad = s;
  bad.P_values[3] = 0.0;
  CHECK_THROWS_AS(fit_exponential(bad, 0), std::invalid_argument);
  PlateauSamples mismatch = s;
  mismatch.P_values.pop_back();
  CHECK_THROWS_AS(fit_exponential(mismatch, 0), std::invalid_argument);
  PlateauSamples zero_period = s;
  zero_period.period = 0.0;
  CHECK_THROWS_AS(fit_exponential(zero_period, 0), std::invalid_argument);
}

TEST_CASE("fit on an iterated cascade reproduces the spectral rate") {
  const CascadeModel m = cascade_operator(0.9, 0.2, 2.0);
  REQUIRE(!m.degenerate);
  const std::vector<double> P = iterate_cascade(m, 16);
  const DecayEstimate est = fit_exponential(cascade_plateaus(P), 10);
  CHECK(est.gamma_per_period ==
        doctest::Approx(asymptotic_rate(m)).epsilon(1e-4));
  CHECK(est.Z == doctest::Approx(z_projection(m)).epsilon(1e-4));
  CHECK(!est.nonexponential_warning);
}
