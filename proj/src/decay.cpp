#include "retsim/decay.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace retsim {

PlateauSamples sample_plateaus(const Trajectory& trajectory) {
  if (trajectory.sample_times.size() < 2 ||
      trajectory.sample_times.size() != trajectory.survival_series.size())
    throw std::invalid_argument("trajectory has no usable samples");
  const double TB = trajectory.bloch_period;
  if (!(TB > 0.0)) throw std::invalid_argument("trajectory lacks a period");
  const double t_end = trajectory.sample_times.back();
  const int n_periods = static_cast<int>(std::round(t_end / TB));
  if (n_periods < 3)
    throw std::invalid_argument("need at least 3 periods, got " +
                                std::to_string(n_periods));
  const double per_period =
      (trajectory.sample_times.size() - 1) / (t_end / TB);
  if (per_period < 8.0 - 1e-9)
    throw std::invalid_argument("need at least 8 samples per period");

  PlateauSamples out;
  out.period = TB;
  out.source = "trajectory";
  std::size_t cursor = 0;
  for (int n = 0; n <= n_periods; ++n) {
    const double target = n * TB;
    while (cursor + 1 < trajectory.sample_times.size() &&
           std::abs(trajectory.sample_times[cursor + 1] - target) <=
               std::abs(trajectory.sample_times[cursor] - target))
      ++cursor;
    out.n_values.push_back(n);
    out.P_values.push_back(trajectory.survival_series[cursor]);
  }
  return out;
}

PlateauSamples cascade_plateaus(const std::vector<double>& P) {
  if (P.empty()) throw std::invalid_argument("empty survival sequence");
  PlateauSamples out;
  out.period = 1.0;
  out.source = "cascade";
  for (std::size_t n = 0; n < P.size(); ++n) {
    out.n_values.push_back(static_cast<int>(n));
    out.P_values.push_back(P[n]);
  }
  return out;
}

DecayEstimate fit_exponential(const PlateauSamples& samples,
                              int skip_transient) {
  if (skip_transient < 0)
    throw std::invalid_argument("skip_transient must be >= 0");
  if (samples.n_values.size() != samples.P_values.size())
    throw std::invalid_argument("inconsistent plateau samples");
  if (!(samples.period > 0.0))
    throw std::invalid_argument("period must be > 0");

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < samples.n_values.size(); ++i) {
    if (samples.n_values[i] < skip_transient) continue;
    if (!(samples.P_values[i] > 0.0))
      throw std::invalid_argument("non-positive survival sample at n = " +
                                  std::to_string(samples.n_values[i]));
    xs.push_back(samples.n_values[i]);
    ys.push_back(std::log(samples.P_values[i]));
  }
  if (xs.size() < 3)
    throw std::invalid_argument(
        "need at least 3 plateau points after the transient, got " +
        std::to_string(xs.size()));

  const double m = xs.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;

  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    rss += r * r;
  }

  DecayEstimate est;
  est.gamma_per_period = -slope;
  est.gamma_per_time = -slope / samples.period;
  est.Z = std::exp(intercept);
  est.n_min = static_cast<int>(xs.front());
  est.n_max = static_cast<int>(xs.back());
  est.residual = std::sqrt(rss / m);
  est.nonexponential_warning = est.residual > 0.05;
  return est;
}

}  // namespace retsim
