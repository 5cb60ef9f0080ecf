#pragma once

#include <string>
#include <vector>

#include "retsim/propagator.hpp"

namespace retsim {

// Stroboscopic survival samples P_n at integer multiples of the period.
struct PlateauSamples {
  std::vector<int> n_values;
  std::vector<double> P_values;
  double period = 1.0;  // duration of one step in time units
  std::string source;   // "trajectory" or "cascade"
};

struct DecayEstimate {
  double Z = 0.0;
  double gamma_per_period = 0.0;
  double gamma_per_time = 0.0;
  int n_min = 0;
  int n_max = 0;
  double residual = 0.0;  // RMS of log-residuals
  bool nonexponential_warning = false;
};

// Pick the sample nearest to each n * T_B from a trajectory. Requires at
// least 3 periods and 8 samples per period of coverage.
PlateauSamples sample_plateaus(const Trajectory& trajectory);

// Stroboscopic cascade samples (period 1) from a survival sequence P_0...
PlateauSamples cascade_plateaus(const std::vector<double>& P);

// Least-squares line through (n, log P_n) for n >= skip_transient:
// gamma_per_period = -slope, Z = exp(intercept). Needs >= 3 retained
// points, all positive; residual > 0.05 sets the non-exponential warning.
DecayEstimate fit_exponential(const PlateauSamples& samples,
                              int skip_transient = 2);

}  // namespace retsim
