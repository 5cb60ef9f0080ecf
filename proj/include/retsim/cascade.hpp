#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "retsim/lattice.hpp"

namespace retsim {

// Non-unitary two-level step operator for one Bloch period: a beam-splitter
// mixing bands 1 and 2 with amplitude s12, followed by a phase factor
// exp(i phi) and leakage amplitude s23 on band 2.
struct CascadeModel {
  double s12 = 0.0;
  double s23 = 0.0;
  double phi = 0.0;
  Eigen::Matrix2cd U;
  std::complex<double> e1, e2;    // eigenvalues, |e1| >= |e2|
  Eigen::Vector2cd psi1, psi2;    // unit norm, leading component real-positive
  std::complex<double> c1, c2;    // (1,0)^T = c1 psi1 + c2 psi2
  bool degenerate = false;        // |e1| == |e2|: no dominant mode, Z undefined
};

// Landau-Zener survival probability exp(-pi dE^2 / (4 alpha)).
double lz_probability(double delta_E, double alpha);

// (s12, s23) for the 1-2 and 2-3 crossings at depth V0 and tilt F0.
std::pair<double, double> survival_amplitudes(double V0, double F0);

CascadeModel cascade_operator(double s12, double s23, double phi);

// Survival probabilities P_0..P_n from repeated application of U to (1,0)^T.
std::vector<double> iterate_cascade(const CascadeModel& model, int n_max);

// gamma = -log|e1|^2; throws on a degenerate model.
double asymptotic_rate(const CascadeModel& model);

// Z = |c1|^2 |<1|psi1>|^2; throws on a degenerate model.
double z_projection(const CascadeModel& model);

// Closed-form Z(s12, s23, phi); cross-checked against z_projection to 1e-6
// and throws if the two disagree.
double z_closed_form(double s12, double s23, double phi);

// First-order estimate Z = 1 + 2 s23 (p12/s12)^2 cos(phi); rejects s12 = 0.
double z_first_order(double s12, double s23, double phi);

// (Z_N, gamma_N) from a survival sequence: gamma_n = -log(P_{n+1}/P_n),
// Z_N = exp(N gamma_N - sum_{n<N} gamma_n). Needs P_0..P_{N+1} positive.
std::pair<double, double> finite_step_estimates(const std::vector<double>& P,
                                                int N);

struct ResonancePoint {
  double F0 = 0.0;
  double phi = 0.0;
  double s12 = 0.0;
  double s23 = 0.0;
  double gamma_per_period = 0.0;  // NaN where the cascade is degenerate
  double z_closed = 0.0;          // NaN where the cascade is degenerate
  double z_projection = 0.0;      // NaN where the cascade is degenerate
  double z1 = 0.0;
};

// Model predictions across a tilt grid at the depth in base; the phase per
// period comes from the numerically averaged band gap. Ordered by F0.
std::vector<ResonancePoint> resonance_map(const LatticeParams& base,
                                          const std::vector<double>& F0_grid);

}  // namespace retsim
