#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "retsim/lattice.hpp"

namespace retsim {

enum class ProtocolKind {
  constant_force,       // plain tilted-lattice evolution
  phase_reversal_halt,  // force off for half an inter-band beat each period
  randomized_halt,      // halt applied with probability p each period
  empty_second_band,    // project out bands >= 2 each period (non-unitary)
};

struct Protocol {
  ProtocolKind kind = ProtocolKind::constant_force;
  double halt_probability = 0.0;  // randomized_halt only
  std::uint64_t rng_seed = 0;     // randomized_halt only
};

void validate(const Protocol& protocol);

struct WavePacketState {
  Eigen::VectorXcd amplitudes;  // plane-wave components n = -N..N
  double time = 0.0;
  double quasi_momentum = 0.0;  // instantaneous, unfolded
  int halfwidth() const {
    return (static_cast<int>(amplitudes.size()) - 1) / 2;
  }
};

struct Trajectory {
  std::vector<double> sample_times;
  // lowest four adiabatic band populations at each sample
  std::vector<std::array<double, 4>> band_populations;
  std::vector<double> survival_series;  // band-1 population
  std::vector<double> norm_series;      // total probability
  double bloch_period = 0.0;
  double lost_norm = 0.0;  // removed by empty_second_band projections
};

// Propagate a band-1 wave packet launched at params.k0 through
// n_bloch_periods of tilted-lattice dynamics, sampling samples_per_period
// times per period (plus the initial point). The splitting step count is
// raised automatically if the per-period norm drift exceeds 1e-8.
Trajectory evolve(const LatticeParams& params, const Protocol& protocol,
                  int n_bloch_periods, int samples_per_period,
                  int steps_per_period = 4096);

// Populations of the lowest n_bands adiabatic bands at the state's
// quasi-momentum, computed in the state's own plane-wave basis (so a sum
// over all 2N+1 bands reproduces the state's norm exactly).
std::vector<double> adiabatic_populations(const WavePacketState& state,
                                          const LatticeParams& params,
                                          int n_bands = 4);

// |<1|d/dt|2>| along k(t) = k0 + F0 t / pi, central differences in a
// parallel-transport gauge; normalized to its maximum when requested.
std::vector<double> adiabatic_coupling(const LatticeParams& params,
                                       const std::vector<double>& t_grid,
                                       bool normalize = false);

// Two-level Lorentzian (w/2) / (w^2 + (t - t_center)^2) with half-width
// w = gap / (2 sweep_rate), the avoided-crossing prediction for the
// coupling above.
std::vector<double> lz_coupling_lorentzian(double gap, double sweep_rate,
                                           const std::vector<double>& t_grid,
                                           double t_center);

// The protocol's end-of-period action (halt, projection, ...) applied to a
// state sitting exactly at time = period_index * T_B; identity for
// constant_force. Randomized decisions depend only on (rng_seed,
// period_index), so replays are reproducible.
WavePacketState apply_protocol_action(const WavePacketState& state,
                                      const LatticeParams& params,
                                      const Protocol& protocol,
                                      int period_index);

}  // namespace retsim
