#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "retsim/decay.hpp"
#include "retsim/lattice.hpp"
#include "retsim/propagator.hpp"

namespace retsim {

struct SweepSpec {
  std::string parameter;  // "F0", "phi_over_2pi", "V0", or "k0"
  double min = 0.0;
  double max = 0.0;
  int count = 0;
};

struct ExperimentConfig {
  std::string experiment;  // bands, gap_curve, simulate, effective_map,
                           // z_scaling, coupling_map, broad_average, sweep
  LatticeParams params;
  Protocol protocol;
  std::optional<SweepSpec> sweep;
  std::string output_path = "out.csv";
  std::uint64_t rng_seed = 0;
  int n_periods = 12;
  int samples_per_period = 80;
  int steps_per_period = 4096;
  int skip_transient = 2;
  int k0_grid_points = 32;          // broad_average only
  bool include_simulation = false;  // z_scaling only
  int workers = 0;                  // 0 = hardware concurrency
};

// Fills the per-experiment default sweep where none was given.
ExperimentConfig default_config(const std::string& experiment);

// Strict JSON parse (unknown keys rejected) on top of default_config.
ExperimentConfig load_config_file(const std::string& path);

void validate(const ExperimentConfig& config);

// Dispatches on config.experiment, writes the CSV named by output_path plus
// a <output_path>.meta.json sidecar, and prints suggested column pairings.
void run_experiment(const ExperimentConfig& config);

// Deterministic bounded worker pool; fn(i) must touch only slot i state.
// The lowest-index failure is rethrown after all workers finish.
void parallel_map(int n_items, int workers, const std::function<void(int)>& fn);

// evolve -> stroboscopic plateau samples -> log-linear fit.
DecayEstimate narrow_decay(const LatticeParams& params,
                           const Protocol& protocol, int n_periods,
                           int samples_per_period, int steps_per_period,
                           int skip_transient);

// Dense log-linear fit over a full survival curve for t >= skip * T_B.
DecayEstimate dense_decay(const Trajectory& trajectory, int skip_transient);

// Uniform-k0 average of P(t) over the Brillouin zone, then a dense fit on
// the averaged curve. k0_points = 1 degenerates to the single k0 = 0 run.
DecayEstimate broad_decay(const LatticeParams& base, int k0_points,
                          int n_periods, int samples_per_period,
                          int steps_per_period, int skip_transient,
                          int workers);

}  // namespace retsim
