#include "retsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "retsim/cascade.hpp"
#include "retsim/csv.hpp"
#include "retsim/kernels.hpp"

namespace retsim {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kCodeVersion = "1.0.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kCouplingGridPoints = 257;  // time resolution of coupling_map

const std::vector<std::string> kExperiments = {
    "bands",      "gap_curve",    "simulate",      "effective_map",
    "z_scaling",  "coupling_map", "broad_average", "sweep"};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = a + (b - a) * i / (n - 1);
  return xs;
}

int effective_workers(int workers) {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepSpec default_sweep(const std::string& experiment) {
  if (experiment == "gap_curve") return {"V0", 0.0, 10.0, 51};
  if (experiment == "effective_map") return {"phi_over_2pi", 1.0, 12.0, 221};
  if (experiment == "z_scaling") return {"phi_over_2pi", 2.0, 8.0, 25};
  if (experiment == "coupling_map") return {"V0", 0.25, 6.0, 24};
  if (experiment == "broad_average") return {"phi_over_2pi", 2.0, 5.0, 11};
  if (experiment == "sweep") return {"F0", 0.5, 1.5, 21};
  return {};
}

bool needs_sweep(const std::string& experiment) {
  return !default_sweep(experiment).parameter.empty();
}

std::string kind_name(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::constant_force: return "constant_force";
    case ProtocolKind::phase_reversal_halt: return "phase_reversal_halt";
    case ProtocolKind::randomized_halt: return "randomized_halt";
    case ProtocolKind::empty_second_band: return "empty_second_band";
  }
  throw std::invalid_argument("unknown protocol kind");
}

ProtocolKind parse_kind(const std::string& name) {
  for (ProtocolKind kind :
       {ProtocolKind::constant_force, ProtocolKind::phase_reversal_halt,
        ProtocolKind::randomized_halt, ProtocolKind::empty_second_band})
    if (kind_name(kind) == name) return kind;
  throw std::invalid_argument("unknown protocol kind: " + name);
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (const auto& item : obj.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw std::invalid_argument("unknown key '" + item.key() + "' in " +
                                  where);
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("bad value for '") + key + "'");
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["params"] = {{"V0", c.params.V0},
                 {"F0", c.params.F0},
                 {"k0", c.params.k0},
                 {"basis_halfwidth", c.params.basis_halfwidth},
                 {"bz_grid_points", c.params.bz_grid_points}};
  j["protocol"] = {{"kind", kind_name(c.protocol.kind)},
                   {"halt_probability", c.protocol.halt_probability},
                   {"rng_seed", c.protocol.rng_seed}};
  if (c.sweep)
    j["sweep"] = {{"parameter", c.sweep->parameter},
                  {"min", c.sweep->min},
                  {"max", c.sweep->max},
                  {"count", c.sweep->count}};
  else
    j["sweep"] = nullptr;
  j["output_path"] = c.output_path;
  j["rng_seed"] = c.rng_seed;
  j["n_periods"] = c.n_periods;
  j["samples_per_period"] = c.samples_per_period;
  j["steps_per_period"] = c.steps_per_period;
  j["skip_transient"] = c.skip_transient;
  j["k0_grid_points"] = c.k0_grid_points;
  j["include_simulation"] = c.include_simulation;
  j["workers"] = c.workers;
  return j;
}

double sweep_to_F0(const SweepSpec& sweep, double x, double gap) {
  if (sweep.parameter == "F0") return x;
  if (sweep.parameter == "phi_over_2pi") return gap / x;
  throw std::invalid_argument("sweep parameter '" + sweep.parameter +
                              "' cannot define a tilt grid");
}

struct MetaSidecar {
  json body;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  explicit MetaSidecar(const ExperimentConfig& c) {
    body["code_version"] = kCodeVersion;
    body["kernels"] = kernels::active().name;
    body["config"] = config_to_json(c);
  }

  void write(const std::string& csv_path) {
    body["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const std::string path = csv_path + ".meta.json";
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << body.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
  }
};

json estimate_to_json(const DecayEstimate& est) {
  return {{"Z", est.Z},
          {"gamma_per_period", est.gamma_per_period},
          {"gamma_per_time", est.gamma_per_time},
          {"n_min", est.n_min},
          {"n_max", est.n_max},
          {"residual", est.residual},
          {"nonexponential_warning", est.nonexponential_warning}};
}

void run_bands(const ExperimentConfig& c, MetaSidecar& meta) {
  if (2 * c.params.basis_halfwidth + 1 < 5)
    throw std::invalid_argument("bands export needs basis_halfwidth >= 2");
  const BlochSpectrum spectrum = band_spectrum(c.params);
  CsvWriter csv(c.output_path, {"k", "E1", "E2", "E3", "E4", "E5"});
  for (std::size_t i = 0; i < spectrum.k_grid.size(); ++i) {
    const Eigen::VectorXd& e = spectrum.energies[i];
    csv.row({spectrum.k_grid[i], e(0), e(1), e(2), e(3), e(4)});
  }
  csv.close();
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path
            << "; suggested columns: k vs E1..E5\n";
}

void run_gap_curve(const ExperimentConfig& c, MetaSidecar& meta) {
  const SweepSpec& sweep = *c.sweep;
  if (sweep.parameter != "V0")
    throw std::invalid_argument("gap_curve sweeps V0");
  if (sweep.min < 0.0)
    throw std::invalid_argument("gap_curve needs V0 >= 0");
  const std::vector<double> grid = linspace(sweep.min, sweep.max, sweep.count);
  std::vector<std::array<double, 4>> rows(grid.size());
  parallel_map(static_cast<int>(grid.size()), c.workers, [&](int i) {
    LatticeParams p = c.params;
    p.V0 = grid[i];
    rows[i] = {grid[i], average_band_gap(p), gap_estimate_small_v(grid[i]),
               grid[i] > 0.25 ? gap_estimate_large_v(grid[i]) : kNaN};
  });
  CsvWriter csv(c.output_path, {"V0", "avg_gap", "gap_small_v", "gap_large_v"});
  for (const auto& r : rows) csv.row({r[0], r[1], r[2], r[3]});
  csv.close();
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path
            << "; suggested columns: V0 vs avg_gap, gap_small_v, gap_large_v\n";
}

void run_simulate(const ExperimentConfig& c, MetaSidecar& meta) {
  const Trajectory traj = evolve(c.params, c.protocol, c.n_periods,
                                 c.samples_per_period, c.steps_per_period);
  CsvWriter csv(c.output_path,
                {"time", "time_over_TB", "P_band1", "P_band2", "P_rest",
                 "norm"});
  for (std::size_t i = 0; i < traj.sample_times.size(); ++i) {
    const double P1 = traj.band_populations[i][0];
    const double P2 = traj.band_populations[i][1];
    const double norm = traj.norm_series[i];
    csv.row({traj.sample_times[i], traj.sample_times[i] / traj.bloch_period,
             P1, P2, norm - P1 - P2, norm});
  }
  csv.close();
  try {
    const DecayEstimate est =
        fit_exponential(sample_plateaus(traj), c.skip_transient);
    meta.body["decay_estimate"] = estimate_to_json(est);
    std::cout << "decay fit: Z = " << format_double(est.Z)
              << ", gamma_per_period = " << format_double(est.gamma_per_period)
              << "\n";
  } catch (const std::invalid_argument&) {
    meta.body["decay_estimate"] = nullptr;  // not enough plateau coverage
  }
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path
            << "; suggested columns: time_over_TB vs P_band1, P_band2, norm\n";
}

void run_effective_map(const ExperimentConfig& c, MetaSidecar& meta) {
  const SweepSpec& sweep = *c.sweep;
  if (sweep.min <= 0.0)
    throw std::invalid_argument("effective_map grid must stay positive");
  const double gap = average_band_gap(c.params);
  std::vector<double> F0s(sweep.count);
  const std::vector<double> xs = linspace(sweep.min, sweep.max, sweep.count);
  for (int i = 0; i < sweep.count; ++i)
    F0s[i] = sweep_to_F0(sweep, xs[i], gap);
  const std::vector<ResonancePoint> map = resonance_map(c.params, F0s);
  CsvWriter csv(c.output_path,
                {"F0", "phi_over_2pi", "s12", "s23", "gamma_per_period",
                 "Z_closed", "Z_projection", "Z1"});
  for (const ResonancePoint& pt : map)
    csv.row({pt.F0, pt.phi / (2.0 * std::numbers::pi), pt.s12, pt.s23,
             pt.gamma_per_period, pt.z_closed, pt.z_projection, pt.z1});
  csv.close();
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path
            << "; suggested columns: phi_over_2pi vs gamma_per_period, "
               "Z_projection\n";
}

void run_z_scaling(const ExperimentConfig& c, MetaSidecar& meta) {
  const SweepSpec& sweep = *c.sweep;
  if (sweep.min <= 0.0)
    throw std::invalid_argument("z_scaling grid must stay positive");
  const std::vector<double> xs = linspace(sweep.min, sweep.max, sweep.count);
  const std::vector<double> depths = {1.0, 2.0, 3.0, 4.0};

  struct Row {
    double V0, F0, x, z_model, z_sim;
  };
  std::vector<Row> rows(depths.size() * xs.size());
  std::vector<double> gaps(depths.size());
  for (std::size_t d = 0; d < depths.size(); ++d) {
    LatticeParams p = c.params;
    p.V0 = depths[d];
    gaps[d] = average_band_gap(p);
  }
  parallel_map(static_cast<int>(rows.size()), c.workers, [&](int i) {
    const std::size_t d = i / xs.size();
    const double x = xs[i % xs.size()];
    const double F0 = sweep.parameter == "F0" ? x : gaps[d] / x;
    const double phi_over_2pi =
        sweep.parameter == "F0" ? gaps[d] / F0 : x;
    const auto [s12, s23] = survival_amplitudes(depths[d], F0);
    const CascadeModel model =
        cascade_operator(s12, s23, 2.0 * std::numbers::pi * phi_over_2pi);
    double z_model = kNaN;
    if (!model.degenerate) z_model = z_projection(model);
    double z_sim = kNaN;
    if (c.include_simulation) {
      LatticeParams p = c.params;
      p.V0 = depths[d];
      p.F0 = F0;
      z_sim = narrow_decay(p, Protocol{}, c.n_periods, c.samples_per_period,
                           c.steps_per_period, c.skip_transient)
                  .Z;
    }
    rows[i] = {depths[d], F0, phi_over_2pi, z_model - 1.0, z_sim - 1.0};
  });
  CsvWriter csv(c.output_path,
                {"V0", "F0", "phi_over_2pi", "Z_minus_1_model",
                 "Z_minus_1_sim"});
  for (const Row& r : rows) csv.row({r.V0, r.F0, r.x, r.z_model, r.z_sim});
  csv.close();
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path
            << "; suggested columns: phi_over_2pi vs Z_minus_1_model per V0\n";
}

void run_coupling_map(const ExperimentConfig& c, MetaSidecar& meta) {
  const SweepSpec& sweep = *c.sweep;
  if (sweep.parameter != "V0")
    throw std::invalid_argument("coupling_map sweeps V0");
  if (sweep.min <= 0.0)
    throw std::invalid_argument("coupling_map needs V0 > 0");
  const std::vector<double> depths = linspace(sweep.min, sweep.max, sweep.count);
  const double TB = bloch_period(c.params.F0);
  const std::vector<double> t_grid = linspace(0.0, TB, kCouplingGridPoints);
  std::vector<std::vector<double>> curves(depths.size());
  parallel_map(static_cast<int>(depths.size()), c.workers, [&](int i) {
    LatticeParams p = c.params;
    p.V0 = depths[i];
    curves[i] = adiabatic_coupling(p, t_grid, true);
  });
  CsvWriter csv(c.output_path, {"V0", "time_over_TB", "c_normalized"});
  for (std::size_t i = 0; i < depths.size(); ++i)
    for (int j = 0; j < kCouplingGridPoints; ++j)
      csv.row({depths[i], t_grid[j] / TB, curves[i][j]});
  csv.close();
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path
            << "; suggested columns: time_over_TB vs c_normalized per V0\n";
}

void run_broad_average(const ExperimentConfig& c, MetaSidecar& meta) {
  const SweepSpec& sweep = *c.sweep;
  if (sweep.min <= 0.0)
    throw std::invalid_argument("broad_average grid must stay positive");
  const double gap = average_band_gap(c.params);
  const std::vector<double> xs = linspace(sweep.min, sweep.max, sweep.count);

  struct Row {
    double F0, x, z, gamma;
  };
  std::vector<Row> rows(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F0 = sweep_to_F0(sweep, xs[i], gap);
    LatticeParams p = c.params;
    p.F0 = F0;
    const DecayEstimate est =
        broad_decay(p, c.k0_grid_points, c.n_periods, c.samples_per_period,
                    c.steps_per_period, c.skip_transient, c.workers);
    rows[i] = {F0, sweep.parameter == "F0" ? gap / F0 : xs[i], est.Z - 1.0,
               est.gamma_per_period};
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.F0 < b.F0; });
  CsvWriter csv(c.output_path,
                {"F0", "phi_over_2pi", "Z_minus_1", "gamma_per_period"});
  for (const Row& r : rows) csv.row({r.F0, r.x, r.z, r.gamma});
  csv.close();
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path
            << "; suggested columns: phi_over_2pi vs Z_minus_1\n";
}

void run_sweep(const ExperimentConfig& c, MetaSidecar& meta) {
  const SweepSpec& sweep = *c.sweep;
  const std::vector<double> xs = linspace(sweep.min, sweep.max, sweep.count);
  double gap = 0.0;
  if (sweep.parameter == "phi_over_2pi") gap = average_band_gap(c.params);

  struct Row {
    double x = 0.0;
    DecayEstimate est;
  };
  std::vector<Row> rows(xs.size());
  parallel_map(static_cast<int>(xs.size()), c.workers, [&](int i) {
    LatticeParams p = c.params;
    if (sweep.parameter == "F0") {
      p.F0 = xs[i];
    } else if (sweep.parameter == "phi_over_2pi") {
      p.F0 = gap / xs[i];
    } else if (sweep.parameter == "V0") {
      p.V0 = xs[i];
    } else if (sweep.parameter == "k0") {
      p.k0 = xs[i];
    } else {
      throw std::invalid_argument("unknown sweep parameter: " +
                                  sweep.parameter);
    }
    rows[i].x = xs[i];
    rows[i].est = narrow_decay(p, c.protocol, c.n_periods,
                               c.samples_per_period, c.steps_per_period,
                               c.skip_transient);
  });
  CsvWriter csv(c.output_path,
                {sweep.parameter, "Z", "gamma_per_period", "gamma_per_time",
                 "n_min", "n_max", "residual"});
  for (const Row& r : rows)
    csv.row({r.x, r.est.Z, r.est.gamma_per_period, r.est.gamma_per_time,
             static_cast<double>(r.est.n_min),
             static_cast<double>(r.est.n_max), r.est.residual});
  csv.close();
  meta.write(c.output_path);
  std::cout << "wrote " << c.output_path << "; suggested columns: "
            << sweep.parameter << " vs gamma_per_period, Z\n";
}

}  // namespace

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (needs_sweep(experiment)) c.sweep = default_sweep(experiment);
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") +
                                e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("config must be a JSON object");
  check_keys(j,
             {"experiment", "params", "protocol", "sweep", "output_path",
              "rng_seed", "n_periods", "samples_per_period",
              "steps_per_period", "skip_transient", "k0_grid_points",
              "include_simulation", "workers"},
             "config");
  ExperimentConfig c;
  read_field(j, "experiment", c.experiment);
  if (j.contains("params")) {
    const json& p = j.at("params");
    check_keys(p, {"V0", "F0", "k0", "basis_halfwidth", "bz_grid_points"},
               "params");
    read_field(p, "V0", c.params.V0);
    read_field(p, "F0", c.params.F0);
    read_field(p, "k0", c.params.k0);
    read_field(p, "basis_halfwidth", c.params.basis_halfwidth);
    read_field(p, "bz_grid_points", c.params.bz_grid_points);
  }
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    check_keys(p, {"kind", "halt_probability"}, "protocol");
    std::string kind = kind_name(c.protocol.kind);
    read_field(p, "kind", kind);
    c.protocol.kind = parse_kind(kind);
    read_field(p, "halt_probability", c.protocol.halt_probability);
  }
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    const json& s = j.at("sweep");
    check_keys(s, {"parameter", "min", "max", "count"}, "sweep");
    SweepSpec spec;
    read_field(s, "parameter", spec.parameter);
    read_field(s, "min", spec.min);
    read_field(s, "max", spec.max);
    read_field(s, "count", spec.count);
    c.sweep = spec;
  }
  read_field(j, "output_path", c.output_path);
  read_field(j, "rng_seed", c.rng_seed);
  read_field(j, "n_periods", c.n_periods);
  read_field(j, "samples_per_period", c.samples_per_period);
  read_field(j, "steps_per_period", c.steps_per_period);
  read_field(j, "skip_transient", c.skip_transient);
  read_field(j, "k0_grid_points", c.k0_grid_points);
  read_field(j, "include_simulation", c.include_simulation);
  read_field(j, "workers", c.workers);
  return c;
}

void validate(const ExperimentConfig& c) {
  if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) ==
      kExperiments.end())
    throw std::invalid_argument("unknown experiment: '" + c.experiment + "'");
  validate(c.params);
  validate(c.protocol);
  if (c.sweep) {
    if (c.sweep->count < 2)
      throw std::invalid_argument("sweep count must be >= 2");
    if (!(c.sweep->min < c.sweep->max))
      throw std::invalid_argument("sweep needs min < max");
    const std::vector<std::string> parameters = {"F0", "phi_over_2pi", "V0",
                                                 "k0"};
    if (std::find(parameters.begin(), parameters.end(), c.sweep->parameter) ==
        parameters.end())
      throw std::invalid_argument("unknown sweep parameter: '" +
                                  c.sweep->parameter + "'");
  } else if (needs_sweep(c.experiment)) {
    throw std::invalid_argument(c.experiment + " needs a sweep grid");
  }
  if (c.output_path.empty())
    throw std::invalid_argument("output_path must not be empty");
  if (c.n_periods < 1)
    throw std::invalid_argument("n_periods must be >= 1");
  if (c.samples_per_period < 2)
    throw std::invalid_argument("samples_per_period must be >= 2");
  if (c.steps_per_period < 1)
    throw std::invalid_argument("steps_per_period must be >= 1");
  if (c.skip_transient < 0)
    throw std::invalid_argument("skip_transient must be >= 0");
  if (c.k0_grid_points != 1 && c.k0_grid_points < 32)
    throw std::invalid_argument(
        "k0_grid_points must be 1 (degenerate) or >= 32");
  if (c.workers < 0)
    throw std::invalid_argument("workers must be >= 0");
}

void parallel_map(int n_items, int workers,
                  const std::function<void(int)>& fn) {
  if (n_items <= 0) throw std::invalid_argument("empty grid");
  const int W = std::min(effective_workers(workers), n_items);
  std::atomic<int> next{0};
  std::mutex err_mutex;
  int err_index = std::numeric_limits<int>::max();
  std::exception_ptr err;
  const auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_items) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  if (W <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(W);
    for (int t = 0; t < W; ++t) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
  }
  if (err) {
    const std::string where = "sweep point " + std::to_string(err_index);
    try {
      std::rethrow_exception(err);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
}

DecayEstimate narrow_decay(const LatticeParams& params,
                           const Protocol& protocol, int n_periods,
                           int samples_per_period, int steps_per_period,
                           int skip_transient) {
  const Trajectory traj =
      evolve(params, protocol, n_periods, samples_per_period, steps_per_period);
  return fit_exponential(sample_plateaus(traj), skip_transient);
}

DecayEstimate dense_decay(const Trajectory& trajectory, int skip_transient) {
  if (skip_transient < 0)
    throw std::invalid_argument("skip_transient must be >= 0");
  const double TB = trajectory.bloch_period;
  if (!(TB > 0.0)) throw std::invalid_argument("trajectory lacks a period");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < trajectory.sample_times.size(); ++i) {
    const double x = trajectory.sample_times[i] / TB;
    if (x < skip_transient - 1e-9) continue;
    const double P = trajectory.survival_series[i];
    if (!(P > 0.0))
      throw std::invalid_argument("non-positive survival sample in dense fit");
    xs.push_back(x);
    ys.push_back(std::log(P));
  }
  if (xs.size() < 3)
    throw std::invalid_argument("dense fit needs at least 3 samples");
  const double m = xs.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / m;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    rss += r * r;
  }
  DecayEstimate est;
  est.gamma_per_period = -slope;
  est.gamma_per_time = -slope / TB;
  est.Z = std::exp(intercept);
  est.n_min = skip_transient;
  est.n_max = static_cast<int>(std::lround(xs.back()));
  est.residual = std::sqrt(rss / m);
  est.nonexponential_warning = est.residual > 0.05;
  return est;
}

DecayEstimate broad_decay(const LatticeParams& base, int k0_points,
                          int n_periods, int samples_per_period,
                          int steps_per_period, int skip_transient,
                          int workers) {
  if (k0_points != 1 && k0_points < 32)
    throw std::invalid_argument(
        "k0_grid_points must be 1 (degenerate) or >= 32");
  std::vector<std::vector<double>> survival(k0_points);
  std::vector<std::vector<double>> times(k0_points);
  parallel_map(k0_points, workers, [&](int i) {
    LatticeParams p = base;
    p.k0 = -1.0 + 2.0 * (i + 0.5) / k0_points;
    const Trajectory traj = evolve(p, Protocol{}, n_periods,
                                   samples_per_period, steps_per_period);
    survival[i] = traj.survival_series;
    times[i] = traj.sample_times;
  });
  Trajectory averaged;
  averaged.bloch_period = bloch_period(base.F0);
  averaged.sample_times = times[0];
  averaged.survival_series.assign(survival[0].size(), 0.0);
  for (int i = 0; i < k0_points; ++i) {
    if (survival[i].size() != averaged.survival_series.size())
      throw std::runtime_error("inconsistent sample grids in broad average");
    for (std::size_t j = 0; j < survival[i].size(); ++j)
      averaged.survival_series[j] += survival[i][j];
  }
  for (double& v : averaged.survival_series) v /= k0_points;
  return dense_decay(averaged, skip_transient);
}

void run_experiment(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (!c.sweep && needs_sweep(c.experiment))
    c.sweep = default_sweep(c.experiment);
  c.protocol.rng_seed = c.rng_seed;
  validate(c);
  MetaSidecar meta(c);
  if (c.experiment == "bands") {
    run_bands(c, meta);
  } else if (c.experiment == "gap_curve") {
    run_gap_curve(c, meta);
  } else if (c.experiment == "simulate") {
    run_simulate(c, meta);
  } else if (c.experiment == "effective_map") {
    run_effective_map(c, meta);
  } else if (c.experiment == "z_scaling") {
    run_z_scaling(c, meta);
  } else if (c.experiment == "coupling_map") {
    run_coupling_map(c, meta);
  } else if (c.experiment == "broad_average") {
    run_broad_average(c, meta);
  } else if (c.experiment == "sweep") {
    run_sweep(c, meta);
  } else {
    throw std::invalid_argument("unknown experiment: '" + c.experiment + "'");
  }
}

}  // namespace retsim
