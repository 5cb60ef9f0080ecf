#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "retsim/experiments.hpp"

namespace {

struct SubcommandNames {
  const char* cli;
  const char* experiment;
};

constexpr SubcommandNames kSubcommands[] = {
    {"bands", "bands"},
    {"gap-curve", "gap_curve"},
    {"simulate", "simulate"},
    {"effective-map", "effective_map"},
    {"z-scaling", "z_scaling"},
    {"coupling-map", "coupling_map"},
    {"broad-average", "broad_average"},
    {"sweep", "sweep"},
};

constexpr const char* kDescriptions[] = {
    "Band structure over the Brillouin zone",
    "Averaged 1-2 band gap vs depth, with shallow/deep estimates",
    "Full wave-packet propagation time series",
    "Effective-model decay rate and renormalization vs tilt",
    "Z-1 scaling curves for depths 1,2,3,4",
    "Normalized interband coupling over one Bloch period",
    "Brillouin-zone-averaged decay fits",
    "Simulation-backed decay fits over a parameter grid",
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tilted-lattice wave-packet decay toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::int64_t seed = 0;
  int workers = 0;
  for (std::size_t i = 0; i < std::size(kSubcommands); ++i) {
    CLI::App* sub = app.add_subcommand(kSubcommands[i].cli, kDescriptions[i]);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_path, "output CSV path");
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--workers", workers, "worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::string experiment;
  for (const SubcommandNames& names : kSubcommands)
    if (sub->get_name() == names.cli) experiment = names.experiment;

  try {
    retsim::ExperimentConfig config;
    if (sub->count("--config")) {
      config = retsim::load_config_file(config_path);
      if (config.experiment.empty()) {
        config.experiment = experiment;
      } else if (config.experiment != experiment) {
        throw std::invalid_argument("config experiment '" + config.experiment +
                                    "' does not match subcommand '" +
                                    sub->get_name() + "'");
      }
    } else {
      config = retsim::default_config(experiment);
    }
    if (sub->count("--out")) config.output_path = out_path;
    if (sub->count("--seed"))
      config.rng_seed = static_cast<std::uint64_t>(seed);
    if (sub->count("--workers")) config.workers = workers;
    retsim::run_experiment(config);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
