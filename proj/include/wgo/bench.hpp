#pragma once

// Command-line experiment runner. Each experiment regenerates a desk-scale
// table or figure as CSV with one row per (arch, size, seed, metric); every
// row carries the seed that regenerates it, and metric values are
// bit-deterministic for a fixed config.

#include <cstdint>
#include <string>
#include <vector>

#include "wgo/training.hpp"

namespace wgo::bench {

extern const std::vector<std::string> kExperiments;

struct ExperimentConfig {
  std::string experiment;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_path = "results.csv";
  std::size_t jobs = 1;

  std::vector<std::string> archs;        // defaults per experiment
  std::size_t k = 10;                    // pairs / users
  std::size_t k_train = 10;              // gnn training size (scalability)
  std::vector<std::size_t> k_sweep;      // scalability / cellfree sizes
  std::vector<std::size_t> n_train_sweep;  // sample_complexity
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  std::size_t m = 30;                    // cellfree APs
  std::size_t nt = 144, nr = 36, ns = 2;
  std::vector<std::size_t> nrf_sweep;    // hybrid experiments
  std::size_t restarts = 100;            // best-of-restarts baseline
  std::size_t hidden = 32;
  std::size_t epochs = 0;                // 0: scaled from the training set size
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t timing_reps = 30;
  bool gnn_native = false;  // scalability: retrain GNNs at every size
};

struct Row {
  std::string experiment;
  std::string arch;
  std::size_t size = 0;     // K, M+K, or Nrf depending on the experiment
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0;
  double wall_time_s = 0;
};

// Defaults for a given experiment tag; throws listing valid tags when the
// tag is unknown.
ExperimentConfig default_config(const std::string& experiment);

// Applies a JSON object over an existing config (partial overrides).
void apply_json(ExperimentConfig& cfg, const std::string& json_text);

std::vector<Row> run_experiment(const ExperimentConfig& cfg);
std::vector<Row> run_timing(const ExperimentConfig& cfg);

// Sorts rows canonically and writes them with a header.
void write_csv(const std::string& path, std::vector<Row> rows);

// CLI entry point: subcommand per experiment tag, flags --config, --seed,
// --out, --jobs. Returns 0 on success, 2 on configuration errors.
int cli_main(int argc, char** argv);

}  // namespace wgo::bench
