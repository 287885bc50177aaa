#pragma once

// Unsupervised training: seeded dataset generation with disjoint train/test
// lineage, mini-batch gradient descent on the physical objectives, and
// normalized-performance evaluation against solver baselines.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "wgo/channels.hpp"
#include "wgo/gnn.hpp"
#include "wgo/graphs.hpp"
#include "wgo/objectives.hpp"
#include "wgo/solvers.hpp"

namespace wgo::training {

enum class Split { train, test };
enum class Family { d2d, cellfree, hybrid };

// Everything needed to draw one instance; which fields matter depends on kind.
struct Scenario {
  std::string kind = "gaussian_ic";  // gaussian_ic | d2d_geometric | cellfree | hybrid
  std::size_t k = 10;                // pairs (d2d) or users (cellfree)
  channels::GaussianIcConfig gauss;
  channels::D2dGeomConfig geom;
  // Geometric extras, drawn per sample when enabled.
  bool geom_random_power = false;
  double geom_power_lo_dbm = 10.0, geom_power_hi_dbm = 30.0;
  bool geom_random_heights = false;
  double tx_height_lo_m = 30.0, tx_height_hi_m = 50.0;
  double rx_height_lo_m = 1.0, rx_height_hi_m = 3.0;
  std::size_t m = 30;  // cellfree APs
  channels::CellFreeConfig cellfree;
  std::size_t nt = 144, nr = 36, ns = 2, nrf = 4;
  channels::MmWaveConfig mmwave;
};

Family family_of(const Scenario& s);
channels::ProblemInstance make_instance(const Scenario& s, std::uint64_t seed);

struct Dataset {
  Split split = Split::train;
  Family family = Family::d2d;
  std::vector<channels::ProblemInstance> samples;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> sample_seeds;  // lineage, one per sample
};

// Train and test draws of one master seed use disjoint child-seed ranges.
Dataset make_dataset(const Scenario& s, Split split, std::size_t n, std::uint64_t master_seed);
// Throws if any lineage seed appears in both sets.
void assert_no_leakage(const Dataset& train, const Dataset& test);

// Instance plus its graph and objective coefficients, built once.
struct Prepared {
  channels::ProblemInstance inst;
  graphs::CommGraph graph;
  objectives::CellFreeCoeffs coeffs;  // cellfree only
};
std::vector<Prepared> prepare(const Dataset& ds);

struct TrainConfig {
  std::string optimizer = "adam";  // adam | sgd
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  std::string loss = "neg_sum_rate";  // neg_sum_rate | neg_soft_min_rate | hybrid_residual
  double softmin_beta = 20.0;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;  // epochs between test-metric evaluations
};

struct TrainRecord {
  std::vector<double> train_loss;   // one entry per epoch
  std::vector<double> test_metric;  // per epoch; carries the last value between evals
  std::vector<double> wall_time_s;  // per epoch
};

// Mean per-sample loss of a batch on one tape; the gradient path used by
// train() computes the same quantity sample by sample.
num::Tensor unsupervised_loss(const gnn::GnnModel& model, const gnn::BoundParams& bp,
                              std::span<const Prepared> batch, const TrainConfig& cfg);

struct TrainResult {
  gnn::GnnModel model;  // best-test-metric checkpoint (final when no eval_fn)
  TrainRecord record;
};

// eval_fn maps a model to a score where larger is better; when given, the
// returned model is the best-scoring checkpoint.
TrainResult train(const gnn::GnnModel& model, const std::vector<Prepared>& train_set,
                  const TrainConfig& cfg,
                  const std::function<double(const gnn::GnnModel&)>& eval_fn = {});

// mean(model objective) / mean(baseline objective); baselines are objective
// values per test instance. Throws when the baseline mean is zero.
double normalized_performance(const std::vector<double>& model_objectives,
                              const std::vector<double>& baseline_objectives);

// Per-instance objective of a power model: weighted sum rate (d2d) or hard
// minimum rate (cellfree).
std::vector<double> model_objectives(const gnn::GnnModel& model,
                                     const std::vector<Prepared>& test_set);

double evaluate(const gnn::GnnModel& model, const std::vector<Prepared>& test_set,
                const std::vector<double>& baseline_objectives);

// Baseline objective vectors.
std::vector<double> baseline_best_restarts(const std::vector<Prepared>& set,
                                           std::size_t n_init, std::uint64_t seed,
                                           const solvers::WmmseOptions& opt = {});
std::vector<double> baseline_maxmin(const std::vector<Prepared>& set, double tol);
std::vector<double> baseline_max_power(const std::vector<Prepared>& set);

// JSON round trips for configs and records.
std::string to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);
std::string to_json(const TrainRecord& rec);

}  // namespace wgo::training
