#include "wgo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "wgo/rng.hpp"

namespace wgo::bench {

using gnn::Arch;
using gnn::GnnModel;
using nlohmann::json;
using training::Dataset;
using training::Prepared;
using training::Scenario;
using training::Split;
using training::TrainConfig;

const std::vector<std::string> kExperiments = {
    "sample_complexity", "scalability", "snr_robustness", "dist_shift",
    "cellfree_table",    "hybrid_ee",   "timing"};

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::size_t auto_epochs(const ExperimentConfig& cfg, std::size_t n_train) {
  if (cfg.epochs > 0) return cfg.epochs;
  std::size_t e = 12000 / std::max<std::size_t>(n_train, 1);
  return std::clamp<std::size_t>(e, 40, 300);
}

// Index-parallel map with deterministic result placement.
template <class F>
void parallel_for(std::size_t jobs, std::size_t n, F f) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::size_t workers = std::min(jobs, n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  for (auto& t : pool) t.join();
}

std::vector<double> restarts_baseline(const std::vector<Prepared>& set, std::size_t n_init,
                                      std::uint64_t seed, std::size_t jobs) {
  std::vector<double> out(set.size());
  parallel_for(jobs, set.size(), [&](std::size_t i) {
    const auto& inst = std::get<channels::D2dInstance>(set[i].inst);
    out[i] = solvers::best_of_restarts(inst, n_init, rng::mix(seed, i)).trace.back();
  });
  return out;
}

std::vector<double> maxmin_baseline(const std::vector<Prepared>& set, std::size_t jobs) {
  std::vector<double> out(set.size());
  parallel_for(jobs, set.size(), [&](std::size_t i) {
    const auto& inst = std::get<channels::CellFreeInstance>(set[i].inst);
    auto rep = solvers::maxmin_bisection(inst, 1e-6);
    out[i] = objectives::min_rate(set[i].coeffs, rep.p);
  });
  return out;
}

GnnModel make_power_model(const std::string& arch, const ExperimentConfig& cfg,
                          std::size_t k, std::uint64_t seed) {
  gnn::Hyper hyper;
  hyper.hidden = cfg.hidden;
  if (arch == "pcgnn") {
    hyper.layers = 2;
    return gnn::make_model(Arch::pcgnn, hyper, seed);
  }
  if (arch == "ecgnn") {
    hyper.layers = 2;
    return gnn::make_model(Arch::ecgnn, hyper, seed);
  }
  if (arch == "hetgnn") {
    hyper.layers = 3;
    return gnn::make_model(Arch::hetgnn, hyper, seed);
  }
  if (arch == "cfpcgnn") {
    hyper.layers = 2;
    return gnn::make_model(Arch::cfpcgnn, hyper, seed);
  }
  if (arch == "mlp") {
    hyper.mlp_hidden = {128, 128};
    return gnn::make_mlp_for_d2d(k, hyper, seed);
  }
  throw std::invalid_argument("unknown power architecture '" + arch + "'");
}

struct PowerEvalSet {
  std::vector<Prepared> test;
  std::vector<double> baseline;
};

GnnModel train_power_model(const GnnModel& init, const std::vector<Prepared>& train_set,
                           const PowerEvalSet& eval, const ExperimentConfig& cfg,
                           const std::string& loss, std::uint64_t seed) {
  TrainConfig tc;
  tc.lr = cfg.lr;
  tc.batch_size = cfg.batch_size;
  tc.epochs = auto_epochs(cfg, train_set.size());
  tc.loss = loss;
  tc.seed = seed;
  tc.eval_every = std::max<std::size_t>(1, tc.epochs / 8);
  auto eval_fn = [&](const GnnModel& m) {
    return training::evaluate(m, eval.test, eval.baseline);
  };
  return training::train(init, train_set, tc, eval_fn).model;
}

// ---- experiments ---------------------------------------------------------------

std::vector<Row> run_sample_complexity(const ExperimentConfig& cfg) {
  std::vector<Row> rows;
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = cfg.k;
  for (std::uint64_t seed : cfg.seeds) {
    PowerEvalSet ev;
    ev.test = training::prepare(training::make_dataset(sc, Split::test, cfg.n_test, seed));
    ev.baseline = restarts_baseline(ev.test, cfg.restarts, rng::mix(seed, 0xbeef), cfg.jobs);
    for (std::size_t n_train : cfg.n_train_sweep) {
      auto train_set =
          training::prepare(training::make_dataset(sc, Split::train, n_train, seed));
      for (const std::string& arch : cfg.archs) {
        double t0 = now_s();
        GnnModel init = make_power_model(arch, cfg, cfg.k, rng::mix(seed, 0xa));
        GnnModel m = train_power_model(init, train_set, ev, cfg, "neg_sum_rate", seed);
        double perf = training::evaluate(m, ev.test, ev.baseline);
        rows.push_back({cfg.experiment, arch, cfg.k, n_train, seed,
                        "normalized_performance", perf, now_s() - t0});
      }
    }
  }
  return rows;
}

std::vector<Row> run_scalability(const ExperimentConfig& cfg) {
  std::vector<Row> rows;
  for (std::uint64_t seed : cfg.seeds) {
    // GNNs train once at k_train and transfer; the MLP retrains per size.
    std::map<std::string, GnnModel> transfer;
    if (!cfg.gnn_native) {
      Scenario sc;
      sc.kind = "gaussian_ic";
      sc.k = cfg.k_train;
      auto train_set =
          training::prepare(training::make_dataset(sc, Split::train, cfg.n_train, seed));
      PowerEvalSet ev;
      ev.test = training::prepare(
          training::make_dataset(sc, Split::test, std::min<std::size_t>(cfg.n_test, 200), seed));
      ev.baseline = restarts_baseline(ev.test, cfg.restarts, rng::mix(seed, 0xbeef), cfg.jobs);
      for (const std::string& arch : cfg.archs) {
        if (arch == "mlp") continue;
        GnnModel init = make_power_model(arch, cfg, cfg.k_train, rng::mix(seed, 0xa));
        transfer.emplace(arch,
                         train_power_model(init, train_set, ev, cfg, "neg_sum_rate", seed));
      }
    }
    for (std::size_t k : cfg.k_sweep) {
      Scenario sc;
      sc.kind = "gaussian_ic";
      sc.k = k;
      PowerEvalSet ev;
      ev.test = training::prepare(training::make_dataset(sc, Split::test, cfg.n_test, seed));
      ev.baseline = restarts_baseline(ev.test, cfg.restarts, rng::mix(seed, 0xbeef), cfg.jobs);
      std::vector<Prepared> train_set;
      for (const std::string& arch : cfg.archs) {
        double t0 = now_s();
        GnnModel m = [&]() {
          if (arch != "mlp" && !cfg.gnn_native) return transfer.at(arch);
          if (train_set.empty())
            train_set = training::prepare(
                training::make_dataset(sc, Split::train, cfg.n_train, seed));
          GnnModel init = make_power_model(arch, cfg, k, rng::mix(seed, 0xa));
          return train_power_model(init, train_set, ev, cfg, "neg_sum_rate", seed);
        }();
        double perf = training::evaluate(m, ev.test, ev.baseline);
        rows.push_back({cfg.experiment, arch, k, cfg.n_train, seed,
                        "normalized_performance", perf, now_s() - t0});
      }
    }
  }
  return rows;
}

Scenario geometric_base(const ExperimentConfig& cfg) {
  Scenario sc;
  sc.kind = "d2d_geometric";
  sc.k = cfg.k;
  sc.geom.dmin_m = 10;
  sc.geom.dmax_m = 50;
  sc.geom.tx_power_dbm = 20;
  return sc;
}

std::vector<Row> run_snr_robustness(const ExperimentConfig& cfg) {
  std::vector<Row> rows;
  const std::vector<double> test_powers = {0, 10, 20, 30, 40};
  for (std::uint64_t seed : cfg.seeds) {
    Scenario train_sc = geometric_base(cfg);
    train_sc.geom_random_power = true;  // transmit power uniform 10-30 dBm
    auto train_set =
        training::prepare(training::make_dataset(train_sc, Split::train, cfg.n_train, seed));

    // Checkpoint on the in-distribution test draw.
    Scenario mid_sc = geometric_base(cfg);
    mid_sc.geom.tx_power_dbm = 20;
    PowerEvalSet mid;
    mid.test = training::prepare(
        training::make_dataset(mid_sc, Split::test, std::min<std::size_t>(cfg.n_test, 200), seed));
    mid.baseline = restarts_baseline(mid.test, cfg.restarts, rng::mix(seed, 0xbeef), cfg.jobs);
    GnnModel init = make_power_model("pcgnn", cfg, cfg.k, rng::mix(seed, 0xa));
    GnnModel mixed = train_power_model(init, train_set, mid, cfg, "neg_sum_rate", seed);

    for (double pw : test_powers) {
      Scenario test_sc = geometric_base(cfg);
      test_sc.geom.tx_power_dbm = pw;
      PowerEvalSet ev;
      ev.test = training::prepare(training::make_dataset(test_sc, Split::test, cfg.n_test, seed));
      ev.baseline = restarts_baseline(ev.test, cfg.restarts, rng::mix(seed, 0xbeef), cfg.jobs);

      double t0 = now_s();
      double perf = training::evaluate(mixed, ev.test, ev.baseline);
      rows.push_back({cfg.experiment, "pcgnn", static_cast<std::size_t>(pw), cfg.n_train,
                      seed, "normalized_performance", perf, now_s() - t0});

      t0 = now_s();
      auto full_train =
          training::prepare(training::make_dataset(test_sc, Split::train, cfg.n_train, seed));
      GnnModel finit = make_power_model("pcgnn", cfg, cfg.k, rng::mix(seed, 0xb));
      GnnModel full = train_power_model(finit, full_train, ev, cfg, "neg_sum_rate", seed);
      rows.push_back({cfg.experiment, "pcgnn_full", static_cast<std::size_t>(pw), cfg.n_train,
                      seed, "normalized_performance",
                      training::evaluate(full, ev.test, ev.baseline), now_s() - t0});
    }
  }
  return rows;
}

std::vector<Row> run_dist_shift(const ExperimentConfig& cfg) {
  std::vector<Row> rows;
  struct Setting {
    std::string name;
    Scenario train_sc, test_sc;
  };
  std::vector<Setting> settings;
  {
    Setting s;
    s.name = "user_dist";
    s.train_sc = geometric_base(cfg);
    s.train_sc.geom.dmin_m = 30;
    s.train_sc.geom.dmax_m = 30;
    s.test_sc = geometric_base(cfg);
    settings.push_back(s);
  }
  {
    Setting s;
    s.name = "antenna_height";
    s.train_sc = geometric_base(cfg);
    s.test_sc = geometric_base(cfg);
    s.test_sc.geom_random_heights = true;
    settings.push_back(s);
  }
  {
    Setting s;
    s.name = "los_nlos";
    s.train_sc = geometric_base(cfg);
    s.test_sc = geometric_base(cfg);
    s.test_sc.geom.nlos_prob = 0.5;
    settings.push_back(s);
  }

  for (std::uint64_t seed : cfg.seeds) {
    std::size_t idx = 0;
    for (const Setting& st : settings) {
      ++idx;
      PowerEvalSet ev;
      ev.test = training::prepare(
          training::make_dataset(st.test_sc, Split::test, cfg.n_test, seed));
      ev.baseline = restarts_baseline(ev.test, cfg.restarts, rng::mix(seed, 0xbeef), cfg.jobs);

      // In-distribution eval set for checkpointing the shifted-train model.
      PowerEvalSet indist;
      indist.test = training::prepare(training::make_dataset(
          st.train_sc, Split::test, std::min<std::size_t>(cfg.n_test, 200),
          rng::mix(seed, 0x11)));
      indist.baseline =
          restarts_baseline(indist.test, cfg.restarts, rng::mix(seed, 0xbeef), cfg.jobs);

      double t0 = now_s();
      auto train_set = training::prepare(
          training::make_dataset(st.train_sc, Split::train, cfg.n_train, seed));
      GnnModel init = make_power_model("pcgnn", cfg, cfg.k, rng::mix(seed, 0xa));
      GnnModel shifted = train_power_model(init, train_set, indist, cfg, "neg_sum_rate", seed);
      rows.push_back({cfg.experiment, "pcgnn", idx, cfg.n_train, seed,
                      st.name, training::evaluate(shifted, ev.test, ev.baseline),
                      now_s() - t0});

      t0 = now_s();
      auto full_set = training::prepare(
          training::make_dataset(st.test_sc, Split::train, cfg.n_train, seed));
      GnnModel finit = make_power_model("pcgnn", cfg, cfg.k, rng::mix(seed, 0xb));
      GnnModel full = train_power_model(finit, full_set, ev, cfg, "neg_sum_rate", seed);
      rows.push_back({cfg.experiment, "pcgnn_full", idx, cfg.n_train, seed,
                      st.name, training::evaluate(full, ev.test, ev.baseline),
                      now_s() - t0});
    }
  }
  return rows;
}

std::vector<Row> run_cellfree_table(const ExperimentConfig& cfg) {
  std::vector<Row> rows;
  std::vector<std::size_t> ks = cfg.k_sweep.empty() ? std::vector<std::size_t>{6, 10}
                                                    : cfg.k_sweep;
  std::size_t k0 = ks.front();
  for (std::uint64_t seed : cfg.seeds) {
    // Transfer models trained at the smallest size.
    std::map<std::string, GnnModel> at_k0;
    Scenario sc0;
    sc0.kind = "cellfree";
    sc0.m = cfg.m;
    sc0.k = k0;
    sc0.cellfree.tau = k0;
    auto train0 =
        training::prepare(training::make_dataset(sc0, Split::train, cfg.n_train, seed));
    PowerEvalSet ev0;
    ev0.test = training::prepare(training::make_dataset(
        sc0, Split::test, std::min<std::size_t>(cfg.n_test, 200), seed));
    ev0.baseline = maxmin_baseline(ev0.test, cfg.jobs);
    for (const std::string& arch : cfg.archs) {
      if (arch != "hetgnn" && arch != "cfpcgnn") continue;
      GnnModel init = make_power_model(arch, cfg, k0, rng::mix(seed, 0xa));
      at_k0.emplace(arch,
                    train_power_model(init, train0, ev0, cfg, "neg_soft_min_rate", seed));
    }

    for (std::size_t k : ks) {
      Scenario sc;
      sc.kind = "cellfree";
      sc.m = cfg.m;
      sc.k = k;
      sc.cellfree.tau = k;
      PowerEvalSet ev;
      ev.test = training::prepare(training::make_dataset(sc, Split::test, cfg.n_test, seed));
      ev.baseline = maxmin_baseline(ev.test, cfg.jobs);

      for (const std::string& arch : cfg.archs) {
        double t0 = now_s();
        if (arch == "maxpower") {
          auto mp = training::baseline_max_power(ev.test);
          rows.push_back({cfg.experiment, arch, k, 0, seed, "normalized_performance",
                          training::normalized_performance(mp, ev.baseline), now_s() - t0});
          continue;
        }
        if (arch != "hetgnn" && arch != "cfpcgnn") continue;
        auto train_set =
            training::prepare(training::make_dataset(sc, Split::train, cfg.n_train, seed));
        GnnModel init = make_power_model(arch, cfg, k, rng::mix(seed, 0xa));
        GnnModel native =
            train_power_model(init, train_set, ev, cfg, "neg_soft_min_rate", seed);
        rows.push_back({cfg.experiment, arch, k, cfg.n_train, seed,
                        "normalized_performance",
                        training::evaluate(native, ev.test, ev.baseline), now_s() - t0});
        // Size-transfer column: trained at the smallest size, tested here.
        double perf0 = training::evaluate(at_k0.at(arch), ev.test, ev.baseline);
        rows.push_back({cfg.experiment, arch + "_ktrain" + std::to_string(k0), k,
                        cfg.n_train, seed, "normalized_performance", perf0, 0.0});
      }
    }
  }
  return rows;
}

GnnModel train_hybrid_model(const std::string& arch, const ExperimentConfig& cfg,
                            std::size_t nrf, const std::vector<Prepared>& train_set,
                            const std::vector<Prepared>& test_set, std::uint64_t seed) {
  GnnModel init = [&]() {
    if (arch == "unrolled")
      return gnn::make_model(Arch::unrolled, {.layers = 10, .hidden = 1, .nrf = nrf},
                             rng::mix(seed, 0xa));
    if (arch == "mlp")
      return gnn::make_mlp_for_hybrid(cfg.nt, cfg.ns, nrf, {.mlp_hidden = {128, 128}},
                                      rng::mix(seed, 0xa));
    throw std::invalid_argument("unknown hybrid architecture '" + arch + "'");
  }();
  TrainConfig tc;
  tc.lr = cfg.lr;
  tc.batch_size = cfg.batch_size;
  tc.epochs = auto_epochs(cfg, train_set.size());
  tc.loss = "hybrid_residual";
  tc.seed = seed;
  tc.eval_every = std::max<std::size_t>(1, tc.epochs / 8);
  auto eval_fn = [&](const GnnModel& m) {
    double acc = 0;
    for (const Prepared& s : test_set) {
      const auto& inst = std::get<channels::HybridInstance>(s.inst);
      acc -= objectives::hybrid_residual(inst, gnn::hybrid_solution_of(m, s.graph));
    }
    return acc / static_cast<double>(test_set.size());
  };
  return training::train(init, train_set, tc, eval_fn).model;
}

std::vector<Row> run_hybrid_ee(const ExperimentConfig& cfg) {
  std::vector<Row> rows;
  objectives::EnergyModel em;
  std::vector<std::size_t> nrfs =
      cfg.nrf_sweep.empty() ? std::vector<std::size_t>{2, 4, 6, 8} : cfg.nrf_sweep;
  for (std::uint64_t seed : cfg.seeds) {
    for (std::size_t nrf : nrfs) {
      Scenario sc;
      sc.kind = "hybrid";
      sc.nt = cfg.nt;
      sc.nr = cfg.nr;
      sc.ns = cfg.ns;
      sc.nrf = nrf;
      auto train_set =
          training::prepare(training::make_dataset(sc, Split::train, cfg.n_train, seed));
      auto test_set =
          training::prepare(training::make_dataset(sc, Split::test, cfg.n_test, seed));

      for (const std::string& arch : cfg.archs) {
        double t0 = now_s();
        double eta = 0, resid = 0;
        if (arch == "altmin") {
          for (const Prepared& s : test_set) {
            const auto& inst = std::get<channels::HybridInstance>(s.inst);
            auto rep = solvers::hybrid_altmin(inst, {.max_iters = 300, .residual_tol = 1e-9});
            eta += objectives::energy_efficiency(
                objectives::spectral_efficiency(inst, rep.hybrid), nrf, cfg.nt, em);
            resid += rep.trace.back();
          }
        } else {
          GnnModel m = train_hybrid_model(arch, cfg, nrf, train_set, test_set, seed);
          for (const Prepared& s : test_set) {
            const auto& inst = std::get<channels::HybridInstance>(s.inst);
            auto sol = gnn::hybrid_solution_of(m, s.graph);
            eta += objectives::energy_efficiency(
                objectives::spectral_efficiency(inst, sol), nrf, cfg.nt, em);
            resid += objectives::hybrid_residual(inst, sol);
          }
        }
        double n = static_cast<double>(test_set.size());
        double elapsed = now_s() - t0;
        rows.push_back({cfg.experiment, arch, nrf, cfg.n_train, seed, "energy_efficiency",
                        eta / n, elapsed});
        rows.push_back({cfg.experiment, arch, nrf, cfg.n_train, seed, "residual",
                        resid / n, elapsed});
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<Row> run_timing(const ExperimentConfig& cfg) {
  std::vector<Row> rows;
  std::vector<std::size_t> nrfs =
      cfg.nrf_sweep.empty() ? std::vector<std::size_t>{4} : cfg.nrf_sweep;
  for (std::uint64_t seed : cfg.seeds) {
    for (std::size_t nrf : nrfs) {
      Scenario sc;
      sc.kind = "hybrid";
      sc.nt = cfg.nt;
      sc.nr = cfg.nr;
      sc.ns = cfg.ns;
      sc.nrf = nrf;
      auto inst = std::get<channels::HybridInstance>(training::make_instance(sc, seed));
      auto g = graphs::build_hybrid_graph(inst);
      GnnModel m = gnn::make_model(Arch::unrolled, {.layers = 10, .hidden = 1, .nrf = nrf},
                                   rng::mix(seed, 0xa));

      auto median_of = [&](const std::function<double()>& run) {
        run();  // warmup, excluded
        std::vector<double> times;
        for (std::size_t r = 0; r < std::max<std::size_t>(cfg.timing_reps, 30); ++r) {
          double t0 = now_s();
          run();
          times.push_back(now_s() - t0);
        }
        std::sort(times.begin(), times.end());
        return times[times.size() / 2];
      };

      double gnn_resid = 0;
      double gnn_med = median_of([&]() {
        auto sol = gnn::hybrid_solution_of(m, g);
        gnn_resid = objectives::hybrid_residual(inst, sol);
        return 0.0;
      });
      double alt_resid = 0;
      double alt_med = median_of([&]() {
        auto rep = solvers::hybrid_altmin(inst, {.max_iters = 500, .residual_tol = 1e-9});
        alt_resid = rep.trace.back();
        return 0.0;
      });
      rows.push_back({"timing", "unrolled", nrf, 0, seed, "residual", gnn_resid, gnn_med});
      rows.push_back({"timing", "altmin", nrf, 0, seed, "residual", alt_resid, alt_med});
    }
  }
  return rows;
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  if (experiment == "sample_complexity") {
    cfg.archs = {"pcgnn", "mlp"};
    cfg.n_train_sweep = {20, 40, 200, 2000};
    cfg.n_test = 500;
  } else if (experiment == "scalability") {
    cfg.archs = {"pcgnn", "ecgnn", "mlp"};
    cfg.k_sweep = {10, 20, 30};
    cfg.n_test = 200;
  } else if (experiment == "snr_robustness") {
    cfg.n_train = 1000;
    cfg.n_test = 200;
  } else if (experiment == "dist_shift") {
    cfg.n_train = 1000;
    cfg.n_test = 200;
  } else if (experiment == "cellfree_table") {
    cfg.archs = {"maxpower", "hetgnn", "cfpcgnn"};
    cfg.k_sweep = {6, 10};
    cfg.n_test = 500;
  } else if (experiment == "hybrid_ee") {
    cfg.archs = {"unrolled", "altmin"};
    cfg.nrf_sweep = {2, 4, 6, 8};
    cfg.n_train = 800;
    cfg.n_test = 100;
  } else if (experiment == "timing") {
    cfg.nrf_sweep = {4};
  } else {
    std::string tags;
    for (const auto& t : kExperiments) tags += (tags.empty() ? "" : ", ") + t;
    throw std::invalid_argument("unknown experiment '" + experiment +
                                "'; valid tags: " + tags);
  }
  return cfg;
}

void apply_json(ExperimentConfig& cfg, const std::string& json_text) {
  json j = json::parse(json_text);
  if (j.contains("experiment")) {
    std::string tag = j["experiment"].get<std::string>();
    require(tag == cfg.experiment, "config experiment tag '" + tag +
                                       "' does not match the subcommand '" + cfg.experiment + "'");
  }
  cfg.seeds = j.value("seeds", cfg.seeds);
  cfg.out_path = j.value("out", cfg.out_path);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.archs = j.value("archs", cfg.archs);
  cfg.k = j.value("k", cfg.k);
  cfg.k_train = j.value("k_train", cfg.k_train);
  cfg.k_sweep = j.value("k_sweep", cfg.k_sweep);
  cfg.n_train_sweep = j.value("n_train_sweep", cfg.n_train_sweep);
  cfg.n_train = j.value("n_train", cfg.n_train);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.m = j.value("m", cfg.m);
  cfg.nt = j.value("nt", cfg.nt);
  cfg.nr = j.value("nr", cfg.nr);
  cfg.ns = j.value("ns", cfg.ns);
  cfg.nrf_sweep = j.value("nrf_sweep", cfg.nrf_sweep);
  cfg.restarts = j.value("restarts", cfg.restarts);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.timing_reps = j.value("timing_reps", cfg.timing_reps);
  cfg.gnn_native = j.value("gnn_native", cfg.gnn_native);
  require(!cfg.seeds.empty(), "config: seeds must not be empty");
  require(cfg.n_test >= 1, "config: n_test must be positive");
}

std::vector<Row> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "sample_complexity") return run_sample_complexity(cfg);
  if (cfg.experiment == "scalability") return run_scalability(cfg);
  if (cfg.experiment == "snr_robustness") return run_snr_robustness(cfg);
  if (cfg.experiment == "dist_shift") return run_dist_shift(cfg);
  if (cfg.experiment == "cellfree_table") return run_cellfree_table(cfg);
  if (cfg.experiment == "hybrid_ee") return run_hybrid_ee(cfg);
  if (cfg.experiment == "timing") return run_timing(cfg);
  std::string tags;
  for (const auto& t : kExperiments) tags += (tags.empty() ? "" : ", ") + t;
  throw std::invalid_argument("unknown experiment '" + cfg.experiment +
                              "'; valid tags: " + tags);
}

void write_csv(const std::string& path, std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.experiment, a.arch, a.size, a.n_train, a.seed, a.metric) <
           std::tie(b.experiment, b.arch, b.size, b.n_train, b.seed, b.metric);
  });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << "experiment,arch,size,n_train,seed,metric,value,wall_time_s\n";
  char buf[64];
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.experiment << ',' << r.arch << ',' << r.size << ',' << r.n_train << ','
        << r.seed << ',' << r.metric << ',' << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6f", r.wall_time_s);
    out << buf << '\n';
  }
}

}  // namespace wgo::bench

// ---- command line interface --------------------------------------------------

#include "CLI11.hpp"

namespace wgo::bench {

int cli_main(int argc, char** argv) {
  CLI::App app{"Desk-scale experiment runner for graph-based wireless resource allocation"};
  app.require_subcommand(1);

  struct SubState {
    std::string config_path;
    std::string out_path;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 0;
  };
  std::map<std::string, SubState> states;

  for (const std::string& tag : kExperiments) {
    auto* sub = app.add_subcommand(tag, "run the " + tag + " experiment");
    SubState& st = states[tag];
    sub->add_option("--config", st.config_path, "JSON config file overriding the defaults");
    sub->add_option("--seed", st.seeds, "seed(s) for the experiment");
    sub->add_option("--out", st.out_path, "output CSV path");
    sub->add_option("--jobs", st.jobs, "worker count for instance fan-out");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string tag = app.get_subcommands().front()->get_name();
  const SubState& st = states[tag];
  try {
    ExperimentConfig cfg = default_config(tag);
    if (!st.config_path.empty()) {
      std::ifstream in(st.config_path);
      if (!in) throw std::invalid_argument("cannot read config file '" + st.config_path + "'");
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      apply_json(cfg, text);
    }
    if (!st.seeds.empty()) cfg.seeds = st.seeds;
    if (!st.out_path.empty()) cfg.out_path = st.out_path;
    if (st.jobs > 0) cfg.jobs = st.jobs;

    std::vector<Row> rows = run_experiment(cfg);
    write_csv(cfg.out_path, rows);
    std::printf("wrote %zu rows to %s\n", rows.size(), cfg.out_path.c_str());
    return 0;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace wgo::bench
