#include "doctest.h"

#include <cmath>

#include "wgo/rng.hpp"
#include "wgo/training.hpp"

using namespace wgo;
using namespace wgo::training;
using gnn::Arch;
using gnn::GnnModel;
using num::Tensor;

TEST_CASE("dataset: lineage, determinism, split disjointness") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 4;
  Dataset tr = make_dataset(sc, Split::train, 20, 42);
  Dataset te = make_dataset(sc, Split::test, 20, 42);
  CHECK_NOTHROW(assert_no_leakage(tr, te));
  CHECK(tr.samples.size() == 20);

  Dataset tr2 = make_dataset(sc, Split::train, 20, 42);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& a = std::get<channels::D2dInstance>(tr.samples[i]);
    const auto& b = std::get<channels::D2dInstance>(tr2.samples[i]);
    CHECK(a.h.a == b.h.a);
  }

  Dataset fake = te;
  fake.sample_seeds[3] = tr.sample_seeds[7];
  CHECK_THROWS_AS(assert_no_leakage(tr, fake), std::runtime_error);
}

TEST_CASE("unsupervised_loss: definition, duplication invariance, tag checks") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 1;
  auto prep = prepare(make_dataset(sc, Split::train, 1, 7));
  GnnModel m = gnn::make_mlp_for_d2d(1, {.mlp_hidden = {4}}, 3);
  TrainConfig cfg;
  cfg.loss = "neg_sum_rate";

  gnn::BoundParams bp = gnn::bind(m, nullptr);
  double loss = unsupervised_loss(m, bp, {prep.data(), 1}, cfg).item();
  const auto& inst = std::get<channels::D2dInstance>(prep[0].inst);
  double expect = -objectives::weighted_sum_rate(inst, gnn::power_of(m, prep[0].graph));
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));

  // A near-saturated model approaches the full-power rate.
  GnnModel sat = gnn::make_mlp_for_d2d(1, {.mlp_hidden = {4}}, 3);
  for (auto& [name, t] : sat.params)
    if (name == "out.b") t = Tensor(t.shape(), std::vector<double>(t.size(), 50.0));
  gnn::BoundParams bps = gnn::bind(sat, nullptr);
  double sat_loss = unsupervised_loss(sat, bps, {prep.data(), 1}, cfg).item();
  double full = -objectives::weighted_sum_rate(inst, {1.0});
  CHECK(sat_loss == doctest::Approx(full).epsilon(1e-6));

  // Duplicates leave the mean unchanged.
  std::vector<Prepared> dup = {prep[0], prep[0], prep[0]};
  double loss3 = unsupervised_loss(m, bp, {dup.data(), 3}, cfg).item();
  CHECK(loss3 == doctest::Approx(loss).epsilon(1e-12));

  // Tag/family mismatch.
  TrainConfig bad = cfg;
  bad.loss = "neg_soft_min_rate";
  CHECK_THROWS_AS(unsupervised_loss(m, bp, {prep.data(), 1}, bad), std::invalid_argument);
}

TEST_CASE("loss gradient matches finite differences on a K=2 toy") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 2;
  auto prep = prepare(make_dataset(sc, Split::train, 2, 11));
  GnnModel m = gnn::make_model(Arch::pcgnn, {.layers = 1, .hidden = 4}, 13);
  TrainConfig cfg;
  cfg.loss = "neg_sum_rate";

  for (const char* pname : {"embed.edge", "l1.w3", "head.w2"}) {
    const Tensor base = m.params.at(pname);
    double err = num::grad_check(
        [&](num::Tape* tape, const Tensor& x) {
          gnn::BoundParams bp;
          for (const auto& [name, v] : m.params)
            bp.watched.emplace(name, name == pname ? x : (tape ? tape->watch(v) : v));
          return unsupervised_loss(m, bp, {prep.data(), prep.size()}, cfg);
        },
        base, 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("train: zero learning rate leaves parameters unchanged") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 3;
  auto prep = prepare(make_dataset(sc, Split::train, 6, 17));
  GnnModel m = gnn::make_model(Arch::pcgnn, {.layers = 1, .hidden = 4}, 19);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  TrainResult res = train(m, prep, cfg);
  for (const auto& [name, t] : m.params) {
    const Tensor& after = res.model.params.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(after.at(i) == t.at(i));
  }
}

TEST_CASE("train: overfits a single sample") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 3;
  auto prep = prepare(make_dataset(sc, Split::train, 1, 23));
  GnnModel m = gnn::make_model(Arch::pcgnn, {.layers = 1, .hidden = 8}, 29);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 1;
  cfg.lr = 1e-2;
  TrainResult res = train(m, prep, cfg);
  const auto& tl = res.record.train_loss;
  CHECK(tl.size() == cfg.epochs);
  CHECK(tl.back() < tl.front() - 0.05);
  // Close to the best power found by a strong solver on that sample.
  const auto& inst = std::get<channels::D2dInstance>(prep[0].inst);
  double best = solvers::best_of_restarts(inst, 50, 1).trace.back();
  CHECK(-tl.back() >= 0.95 * best);
}

TEST_CASE("train: reproducible given identical config and seeds") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 3;
  auto prep = prepare(make_dataset(sc, Split::train, 8, 31));
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 3;
  cfg.seed = 5;
  auto run = [&]() {
    GnnModel m = gnn::make_model(Arch::ecgnn, {.layers = 1, .hidden = 4}, 37);
    return train(m, prep, cfg);
  };
  TrainResult a = run();
  TrainResult b = run();
  CHECK(a.record.train_loss == b.record.train_loss);
  for (const auto& [name, t] : a.model.params) {
    const Tensor& u = b.model.params.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(u.at(i) == t.at(i));
  }
}

TEST_CASE("train: checkpoint selection keeps the best test metric") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 2;
  auto prep = prepare(make_dataset(sc, Split::train, 4, 41));
  GnnModel m = gnn::make_model(Arch::pcgnn, {.layers = 1, .hidden = 4}, 43);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 2;
  // A metric that prefers the earliest model: epoch 0 wins.
  int calls = 0;
  auto eval_fn = [&](const GnnModel&) { return -static_cast<double>(calls++); };
  TrainResult res = train(m, prep, cfg, eval_fn);
  CHECK(res.record.test_metric.front() == 0.0);
  CHECK(res.record.test_metric.back() == doctest::Approx(-(double)(calls - 1)));
}

TEST_CASE("evaluate and normalized performance") {
  Scenario sc;
  sc.kind = "gaussian_ic";
  sc.k = 3;
  auto prep = prepare(make_dataset(sc, Split::test, 10, 47));
  GnnModel m = gnn::make_model(Arch::pcgnn, {.layers = 1, .hidden = 4}, 53);

  // Model scored against its own objectives gives exactly 1.
  auto own = model_objectives(m, prep);
  CHECK(evaluate(m, prep, own) == doctest::Approx(1.0));

  // All-zero objectives as the model side gives 0.
  std::vector<double> zeros(own.size(), 0.0);
  CHECK(normalized_performance(zeros, own) == doctest::Approx(0.0));
  CHECK_THROWS_AS(normalized_performance(own, zeros), std::invalid_argument);

  auto base = baseline_best_restarts(prep, 4, 3);
  double perf = evaluate(m, prep, base);
  CHECK(perf > 0.0);
  CHECK(perf <= 1.0 + 1e-9);  // restarts dominate an untrained model
}

TEST_CASE("train config json round trip") {
  TrainConfig cfg;
  cfg.lr = 5e-4;
  cfg.epochs = 7;
  cfg.loss = "neg_soft_min_rate";
  TrainConfig back = train_config_from_json(to_json(cfg));
  CHECK(back.lr == cfg.lr);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.loss == cfg.loss);
}
