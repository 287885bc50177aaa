#include "wgo/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "wgo/rng.hpp"

namespace wgo::training {

using gnn::GnnModel;
using nlohmann::json;
using num::Shape;
using num::Tensor;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Family family_of(const Scenario& s) {
  if (s.kind == "gaussian_ic" || s.kind == "d2d_geometric") return Family::d2d;
  if (s.kind == "cellfree") return Family::cellfree;
  if (s.kind == "hybrid") return Family::hybrid;
  throw std::invalid_argument("unknown scenario kind '" + s.kind + "'");
}

channels::ProblemInstance make_instance(const Scenario& s, std::uint64_t seed) {
  if (s.kind == "gaussian_ic") return channels::sample_gaussian_ic(s.k, seed, s.gauss);
  if (s.kind == "d2d_geometric") {
    channels::D2dGeomConfig cfg = s.geom;
    // Per-sample draws derive from the sample seed, not a shared stream.
    if (s.geom_random_power) {
      rng::Rng r(rng::mix(seed, 0x707f));
      cfg.tx_power_dbm = r.uniform(s.geom_power_lo_dbm, s.geom_power_hi_dbm);
    }
    if (s.geom_random_heights) {
      rng::Rng r(rng::mix(seed, 0x4e67));
      cfg.tx_height_m = r.uniform(s.tx_height_lo_m, s.tx_height_hi_m);
      cfg.rx_height_m = r.uniform(s.rx_height_lo_m, s.rx_height_hi_m);
    }
    return channels::sample_d2d_geometric(cfg, s.k, seed);
  }
  if (s.kind == "cellfree") return channels::sample_cellfree(s.cellfree, s.m, s.k, seed);
  if (s.kind == "hybrid")
    return channels::sample_mmwave(s.mmwave, s.nt, s.nr, s.ns, s.nrf, seed);
  throw std::invalid_argument("unknown scenario kind '" + s.kind + "'");
}

Dataset make_dataset(const Scenario& s, Split split, std::size_t n,
                     std::uint64_t master_seed) {
  Dataset ds;
  ds.split = split;
  ds.family = family_of(s);
  ds.master_seed = master_seed;
  // Disjoint child index ranges keep train and test lineages disjoint.
  std::uint64_t base = split == Split::train ? 0 : (1ULL << 32);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t child = rng::mix(master_seed, base + i);
    ds.sample_seeds.push_back(child);
    ds.samples.push_back(make_instance(s, child));
  }
  return ds;
}

void assert_no_leakage(const Dataset& train, const Dataset& test) {
  for (std::uint64_t a : train.sample_seeds)
    for (std::uint64_t b : test.sample_seeds)
      if (a == b)
        throw std::runtime_error("dataset leakage: shared sample seed " + std::to_string(a));
}

std::vector<Prepared> prepare(const Dataset& ds) {
  std::vector<Prepared> out;
  out.reserve(ds.samples.size());
  for (const auto& inst : ds.samples) {
    Prepared p;
    p.inst = inst;
    if (const auto* d = std::get_if<channels::D2dInstance>(&inst)) {
      p.graph = graphs::build_d2d_graph(*d);
    } else if (const auto* c = std::get_if<channels::CellFreeInstance>(&inst)) {
      p.graph = graphs::build_cellfree_graph(*c);
      p.coeffs = objectives::cellfree_coeffs(*c, channels::compute_v_coeffs(*c));
    } else {
      p.graph = graphs::build_hybrid_graph(std::get<channels::HybridInstance>(inst));
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---- losses --------------------------------------------------------------------

namespace {

Tensor sample_loss(const GnnModel& model, const gnn::BoundParams& bp, const Prepared& s,
                   const TrainConfig& cfg) {
  if (cfg.loss == "neg_sum_rate") {
    const auto* inst = std::get_if<channels::D2dInstance>(&s.inst);
    require(inst != nullptr, "neg_sum_rate: needs D2D instances");
    Tensor p = gnn::power_forward_bound(model, bp, s.graph);
    return num::neg(objectives::weighted_sum_rate_t(*inst, p));
  }
  if (cfg.loss == "neg_soft_min_rate") {
    require(std::holds_alternative<channels::CellFreeInstance>(s.inst),
            "neg_soft_min_rate: needs cell-free instances");
    Tensor p = gnn::power_forward_bound(model, bp, s.graph);
    return num::neg(objectives::soft_min_rate_t(s.coeffs, p, cfg.softmin_beta));
  }
  if (cfg.loss == "hybrid_residual") {
    const auto* inst = std::get_if<channels::HybridInstance>(&s.inst);
    require(inst != nullptr, "hybrid_residual: needs hybrid instances");
    gnn::HybridForward f = gnn::hybrid_forward_bound(model, bp, s.graph);
    return objectives::hybrid_residual_t(*inst, f.xrf, f.xbb);
  }
  throw std::invalid_argument("unknown loss tag '" + cfg.loss + "'");
}

}  // namespace

num::Tensor unsupervised_loss(const GnnModel& model, const gnn::BoundParams& bp,
                              std::span<const Prepared> batch, const TrainConfig& cfg) {
  require(!batch.empty(), "unsupervised_loss: empty batch");
  Tensor acc = Tensor::scalar(0.0);
  for (const Prepared& s : batch) acc = num::add(acc, sample_loss(model, bp, s, cfg));
  return num::scale(acc, 1.0 / static_cast<double>(batch.size()));
}

// ---- optimizer -----------------------------------------------------------------

namespace {

struct AdamState {
  std::map<std::string, std::vector<double>> m, v;
  std::size_t t = 0;
};

void apply_update(GnnModel& model, const std::map<std::string, Tensor>& grads,
                  const TrainConfig& cfg, AdamState& st) {
  if (cfg.optimizer == "sgd") {
    for (auto& [name, p] : model.params) {
      const Tensor& g = grads.at(name);
      std::vector<double> d(p.data().begin(), p.data().end());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= cfg.lr * g.at(i);
      p = Tensor(p.shape(), std::move(d));
    }
    return;
  }
  require(cfg.optimizer == "adam", "unknown optimizer '" + cfg.optimizer + "'");
  st.t++;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (auto& [name, p] : model.params) {
    const Tensor& g = grads.at(name);
    auto& m = st.m[name];
    auto& v = st.v[name];
    if (m.empty()) m.assign(p.size(), 0.0);
    if (v.empty()) v.assign(p.size(), 0.0);
    std::vector<double> d(p.data().begin(), p.data().end());
    for (std::size_t i = 0; i < d.size(); ++i) {
      double gi = g.at(i);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      d[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p = Tensor(p.shape(), std::move(d));
  }
}

}  // namespace

TrainResult train(const GnnModel& model, const std::vector<Prepared>& train_set,
                  const TrainConfig& cfg,
                  const std::function<double(const GnnModel&)>& eval_fn) {
  require(cfg.lr >= 0, "train: learning rate must be nonnegative");
  require(cfg.batch_size >= 1, "train: batch size must be >= 1");
  require(cfg.epochs >= 1, "train: need at least one epoch");
  require(!train_set.empty(), "train: empty training set");

  TrainResult res;
  res.model = model;
  AdamState adam;

  GnnModel best = model;
  double best_metric = -1e300;
  double last_metric = 0.0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double t0 = now_s();
    rng::Rng shuffler(rng::mix(cfg.seed, epoch));
    for (std::size_t i = order.size(); i-- > 1;)
      std::swap(order[i], order[shuffler.uniform_index(i + 1)]);

    double loss_sum = 0.0;
    std::size_t n = train_set.size();
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::size_t stop = std::min(n, start + cfg.batch_size);
      std::map<std::string, std::vector<double>> acc;
      for (std::size_t bi = start; bi < stop; ++bi) {
        const Prepared& s = train_set[order[bi]];
        // One tape per sample; gradients are summed across the batch.
        num::Tape tape;
        gnn::BoundParams bp = gnn::bind(res.model, &tape);
        Tensor loss = sample_loss(res.model, bp, s, cfg);
        double lv = loss.item();
        if (!std::isfinite(lv))
          throw std::runtime_error("train: loss is not finite at epoch " +
                                   std::to_string(epoch) + " (diverged)");
        loss_sum += lv;
        auto grads = gnn::param_grads(res.model, tape, bp.watched, loss);
        for (const auto& [name, g] : grads) {
          auto& a = acc[name];
          if (a.empty()) a.assign(g.size(), 0.0);
          for (std::size_t i = 0; i < g.size(); ++i) a[i] += g.at(i);
        }
      }
      double inv = 1.0 / static_cast<double>(stop - start);
      std::map<std::string, Tensor> mean_grads;
      for (auto& [name, a] : acc) {
        for (double& x : a) x *= inv;
        mean_grads.emplace(name, Tensor(res.model.params.at(name).shape(), std::move(a)));
      }
      apply_update(res.model, mean_grads, cfg, adam);
    }

    res.record.train_loss.push_back(loss_sum / static_cast<double>(n));
    if (eval_fn && (epoch % cfg.eval_every == 0 || epoch + 1 == cfg.epochs)) {
      last_metric = eval_fn(res.model);
      if (last_metric > best_metric) {
        best_metric = last_metric;
        best = res.model;
      }
    }
    res.record.test_metric.push_back(last_metric);
    res.record.wall_time_s.push_back(now_s() - t0);
  }

  if (eval_fn) res.model = best;
  return res;
}

// ---- evaluation ------------------------------------------------------------------

double normalized_performance(const std::vector<double>& model_objectives,
                              const std::vector<double>& baseline_objectives) {
  require(!model_objectives.empty() && model_objectives.size() == baseline_objectives.size(),
          "normalized_performance: size mismatch");
  double ms = 0, bs = 0;
  for (double v : model_objectives) ms += v;
  for (double v : baseline_objectives) bs += v;
  require(bs != 0.0, "normalized_performance: baseline objective sums to zero");
  return ms / bs;
}

std::vector<double> model_objectives(const GnnModel& model,
                                     const std::vector<Prepared>& test_set) {
  std::vector<double> out;
  out.reserve(test_set.size());
  for (const Prepared& s : test_set) {
    std::vector<double> p = gnn::power_of(model, s.graph);
    if (const auto* d = std::get_if<channels::D2dInstance>(&s.inst)) {
      out.push_back(objectives::weighted_sum_rate(*d, p));
    } else if (std::holds_alternative<channels::CellFreeInstance>(s.inst)) {
      out.push_back(objectives::min_rate(s.coeffs, p));
    } else {
      throw std::invalid_argument("model_objectives: hybrid models are scored by residual");
    }
  }
  return out;
}

double evaluate(const GnnModel& model, const std::vector<Prepared>& test_set,
                const std::vector<double>& baseline_objectives) {
  require(!test_set.empty(), "evaluate: empty test set");
  return normalized_performance(model_objectives(model, test_set), baseline_objectives);
}

std::vector<double> baseline_best_restarts(const std::vector<Prepared>& set,
                                           std::size_t n_init, std::uint64_t seed,
                                           const solvers::WmmseOptions& opt) {
  std::vector<double> out;
  out.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& inst = std::get<channels::D2dInstance>(set[i].inst);
    out.push_back(
        solvers::best_of_restarts(inst, n_init, rng::mix(seed, i), opt).trace.back());
  }
  return out;
}

std::vector<double> baseline_maxmin(const std::vector<Prepared>& set, double tol) {
  std::vector<double> out;
  out.reserve(set.size());
  for (const Prepared& s : set) {
    const auto& inst = std::get<channels::CellFreeInstance>(s.inst);
    auto rep = solvers::maxmin_bisection(inst, tol);
    out.push_back(objectives::min_rate(s.coeffs, rep.p));
  }
  return out;
}

std::vector<double> baseline_max_power(const std::vector<Prepared>& set) {
  std::vector<double> out;
  out.reserve(set.size());
  for (const Prepared& s : set) {
    if (const auto* d = std::get_if<channels::D2dInstance>(&s.inst)) {
      out.push_back(objectives::weighted_sum_rate(*d, std::vector<double>(d->k, 1.0)));
    } else {
      const auto& c = std::get<channels::CellFreeInstance>(s.inst);
      out.push_back(objectives::min_rate(s.coeffs, std::vector<double>(c.k, 1.0)));
    }
  }
  return out;
}

// ---- serialization ----------------------------------------------------------------

std::string to_json(const TrainConfig& cfg) {
  json j{{"optimizer", cfg.optimizer},
         {"lr", cfg.lr},
         {"beta1", cfg.beta1},
         {"beta2", cfg.beta2},
         {"eps", cfg.eps},
         {"batch_size", cfg.batch_size},
         {"epochs", cfg.epochs},
         {"loss", cfg.loss},
         {"softmin_beta", cfg.softmin_beta},
         {"seed", cfg.seed},
         {"eval_every", cfg.eval_every}};
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  json j = json::parse(text);
  TrainConfig c;
  c.optimizer = j.value("optimizer", c.optimizer);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.loss = j.value("loss", c.loss);
  c.softmin_beta = j.value("softmin_beta", c.softmin_beta);
  c.seed = j.value("seed", c.seed);
  c.eval_every = j.value("eval_every", c.eval_every);
  require(c.lr >= 0 && c.batch_size >= 1, "train config: invalid values");
  return c;
}

std::string to_json(const TrainRecord& rec) {
  json j{{"train_loss", rec.train_loss},
         {"test_metric", rec.test_metric},
         {"wall_time_s", rec.wall_time_s}};
  return j.dump();
}

}  // namespace wgo::training
