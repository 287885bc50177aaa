// Acceptance suite: one check per criterion, each printing a single
// [PASS]/[FAIL] line. Invoke with a criterion number 1..10, or no argument
// to run everything. Exit code 0 iff every executed criterion passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "wgo/bench.hpp"
#include "wgo/dmp.hpp"
#include "wgo/gnn.hpp"
#include "wgo/objectives.hpp"
#include "wgo/rng.hpp"
#include "wgo/solvers.hpp"
#include "wgo/training.hpp"

using namespace wgo;
using gnn::Arch;
using gnn::GnnModel;
using num::CMat;
using num::Tensor;
using training::Prepared;
using training::Scenario;
using training::Split;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: WMMSE-as-DMP and Riemannian-as-DMP match their direct
// implementations to 1e-12 over 50 random instances each.
Check criterion1() {
  Check c;
  double worst_wmmse = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::size_t k = 2 + s % 7;
    auto inst = channels::sample_gaussian_ic(k, rng::mix(101, s));
    auto g = graphs::build_d2d_graph(inst);
    rng::Rng rr(rng::mix(102, s));
    std::vector<double> p0(k);
    for (auto& v : p0) v = rr.uniform();
    std::size_t iters = 50;
    auto direct = solvers::wmmse(inst, p0, {.max_iters = iters, .rate_tol = 0});
    auto states = dmp::run_dmp(dmp::wmmse_dmp_spec(iters, p0), g);
    for (std::size_t i = 0; i < k; ++i)
      worst_wmmse = std::max(worst_wmmse,
                             std::abs(states[i][0] * states[i][0] - direct.p[i]));
  }
  if (worst_wmmse > 1e-12) c.fail("wmmse max deviation " + fmt(worst_wmmse));
  c.note("wmmse dev " + std::to_string(worst_wmmse));

  double worst_riem = 0;
  channels::MmWaveConfig mcfg;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto inst = channels::sample_mmwave(mcfg, 12, 6, 2, 4, rng::mix(103, s));
    auto g = graphs::build_hybrid_graph(inst);
    rng::Rng rr(rng::mix(104, s));
    CMat xbb(2, 4);
    for (auto& z : xbb.a) z = rr.cnormal();
    double want = 4.0 * 2.0 / 12.0;
    double scl = std::sqrt(want / num::frob2(xbb));
    for (auto& z : xbb.a) z *= scl;
    CMat xrf0(12, 1);
    for (auto& z : xrf0.a) {
      double th = rr.uniform(0, 2 * M_PI);
      z = {std::cos(th), std::sin(th)};
    }
    auto rule = s % 2 == 0 ? dmp::StepRule::armijo() : dmp::StepRule::fixed_step(0.05);
    std::size_t rounds = 20;
    auto direct = dmp::riemannian_direct(inst, xbb, xrf0, rounds, rule);
    auto states = dmp::run_dmp(dmp::riemannian_dmp_spec(rounds, inst, xbb, xrf0, rule), g);
    CMat got = dmp::antenna_states_to_xrf(states, 12, 4, inst);
    for (std::size_t i = 0; i < 12; ++i)
      worst_riem = std::max(worst_riem, std::abs(got(i, 0) - direct.back()(i, 0)));
  }
  if (worst_riem > 1e-12) c.fail("riemannian max deviation " + fmt(worst_riem));
  c.note("riemannian dev " + std::to_string(worst_riem));
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 2: finite-difference gradient checks, rel err < 1e-4 at step
// 1e-5, for every op kind and every architecture's loss, 20 random points.

double sampled_grad_err(const std::function<Tensor(num::Tape*, const gnn::BoundParams&)>& f,
                        const GnnModel& model, const std::string& pname,
                        std::size_t n_coords, std::uint64_t seed) {
  const Tensor& base = model.params.at(pname);
  // Analytic gradient.
  num::Tape tape;
  gnn::BoundParams bp = gnn::bind(model, &tape);
  Tensor loss = f(&tape, bp);
  auto grads = gnn::param_grads(model, tape, bp.watched, loss);
  const Tensor& g = grads.at(pname);

  rng::Rng rr(seed);
  double worst = 0;
  double step = 1e-5;
  for (std::size_t c = 0; c < std::min(n_coords, base.size()); ++c) {
    std::size_t idx = rr.uniform_index(base.size());
    auto probe = [&](double delta) {
      std::vector<double> d(base.data().begin(), base.data().end());
      d[idx] += delta;
      GnnModel m2 = model;
      m2.params.at(pname) = Tensor(base.shape(), std::move(d));
      gnn::BoundParams pb = gnn::bind(m2, nullptr);
      return f(nullptr, pb).item();
    };
    double cd = (probe(step) - probe(-step)) / (2 * step);
    double an = g.at(idx);
    worst = std::max(worst, std::abs(an - cd) / (std::abs(an) + std::abs(cd) + 1e-12));
  }
  return worst;
}

Check criterion2() {
  Check c;
  // Every op kind at 20 random points.
  double worst_op = 0;
  for (std::uint64_t pt = 0; pt < 20; ++pt) {
    rng::Rng rr(rng::mix(201, pt));
    std::vector<double> xe(12), ye(12);
    for (auto& v : xe) v = rr.uniform(0.2, 1.4);  // positive, away from kinks
    for (auto& v : ye) v = rr.uniform(0.2, 1.4);
    Tensor x({3, 4}, xe);
    Tensor y({3, 4}, ye);
    Tensor mm({4, 2}, std::vector<double>(8, 0.3));
    using num::Tape;
    std::vector<std::function<Tensor(Tape*, const Tensor&)>> ops = {
        [&](Tape*, const Tensor& t) { return num::sum(num::add(t, y)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::sub(y, t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::mul(t, y)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::matmul(t, mm)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::broadcast_to(t, {2, 3, 4})); },
        [&](Tape*, const Tensor& t) { return num::sum(num::concat({t, y}, 1)); },
        [&](Tape*, const Tensor& t) { return num::sum(t); },
        [&](Tape*, const Tensor& t) { return num::sum(num::sum(t, 1)); },
        [&](Tape*, const Tensor& t) { return num::mean(t); },
        [&](Tape*, const Tensor& t) { return num::sum(num::mean(t, 0)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::max(t, 1)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::relu(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::sigmoid(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::exp(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::log(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::square(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::sqrt(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::reciprocal(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::transpose(t)); },
        [&](Tape*, const Tensor& t) { return num::sum(num::slice(t, {1, 1}, {2, 3})); },
        [&](Tape*, const Tensor& t) { return num::sum(num::reshape(t, {4, 3})); },
    };
    for (auto& op : ops) worst_op = std::max(worst_op, num::grad_check(op, x, 1e-5));
  }
  if (worst_op >= 1e-4) c.fail("op gradients rel err " + fmt(worst_op));
  c.note("ops " + std::to_string(worst_op));

  // Every architecture's loss gradient at 20 random points (sampled coords
  // of a rotating parameter).
  double worst_arch = 0;
  auto update_worst = [&](double e) { worst_arch = std::max(worst_arch, e); };
  for (std::uint64_t pt = 0; pt < 20; ++pt) {
    std::uint64_t ms = rng::mix(202, pt);
    // D2D power archs + the d2d mlp.
    auto d2d = channels::sample_gaussian_ic(3, rng::mix(203, pt));
    auto dg = graphs::build_d2d_graph(d2d);
    std::vector<GnnModel> dmodels = {
        gnn::make_model(Arch::ecgnn, {.layers = 2, .hidden = 4}, ms),
        gnn::make_model(Arch::pcgnn, {.layers = 2, .hidden = 4}, ms),
        gnn::make_mlp_for_d2d(3, {.mlp_hidden = {8}}, ms)};
    for (const GnnModel& m : dmodels) {
      auto loss_fn = [&](num::Tape*, const gnn::BoundParams& bp) {
        Tensor p = gnn::power_forward_bound(m, bp, dg);
        return num::neg(objectives::weighted_sum_rate_t(d2d, p));
      };
      std::size_t pi = pt % m.params.size();
      auto it = m.params.begin();
      std::advance(it, pi);
      update_worst(sampled_grad_err(loss_fn, m, it->first, 4, rng::mix(204, pt)));
    }
    // Cell-free archs with the soft-min loss.
    channels::CellFreeConfig ccfg;
    ccfg.tau = 3;
    auto cf = channels::sample_cellfree(ccfg, 4, 3, rng::mix(205, pt));
    auto cg = graphs::build_cellfree_graph(cf);
    auto co = objectives::cellfree_coeffs(cf, channels::compute_v_coeffs(cf));
    for (Arch arch : {Arch::hetgnn, Arch::cfpcgnn}) {
      GnnModel m = gnn::make_model(arch, {.layers = 2, .hidden = 4}, ms);
      auto loss_fn = [&](num::Tape*, const gnn::BoundParams& bp) {
        Tensor p = gnn::power_forward_bound(m, bp, cg);
        return num::neg(objectives::soft_min_rate_t(co, p, 20.0));
      };
      std::size_t pi = pt % m.params.size();
      auto it = m.params.begin();
      std::advance(it, pi);
      update_worst(sampled_grad_err(loss_fn, m, it->first, 4, rng::mix(206, pt)));
    }
    // Hybrid archs with the residual loss.
    channels::MmWaveConfig mcfg;
    auto hy = channels::sample_mmwave(mcfg, 8, 4, 2, 4, rng::mix(207, pt));
    auto hg = graphs::build_hybrid_graph(hy);
    std::vector<GnnModel> hmodels = {
        gnn::make_model(Arch::unrolled, {.layers = 2, .hidden = 1, .nrf = 4}, ms),
        gnn::make_mlp_for_hybrid(8, 2, 4, {.mlp_hidden = {8}}, ms)};
    for (const GnnModel& m : hmodels) {
      auto loss_fn = [&](num::Tape*, const gnn::BoundParams& bp) {
        gnn::HybridForward f = gnn::hybrid_forward_bound(m, bp, hg);
        return objectives::hybrid_residual_t(hy, f.xrf, f.xbb);
      };
      std::size_t pi = pt % m.params.size();
      auto it = m.params.begin();
      std::advance(it, pi);
      update_worst(sampled_grad_err(loss_fn, m, it->first, 4, rng::mix(208, pt)));
    }
    // Reference GNN: gradient of a scalar functional of the node states.
    GnnModel rm = gnn::make_model(Arch::refgnn, {.layers = 2, .hidden = 4}, ms);
    auto ref_loss = [&](num::Tape*, const gnn::BoundParams& bp) {
      return num::sum(gnn::refgnn_forward_bound(rm, bp, dg));
    };
    std::size_t rpi = pt % rm.params.size();
    auto rit = rm.params.begin();
    std::advance(rit, rpi);
    update_worst(sampled_grad_err(ref_loss, rm, rit->first, 4, rng::mix(209, pt)));
  }
  if (worst_arch >= 1e-4) c.fail("architecture loss gradients rel err " + fmt(worst_arch));
  c.note("archs " + std::to_string(worst_arch));
  return c;
}

}  // namespace

// Remaining criteria are defined in acceptance_partb.inc to keep this file
// readable.
#include "acceptance_partb.inc"

int main(int argc, char** argv) {
  int which = argc > 1 ? std::atoi(argv[1]) : 0;
  struct Entry {
    int id;
    const char* title;
    std::function<Check()> fn;
  };
  std::vector<Entry> entries = {
      {1, "message-passing forms match direct solvers to 1e-12", criterion1},
      {2, "autodiff passes finite-difference checks (rel err < 1e-4)", criterion2},
      {3, "best-of-10 WMMSE within 1% of exhaustive grid search (K=2)", criterion3},
      {4, "max-min bisection reaches the grid optimum within 1e-3", criterion4},
      {5, "sample complexity ordering at K=10 (40-sample GNN vs 2000-sample MLP)", criterion5},
      {6, "scalability ordering from K=10 to K=30", criterion6},
      {7, "cell-free table at M=30 (max power window, GNN floor, size transfer)", criterion7},
      {8, "hybrid precoding quality, energy-efficiency trend, and speedup", criterion8},
      {9, "structural invariants: equivariance, feasibility, zero-off-edge", criterion9},
      {10, "robustness to SNR shift and the LoS-to-NLoS shift", criterion10},
  };
  bool all_ok = true;
  for (const Entry& e : entries) {
    if (which != 0 && which != e.id) continue;
    Check c = e.fn();
    std::printf("[%s] criterion %d: %s (%s)\n", c.ok ? "PASS" : "FAIL", e.id, e.title,
                c.detail.c_str());
    std::fflush(stdout);
    all_ok = all_ok && c.ok;
  }
  return all_ok ? 0 : 1;
}
