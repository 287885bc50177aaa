#include "doctest.h"

#include <cmath>

#include "wgo/dmp.hpp"
#include "wgo/objectives.hpp"
#include "wgo/rng.hpp"

using namespace wgo;
using namespace wgo::dmp;
using channels::D2dInstance;
using num::CMat;
using num::cxd;

TEST_CASE("run_dmp: identity dynamics keeps the initial states") {
  auto inst = channels::sample_gaussian_ic(4, 1);
  auto g = graphs::build_d2d_graph(inst);
  DmpSpec spec;
  spec.n_rounds = 3;
  spec.init = [](std::size_t node, const graphs::CommGraph&) -> State {
    return {static_cast<double>(node), 1.0};
  };
  spec.encode = [](int, const State&, const State&, std::span<const double>) -> Message {
    return {0.0};
  };
  spec.aggregate = [](int, std::vector<Message>&&) -> Message { return {0.0}; };
  spec.update = [](int, std::size_t, std::span<const double>, const State& xi,
                   const Message&) -> State { return xi; };
  auto states = run_dmp(spec, g);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(states[i][0] == static_cast<double>(i));
    CHECK(states[i][1] == 1.0);
  }
}

TEST_CASE("run_dmp: sum aggregation counts neighbors on a complete graph") {
  auto inst = channels::sample_gaussian_ic(6, 2);
  auto g = graphs::build_d2d_graph(inst);
  DmpSpec spec;
  spec.n_rounds = 1;
  spec.init = [](std::size_t, const graphs::CommGraph&) -> State { return {0.0}; };
  spec.encode = [](int, const State&, const State&, std::span<const double>) -> Message {
    return {1.0};
  };
  spec.aggregate = [](int, std::vector<Message>&& msgs) -> Message {
    double s = 0;
    for (auto& m : msgs) s += m[0];
    return {s};
  };
  spec.update = [](int, std::size_t, std::span<const double>, const State&,
                   const Message& agg) -> State { return {agg[0]}; };
  auto states = run_dmp(spec, g);
  for (std::size_t i = 0; i < 6; ++i) CHECK(states[i][0] == 5.0);
}

TEST_CASE("run_dmp: dimension mismatch errors name round and node") {
  auto inst = channels::sample_gaussian_ic(3, 3);
  auto g = graphs::build_d2d_graph(inst);
  DmpSpec spec;
  spec.n_rounds = 2;
  spec.init = [](std::size_t, const graphs::CommGraph&) -> State { return {0.0}; };
  spec.encode = [](int, const State&, const State&, std::span<const double>) -> Message {
    return {1.0};
  };
  spec.aggregate = [](int, std::vector<Message>&& m) -> Message { return m[0]; };
  spec.update = [](int t, std::size_t node, std::span<const double>, const State& xi,
                   const Message&) -> State {
    if (t == 2 && node == 1) return {1.0, 2.0};  // grows only at node 1
    return xi;
  };
  CHECK_THROWS_WITH_AS(run_dmp(spec, g), doctest::Contains("round 2"), std::runtime_error);
}

TEST_CASE("wmmse dmp: single user converges to full power") {
  D2dInstance inst;
  inst.k = 1;
  inst.h = CMat(1, 1);
  inst.h(0, 0) = 1.0;
  inst.w = {1.0};
  inst.sigma2 = {1.0};
  auto g = graphs::build_d2d_graph(inst);
  auto spec = wmmse_dmp_spec(60, {0.2});
  auto states = run_dmp(spec, g);
  CHECK(states[0][0] * states[0][0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("wmmse dmp: equals the direct solver iterate-for-iterate") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::size_t k = 4;
    auto inst = channels::sample_gaussian_ic(k, rng::mix(100, seed));
    auto g = graphs::build_d2d_graph(inst);
    rng::Rng rr(rng::mix(101, seed));
    std::vector<double> p0(k);
    for (auto& v : p0) v = rr.uniform();

    std::size_t iters = 50;
    auto direct = solvers::wmmse_v_iterates(inst, p0, iters);
    auto spec = wmmse_dmp_spec(iters, p0);
    RunOptions opts;
    std::size_t checked = 0;
    opts.on_round = [&](std::size_t round, const std::vector<State>& st) {
      if (round % 2 != 1) return;  // v updates happen on odd rounds
      std::size_t it = (round + 1) / 2;
      for (std::size_t i = 0; i < k; ++i)
        CHECK(std::abs(st[i][0] - direct[it][i]) <= 1e-12);
      ++checked;
    };
    auto states = run_dmp(spec, g, opts);
    CHECK(checked == iters);

    auto rep = solvers::wmmse(inst, p0, {.max_iters = iters, .rate_tol = 0});
    for (std::size_t i = 0; i < k; ++i)
      CHECK(std::abs(states[i][0] * states[i][0] - rep.p[i]) <= 1e-12);
  }
}

TEST_CASE("wmmse dmp: hidden state layout is [v, u, alpha]") {
  auto inst = channels::sample_gaussian_ic(4, 11);  // unit weights
  auto g = graphs::build_d2d_graph(inst);
  std::vector<double> p0(4, 1.0);
  auto states = run_dmp(wmmse_dmp_spec(8, p0), g);
  // u and alpha must satisfy their defining equations at the final v.
  std::vector<double> v(4);
  for (std::size_t i = 0; i < 4; ++i) v[i] = states[i][0];
  for (std::size_t i = 0; i < 4; ++i) {
    double gain = std::norm(inst.h(i, i));
    double den = inst.sigma2[i];
    for (std::size_t j = 0; j < 4; ++j) den += std::norm(inst.h(j, i)) * v[j] * v[j];
    double u = std::sqrt(gain) * v[i] / den;
    CHECK(states[i][1] == doctest::Approx(u).epsilon(1e-12));
    CHECK(states[i][2] == doctest::Approx(1.0 / (1.0 - u * std::sqrt(gain) * v[i])).epsilon(1e-12));
  }
}

TEST_CASE("wmmse dmp: rejects non-D2D graphs") {
  channels::CellFreeConfig cfg;
  cfg.tau = 2;
  auto cf = channels::sample_cellfree(cfg, 3, 2, 1);
  auto g = graphs::build_cellfree_graph(cf);
  CHECK_THROWS_AS(run_dmp(wmmse_dmp_spec(3, {1, 1, 1, 1, 1}), g), std::invalid_argument);
}

TEST_CASE("run_dmp: shuffled message order leaves outputs unchanged") {
  auto inst = channels::sample_gaussian_ic(7, 21);
  auto g = graphs::build_d2d_graph(inst);
  std::vector<double> p0(7, 1.0);
  auto plain = run_dmp(wmmse_dmp_spec(20, p0), g);
  for (std::uint64_t s : {1ull, 2ull, 3ull}) {
    RunOptions opts;
    opts.shuffle = true;
    opts.shuffle_seed = s;
    auto shuffled = run_dmp(wmmse_dmp_spec(20, p0), g, opts);
    for (std::size_t i = 0; i < 7; ++i) CHECK(shuffled[i] == plain[i]);
  }
}

TEST_CASE("run_dmp: permutation equivariance") {
  auto inst = channels::sample_gaussian_ic(6, 33);
  auto g = graphs::build_d2d_graph(inst);
  std::vector<std::size_t> perm = {2, 0, 5, 1, 4, 3};
  auto pg = graphs::permute_graph(g, perm);
  std::vector<double> p0(6, 1.0);  // symmetric initialization
  auto base = run_dmp(wmmse_dmp_spec(15, p0), g);
  auto permuted = run_dmp(wmmse_dmp_spec(15, p0), pg);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(permuted[perm[i]][c] - base[i][c]) <= 1e-12);
}

// ---- Riemannian iteration -----------------------------------------------------

namespace {

CMat random_xbb(const channels::HybridInstance& inst, std::uint64_t seed) {
  rng::Rng r(seed);
  CMat xbb(inst.ns, inst.nrf);
  for (auto& z : xbb.a) z = r.cnormal();
  double want = static_cast<double>(inst.nrf * inst.ns) / static_cast<double>(inst.nt);
  double scl = std::sqrt(want / num::frob2(xbb));
  for (auto& z : xbb.a) z *= scl;
  return xbb;
}

CMat random_phases(std::size_t n, std::uint64_t seed) {
  rng::Rng r(seed);
  CMat x(n, 1);
  for (auto& z : x.a) {
    double th = r.uniform(0, 2 * M_PI);
    z = {std::cos(th), std::sin(th)};
  }
  return x;
}

}  // namespace

TEST_CASE("riemannian dmp: states stay unit modulus every round") {
  channels::MmWaveConfig cfg;
  auto inst = channels::sample_mmwave(cfg, 8, 4, 2, 4, 7);
  auto g = graphs::build_hybrid_graph(inst);
  CMat xbb = random_xbb(inst, 3);
  CMat xrf0 = random_phases(8, 4);
  RunOptions opts;
  opts.on_round = [&](std::size_t, const std::vector<State>& st) {
    for (std::size_t i = 0; i < 8; ++i) {
      std::size_t b = inst.block_of(i);
      double mod = std::hypot(st[i][b], st[i][4 + b]);
      CHECK(mod == doctest::Approx(1.0).epsilon(1e-12));
    }
  };
  run_dmp(riemannian_dmp_spec(5, inst, xbb, xrf0, StepRule::fixed_step(0.05)), g, opts);
}

TEST_CASE("riemannian dmp: one round matches a hand-computed gradient step") {
  // 4 antennas, 1 symbol, 2 RF chains, fixed step.
  channels::MmWaveConfig cfg;
  auto inst = channels::sample_mmwave(cfg, 4, 4, 1, 2, 17);
  auto g = graphs::build_hybrid_graph(inst);
  CMat xbb = random_xbb(inst, 5);
  CMat xrf0 = random_phases(4, 6);
  double alpha = 0.1;

  auto states = run_dmp(riemannian_dmp_spec(1, inst, xbb, xrf0, StepRule::fixed_step(alpha)), g);
  CMat got = antenna_states_to_xrf(states, 4, 2, inst);

  // Hand evaluation: grad = -2 (Fopt - Frf Fbb) Fbb^H, tangent projection,
  // retraction, all on the block entries.
  CMat frf = objectives::reconstruct_frf(inst, xrf0);
  CMat fbb = objectives::fbb_from_xbb(xbb);
  CMat resid = num::csub(inst.fopt, num::cmul(frf, fbb));
  CMat grad = num::cscale(num::cmul(resid, num::adjoint(fbb)), -2.0);
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t b = inst.block_of(i);
    cxd x = xrf0(i, 0);
    cxd y = grad(i, b);
    cxd tangent = y - std::real(y * std::conj(x)) * x;
    cxd expect = solvers::project_unit_modulus(x - alpha * tangent);
    CHECK(std::abs(got(i, 0) - expect) < 1e-12);
  }
}

TEST_CASE("riemannian dmp: fixed point at an exact factorization") {
  channels::MmWaveConfig cfg;
  auto base = channels::sample_mmwave(cfg, 8, 4, 2, 4, 23);
  CMat xrf = random_phases(8, 8);
  CMat xbb = random_xbb(base, 9);
  auto inst = base;
  inst.fopt = num::cmul(objectives::reconstruct_frf(inst, xrf),
                        objectives::fbb_from_xbb(xbb));
  double scl = std::sqrt(2.0 / num::frob2(inst.fopt));
  for (auto& z : inst.fopt.a) z *= scl;
  for (auto& z : xbb.a) z *= scl;  // keep Fopt == Frf Fbb exactly

  auto giter = graphs::build_hybrid_graph(inst);
  auto states = run_dmp(riemannian_dmp_spec(4, inst, xbb, xrf, StepRule::armijo()), giter);
  CMat got = antenna_states_to_xrf(states, 8, 4, inst);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(got(i, 0) - xrf(i, 0)) < 1e-10);
}

TEST_CASE("riemannian dmp equals the direct implementation over many rounds") {
  channels::MmWaveConfig cfg;
  for (auto rule : {StepRule::fixed_step(0.05), StepRule::armijo()}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto inst = channels::sample_mmwave(cfg, 12, 6, 2, 4, rng::mix(200, seed));
      auto g = graphs::build_hybrid_graph(inst);
      CMat xbb = random_xbb(inst, rng::mix(201, seed));
      CMat xrf0 = random_phases(12, rng::mix(202, seed));
      std::size_t rounds = 25;

      auto direct = riemannian_direct(inst, xbb, xrf0, rounds, rule);
      RunOptions opts;
      std::size_t checked = 0;
      opts.on_round = [&](std::size_t round, const std::vector<State>& st) {
        CMat x = antenna_states_to_xrf(st, 12, 4, inst);
        for (std::size_t i = 0; i < 12; ++i)
          CHECK(std::abs(x(i, 0) - direct[round](i, 0)) <= 1e-12);
        ++checked;
      };
      run_dmp(riemannian_dmp_spec(rounds, inst, xbb, xrf0, rule), g, opts);
      CHECK(checked == rounds);
    }
  }
}

TEST_CASE("riemannian dmp: armijo rounds never increase the residual") {
  channels::MmWaveConfig cfg;
  auto inst = channels::sample_mmwave(cfg, 16, 8, 2, 4, 41);
  CMat xbb = random_xbb(inst, 42);
  CMat xrf0 = random_phases(16, 43);
  auto iter = riemannian_direct(inst, xbb, xrf0, 30, StepRule::armijo());
  auto resid = [&](const CMat& xrf) {
    CMat f = num::cmul(objectives::reconstruct_frf(inst, xrf), objectives::fbb_from_xbb(xbb));
    return num::frob2(num::csub(inst.fopt, f));
  };
  for (std::size_t t = 1; t < iter.size(); ++t)
    CHECK(resid(iter[t]) <= resid(iter[t - 1]) + 1e-12);
}

TEST_CASE("riemannian dmp: rejects non-hybrid graphs") {
  auto d2d = channels::sample_gaussian_ic(4, 1);
  auto g = graphs::build_d2d_graph(d2d);
  channels::MmWaveConfig cfg;
  auto inst = channels::sample_mmwave(cfg, 8, 4, 2, 4, 1);
  CMat xbb = random_xbb(inst, 1);
  CMat xrf0 = random_phases(8, 2);
  CHECK_THROWS_AS(run_dmp(riemannian_dmp_spec(2, inst, xbb, xrf0, StepRule::armijo()), g),
                  std::invalid_argument);
}
