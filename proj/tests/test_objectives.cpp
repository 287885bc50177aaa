#include "doctest.h"

#include <cmath>

#include "wgo/channels.hpp"
#include "wgo/objectives.hpp"
#include "wgo/rng.hpp"

using namespace wgo;
using namespace wgo::objectives;
using channels::CellFreeInstance;
using channels::D2dInstance;
using channels::HybridInstance;
using num::CMat;
using num::Tensor;

namespace {

D2dInstance single_user(double gain2, double sigma2) {
  D2dInstance inst;
  inst.k = 1;
  inst.h = CMat(1, 1);
  inst.h(0, 0) = std::sqrt(gain2);
  inst.w = {1.0};
  inst.sigma2 = {sigma2};
  return inst;
}

}  // namespace

TEST_CASE("sinr_d2d examples") {
  auto inst = single_user(4.0, 1.0);
  auto s = sinr_d2d(inst, {1.0});
  CHECK(s[0] == doctest::Approx(4.0));
  CHECK(weighted_sum_rate(inst, {1.0}) == doctest::Approx(std::log2(5.0)));

  D2dInstance two;
  two.k = 2;
  two.h = CMat(2, 2);
  two.h(0, 0) = 1.0;
  two.h(1, 1) = 1.0;
  two.w = {1.0, 1.0};
  two.sigma2 = {1.0, 1.0};
  auto s2 = sinr_d2d(two, {1.0, 1.0});
  CHECK(s2[0] == doctest::Approx(1.0));
  CHECK(s2[1] == doctest::Approx(1.0));
  CHECK(weighted_sum_rate(two, {1.0, 1.0}) == doctest::Approx(2.0));
  CHECK(weighted_sum_rate(two, {0.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("sinr_d2d matches an independent straight-loop oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    D2dInstance inst = channels::sample_gaussian_ic(4, rng::mix(1000, seed));
    rng::Rng r(rng::mix(2000, seed));
    std::vector<double> p(4);
    for (auto& v : p) v = r.uniform();
    auto got = sinr_d2d(inst, p);
    for (std::size_t i = 0; i < 4; ++i) {
      // Straight-loop re-implementation.
      double num_ = std::norm(inst.h(i, i)) * p[i];
      double den = inst.sigma2[i];
      for (std::size_t j = 0; j < 4; ++j)
        if (j != i) den += std::norm(inst.h(j, i)) * p[j];
      double expect = num_ / den;
      CHECK(std::abs(got[i] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("weighted_sum_rate tape path: value and gradient") {
  D2dInstance inst = channels::sample_gaussian_ic(4, 5);
  rng::Rng r(6);
  std::vector<double> p(4);
  for (auto& v : p) v = r.uniform(0.05, 0.95);
  Tensor pt({4}, p);

  CHECK(weighted_sum_rate_t(inst, pt).item() ==
        doctest::Approx(weighted_sum_rate(inst, p)).epsilon(1e-12));

  double err = num::grad_check(
      [&](num::Tape*, const Tensor& x) { return weighted_sum_rate_t(inst, x); }, pt, 1e-5);
  CHECK(err < 1e-5);
}

TEST_CASE("weighted_sum_rate is permutation invariant") {
  D2dInstance inst = channels::sample_gaussian_ic(5, 9);
  rng::Rng r(10);
  std::vector<double> p(5);
  for (auto& v : p) v = r.uniform();
  std::vector<std::size_t> perm = {3, 0, 4, 1, 2};  // node i -> perm[i]

  D2dInstance pi;
  pi.k = 5;
  pi.h = CMat(5, 5);
  pi.w.resize(5);
  pi.sigma2.resize(5);
  std::vector<double> pp(5);
  for (std::size_t i = 0; i < 5; ++i) {
    pi.w[perm[i]] = inst.w[i];
    pi.sigma2[perm[i]] = inst.sigma2[i];
    pp[perm[i]] = p[i];
    for (std::size_t j = 0; j < 5; ++j) pi.h(perm[i], perm[j]) = inst.h(i, j);
  }
  CHECK(weighted_sum_rate(pi, pp) == doctest::Approx(weighted_sum_rate(inst, p)).epsilon(1e-12));
}

TEST_CASE("cellfree sinr: K=1 reduces to the two-term denominator") {
  CellFreeInstance inst;
  inst.m = 3;
  inst.k = 1;
  inst.tau = 1;
  inst.rho = 2.0;
  inst.u = {0.5, 1.0, 2.0};
  inst.phi = CMat(1, 1);
  inst.phi(0, 0) = 1.0;
  auto v = channels::compute_v_coeffs(inst);
  double p = 0.7;
  auto s = sinr_cellfree(inst, v, {p});
  double vsum = v[0] + v[1] + v[2];
  double lin = v[0] * 0.5 + v[1] * 1.0 + v[2] * 2.0;
  double expect = p * vsum * vsum / (p * lin + vsum / inst.rho);
  CHECK(s[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("cellfree sinr: orthogonal pilots kill the contamination term") {
  channels::CellFreeConfig cfg;
  cfg.tau = 4;
  cfg.orthogonal_pilots = true;
  auto inst = channels::sample_cellfree(cfg, 5, 3, 3);
  auto v = channels::compute_v_coeffs(inst);
  auto co = cellfree_coeffs(inst, v);
  // With orthogonal pilots only the linear term remains in den for k' != k.
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t kp = 0; kp < 3; ++kp) {
      if (k == kp) continue;
      double lin = 0;
      for (std::size_t m = 0; m < 5; ++m) lin += v[m * 3 + k] * inst.u_at(m, kp);
      CHECK(co.den[k * 3 + kp] == doctest::Approx(lin).epsilon(1e-12));
    }
}

TEST_CASE("cellfree sinr matches an independent re-implementation") {
  channels::CellFreeConfig cfg;
  cfg.tau = 3;
  cfg.orthogonal_pilots = false;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto inst = channels::sample_cellfree(cfg, 5, 3, rng::mix(500, seed));
    auto v = channels::compute_v_coeffs(inst);
    rng::Rng r(rng::mix(600, seed));
    std::vector<double> p(3);
    for (auto& x : p) x = r.uniform(0.01, 1.0);
    auto got = sinr_cellfree(inst, v, p);
    // Straight-loop evaluation of the printed formula.
    for (std::size_t k = 0; k < 3; ++k) {
      double vsum = 0;
      for (std::size_t m = 0; m < 5; ++m) vsum += v[m * 3 + k];
      double den = vsum / inst.rho;
      for (std::size_t kp = 0; kp < 3; ++kp) {
        num::cxd dot{0, 0};
        for (std::size_t t = 0; t < 3; ++t)
          dot += std::conj(inst.phi(t, k)) * inst.phi(t, kp);
        if (kp != k) {
          double ratio = 0;
          for (std::size_t m = 0; m < 5; ++m)
            ratio += v[m * 3 + k] * inst.u_at(m, kp) / inst.u_at(m, k);
          den += p[kp] * ratio * ratio * std::norm(dot);
        }
        double lin = 0;
        for (std::size_t m = 0; m < 5; ++m) lin += v[m * 3 + k] * inst.u_at(m, kp);
        den += p[kp] * lin;
      }
      double expect = p[k] * vsum * vsum / den;
      CHECK(std::abs(got[k] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("min rate and soft min rate") {
  channels::CellFreeConfig cfg;
  auto inst = channels::sample_cellfree(cfg, 6, 4, 42);
  auto v = channels::compute_v_coeffs(inst);
  auto co = cellfree_coeffs(inst, v);
  std::vector<double> p = {0.5, 0.9, 0.3, 1.0};

  double hard = min_rate(co, p);
  double prev = -1e18;
  for (double beta : {5.0, 20.0, 80.0, 320.0}) {
    double soft = soft_min_rate(co, p, beta);
    CHECK(soft <= hard + 1e-12);
    CHECK(hard - soft < std::log(4.0) / beta + 1e-12);
    CHECK(soft >= prev - 1e-12);  // monotone in beta
    prev = soft;
  }

  Tensor pt({4}, p);
  CHECK(soft_min_rate_t(co, pt, 20.0).item() ==
        doctest::Approx(soft_min_rate(co, p, 20.0)).epsilon(1e-12));
  double err = num::grad_check(
      [&](num::Tape*, const Tensor& x) { return soft_min_rate_t(co, x, 20.0); }, pt, 1e-5);
  CHECK(err < 1e-5);

  // Symmetric two-user instance: both rates equal the minimum.
  CellFreeInstance sym;
  sym.m = 2;
  sym.k = 2;
  sym.tau = 2;
  sym.rho = 3.0;
  sym.u = {1.0, 1.0, 1.0, 1.0};
  sym.phi = CMat(2, 2);
  sym.phi(0, 0) = 1.0;
  sym.phi(1, 1) = 1.0;
  auto vs = channels::compute_v_coeffs(sym);
  auto cos_ = cellfree_coeffs(sym, vs);
  auto rates = rates_cellfree(cos_, {0.8, 0.8});
  CHECK(rates[0] == doctest::Approx(rates[1]));
  CHECK(min_rate(cos_, {0.8, 0.8}) == doctest::Approx(rates[0]));
}

TEST_CASE("hybrid residual: exact factorization gives zero") {
  channels::MmWaveConfig cfg;
  auto inst = channels::sample_mmwave(cfg, 8, 4, 2, 4, 13);
  // Build Fopt = Frf Fbb exactly, then re-derive the residual.
  rng::Rng r(3);
  HybridSolution s;
  s.xrf = CMat(8, 1);
  for (std::size_t i = 0; i < 8; ++i) {
    double th = r.uniform(0, 2 * M_PI);
    s.xrf(i, 0) = {std::cos(th), std::sin(th)};
  }
  s.xbb = CMat(2, 4);
  for (auto& v : s.xbb.a) v = r.cnormal();
  double scl = std::sqrt((4.0 * 2.0 / 8.0) / num::frob2(s.xbb));
  for (auto& v : s.xbb.a) v *= scl;

  HybridInstance exact = inst;
  exact.fopt = num::cmul(reconstruct_frf(inst, s.xrf), fbb_from_xbb(s.xbb));
  // Keep ||Fopt||^2 = Ns by feasibility-preserving rescale of xbb.
  double f2 = num::frob2(exact.fopt);
  double fix = std::sqrt(2.0 / f2);
  for (auto& v : s.xbb.a) v *= fix;
  exact.fopt = num::cmul(reconstruct_frf(inst, s.xrf), fbb_from_xbb(s.xbb));

  CHECK(hybrid_residual(exact, s) == doctest::Approx(0.0).epsilon(1e-12));

  // Infeasible norm rejected.
  HybridSolution zero = s;
  for (auto& v : zero.xbb.a) v = 0.0;
  CHECK_THROWS_AS(hybrid_residual(exact, zero), std::invalid_argument);
}

TEST_CASE("hybrid residual: indexed sum equals matrix reconstruction") {
  channels::MmWaveConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = channels::sample_mmwave(cfg, 12, 4, 2, 4, rng::mix(70, seed));
    rng::Rng r(rng::mix(71, seed));
    HybridSolution s;
    s.xrf = CMat(12, 1);
    for (std::size_t i = 0; i < 12; ++i) {
      double th = r.uniform(0, 2 * M_PI);
      s.xrf(i, 0) = {std::cos(th), std::sin(th)};
    }
    s.xbb = CMat(2, 4);
    for (auto& v : s.xbb.a) v = r.cnormal();
    double scl = std::sqrt((4.0 * 2.0 / 12.0) / num::frob2(s.xbb));
    for (auto& v : s.xbb.a) v *= scl;

    double a = hybrid_residual(inst, s);
    double b = hybrid_residual_reconstructed(inst, s);
    CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, a));

    // Tape path agrees too.
    Tensor t = hybrid_residual_t(inst, num::ct_constant(s.xrf), num::ct_constant(s.xbb));
    CHECK(t.item() == doctest::Approx(a).epsilon(1e-10));
  }
}

TEST_CASE("energy efficiency") {
  EnergyModel em;
  double eta = energy_efficiency(10.0, 4, 144, em);
  CHECK(eta == doctest::Approx(10.0 / (10.0 + 0.4 + 144 * 0.11)).epsilon(1e-12));
  CHECK(energy_efficiency(0.0, 4, 144, em) == 0.0);
  // Strictly decreasing in Nrf at fixed R.
  CHECK(energy_efficiency(10.0, 2, 144, em) > energy_efficiency(10.0, 4, 144, em));
  CHECK(energy_efficiency(10.0, 4, 144, em) > energy_efficiency(10.0, 8, 144, em));
}

TEST_CASE("spectral efficiency sanity") {
  channels::MmWaveConfig cfg;
  auto inst = channels::sample_mmwave(cfg, 8, 4, 2, 4, 2);
  HybridSolution s;
  s.xrf = CMat(8, 1);
  for (auto& v : s.xrf.a) v = 1.0;
  s.xbb = CMat(2, 4);
  rng::Rng r(5);
  for (auto& v : s.xbb.a) v = r.cnormal();
  double scl = std::sqrt((4.0 * 2.0 / 8.0) / num::frob2(s.xbb));
  for (auto& v : s.xbb.a) v *= scl;
  double se = spectral_efficiency(inst, s);
  CHECK(se > 0.0);
  CHECK(std::isfinite(se));
}
