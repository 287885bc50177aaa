#include "doctest.h"

#include <cmath>

#include "wgo/channels.hpp"
#include "wgo/rng.hpp"

using namespace wgo::channels;
using wgo::num::CMat;

TEST_CASE("gaussian ic: |h|^2 empirical mean near 1") {
  double acc = 0;
  std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    D2dInstance inst = sample_gaussian_ic(1, wgo::rng::mix(0, i));
    acc += std::norm(inst.h(0, 0));
  }
  double mean = acc / static_cast<double>(n);
  CHECK(std::abs(mean - 1.0) < 0.02);
}

TEST_CASE("gaussian ic: determinism and unit weights") {
  D2dInstance a = sample_gaussian_ic(10, 7);
  D2dInstance b = sample_gaussian_ic(10, 7);
  CHECK(a.h.a == b.h.a);
  CHECK(a.sigma2 == b.sigma2);
  for (double w : a.w) CHECK(w == 1.0);
  CHECK_THROWS_AS(sample_gaussian_ic(0, 1), std::invalid_argument);
}

TEST_CASE("geometric d2d: distances respect the annulus") {
  D2dGeomConfig cfg;
  cfg.dmin_m = 30;
  cfg.dmax_m = 30;
  D2dInstance inst = sample_d2d_geometric(cfg, 10, 3);
  validate(inst);
  // With dmin == dmax == 30 every direct link is exactly 30 m, so all direct
  // gains are equal (no fading).
  double g0 = std::norm(inst.h(0, 0));
  for (std::size_t i = 1; i < 10; ++i)
    CHECK(std::norm(inst.h(i, i)) == doctest::Approx(g0).epsilon(1e-12));

  D2dGeomConfig bad;
  bad.dmax_m = bad.area_m * 2;
  CHECK_THROWS_AS(sample_d2d_geometric(bad, 4, 1), std::invalid_argument);
}

TEST_CASE("geometric d2d: pathloss decreases with distance") {
  D2dGeomConfig cfg;
  double prev = -1e9;
  for (double d = 10; d <= 50; d += 2.5) {
    double pl = pathloss_db_short_range(d, cfg, false);
    CHECK(pl > prev);
    prev = pl;
  }
  // NLoS adds loss.
  CHECK(pathloss_db_short_range(30, cfg, true) ==
        doctest::Approx(pathloss_db_short_range(30, cfg, false) + cfg.nlos_extra_loss_db));
}

TEST_CASE("cellfree sampler: orthogonal pilots and positivity") {
  CellFreeConfig cfg;
  cfg.tau = 6;
  cfg.orthogonal_pilots = true;
  CellFreeInstance inst = sample_cellfree(cfg, 30, 6, 11);
  validate(inst);
  // Phi^H Phi == identity.
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) {
      wgo::num::cxd dot{0, 0};
      for (std::size_t t = 0; t < 6; ++t) dot += std::conj(inst.phi(t, a)) * inst.phi(t, b);
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
    }
  for (double u : inst.u) CHECK(u > 0);

  CellFreeInstance again = sample_cellfree(cfg, 30, 6, 11);
  CHECK(inst.u == again.u);

  CellFreeConfig bad = cfg;
  bad.tau = 3;  // orthogonal pilots impossible for K=6
  CHECK_THROWS_AS(sample_cellfree(bad, 30, 6, 1), std::invalid_argument);
}

TEST_CASE("compute_v_coeffs matches the printed formula") {
  // K=1, tau*rho = 1, u = 1, unit pilot -> v = 1/(1+1) = 0.5.
  CellFreeInstance inst;
  inst.m = 1;
  inst.k = 1;
  inst.tau = 1;
  inst.rho = 1.0;
  inst.u = {1.0};
  inst.phi = CMat(1, 1);
  inst.phi(0, 0) = 1.0;
  auto v = compute_v_coeffs(inst);
  CHECK(v[0] == doctest::Approx(0.5));

  // Doubling rho changes v per the formula; check against an independent
  // evaluation over a random non-orthogonal instance.
  CellFreeConfig cfg;
  cfg.tau = 3;
  cfg.orthogonal_pilots = false;
  CellFreeInstance big = sample_cellfree(cfg, 4, 5, 99);
  for (double rho_mult : {1.0, 2.0}) {
    CellFreeInstance scaled = big;
    scaled.rho *= rho_mult;
    auto got = compute_v_coeffs(scaled);
    double trho = static_cast<double>(scaled.tau) * scaled.rho;
    for (std::size_t ap = 0; ap < scaled.m; ++ap)
      for (std::size_t uk = 0; uk < scaled.k; ++uk) {
        double du = 0;
        for (std::size_t kp = 0; kp < scaled.k; ++kp) {
          wgo::num::cxd dot{0, 0};
          for (std::size_t t = 0; t < scaled.tau; ++t)
            dot += std::conj(scaled.phi(t, uk)) * scaled.phi(t, kp);
          du += scaled.u_at(ap, uk) * std::norm(dot);
        }
        double expect = std::sqrt(trho) * scaled.u_at(ap, uk) / (trho * du + 1.0);
        CHECK(got[ap * scaled.k + uk] == doctest::Approx(expect).epsilon(1e-12));
      }
  }

  // Orthogonal pilots collapse the denominator sum to the k'=k term.
  CellFreeConfig ocfg;
  ocfg.tau = 5;
  ocfg.orthogonal_pilots = true;
  CellFreeInstance ortho = sample_cellfree(ocfg, 3, 5, 5);
  auto vo = compute_v_coeffs(ortho);
  double trho = static_cast<double>(ortho.tau) * ortho.rho;
  for (std::size_t ap = 0; ap < 3; ++ap)
    for (std::size_t uk = 0; uk < 5; ++uk) {
      double u = ortho.u_at(ap, uk);
      CHECK(vo[ap * 5 + uk] == doctest::Approx(std::sqrt(trho) * u / (trho * u + 1.0)));
    }
}

TEST_CASE("mmwave sampler: Fopt structure and shape checks") {
  MmWaveConfig cfg;
  HybridInstance inst = sample_mmwave(cfg, 16, 8, 2, 4, 21);
  validate(inst);
  // Columns orthogonal, squared norm Ns.
  wgo::num::cxd dot{0, 0};
  double n2 = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    dot += std::conj(inst.fopt(i, 0)) * inst.fopt(i, 1);
    n2 += std::norm(inst.fopt(i, 0)) + std::norm(inst.fopt(i, 1));
  }
  CHECK(std::abs(dot) < 1e-10);
  CHECK(n2 == doctest::Approx(2.0).epsilon(1e-10));

  CHECK_NOTHROW(sample_mmwave(cfg, 144, 36, 2, 4, 1));
  CHECK_THROWS_AS(sample_mmwave(cfg, 144, 36, 2, 7, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_mmwave(cfg, 8, 2, 4, 4, 1), std::invalid_argument);
}

TEST_CASE("instance json round trip") {
  D2dInstance d = sample_gaussian_ic(4, 123);
  ProblemInstance p = d;
  auto back = instance_from_json(to_json(p));
  const auto& d2 = std::get<D2dInstance>(back);
  CHECK(d2.h.a == d.h.a);
  CHECK(d2.sigma2 == d.sigma2);

  CellFreeConfig ccfg;
  ccfg.tau = 4;
  ccfg.orthogonal_pilots = false;
  CellFreeInstance c = sample_cellfree(ccfg, 5, 3, 9);
  auto cb = std::get<CellFreeInstance>(instance_from_json(to_json(ProblemInstance{c})));
  CHECK(cb.u == c.u);
  CHECK(cb.phi.a == c.phi.a);

  MmWaveConfig mcfg;
  HybridInstance h = sample_mmwave(mcfg, 8, 4, 2, 4, 77);
  auto hb = std::get<HybridInstance>(instance_from_json(to_json(ProblemInstance{h})));
  CHECK(hb.h.a == h.h.a);
  CHECK(hb.fopt.a == h.fopt.a);
}
