#include "wgo/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "wgo/rng.hpp"

namespace wgo::solvers {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// h(j, i) is the channel from transmitter j to receiver i, so the receive
// filter update sums incoming gains |h(j,k)|^2 and the transmit update sums
// outgoing gains |h(k,j)|^2.
struct WmmseState {
  std::vector<double> v, u, a;  // a holds the MSE weight alpha
};

void wmmse_receiver_update(const D2dInstance& inst, WmmseState& st) {
  std::size_t k = inst.k;
  for (std::size_t i = 0; i < k; ++i) {
    double g_ii = std::norm(inst.h(i, i));
    double interf = 0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) interf += std::norm(inst.h(j, i)) * st.v[j] * st.v[j];
    double den = (interf + g_ii * st.v[i] * st.v[i]) + inst.sigma2[i];
    st.u[i] = std::sqrt(g_ii) * st.v[i] / den;
    st.a[i] = 1.0 / (1.0 - st.u[i] * std::sqrt(g_ii) * st.v[i]);
  }
}

void wmmse_transmit_update(const D2dInstance& inst, WmmseState& st) {
  std::size_t k = inst.k;
  std::vector<double> vnew(k);
  for (std::size_t i = 0; i < k; ++i) {
    double g_ii = std::norm(inst.h(i, i));
    double den = 0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) den += inst.w[j] * st.a[j] * st.u[j] * st.u[j] * std::norm(inst.h(i, j));
    den += inst.w[i] * st.a[i] * st.u[i] * st.u[i] * g_ii;
    double vi = den > 0 ? inst.w[i] * st.a[i] * st.u[i] * std::sqrt(g_ii) / den : 0.0;
    vnew[i] = std::clamp(vi, 0.0, 1.0);  // box constraint via clipped v
  }
  st.v = std::move(vnew);
}

}  // namespace

std::vector<std::vector<double>> wmmse_v_iterates(const D2dInstance& inst,
                                                  const std::vector<double>& init,
                                                  std::size_t iters) {
  channels::validate(inst);
  objectives::check_power_feasible(init, inst.pmax);
  std::size_t k = inst.k;
  WmmseState st;
  st.v.resize(k);
  st.u.assign(k, 0.0);
  st.a.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) st.v[i] = std::clamp(std::sqrt(init[i]), 0.0, 1.0);

  std::vector<std::vector<double>> out;
  out.push_back(st.v);
  wmmse_receiver_update(inst, st);
  for (std::size_t t = 0; t < iters; ++t) {
    wmmse_transmit_update(inst, st);
    wmmse_receiver_update(inst, st);
    out.push_back(st.v);
  }
  return out;
}

SolverReport wmmse(const D2dInstance& inst, const std::vector<double>& init,
                   const WmmseOptions& opt) {
  require(opt.max_iters >= 1, "wmmse: need at least one iteration");
  channels::validate(inst);
  objectives::check_power_feasible(init, inst.pmax);
  double t0 = now_s();

  std::size_t k = inst.k;
  WmmseState st;
  st.v.resize(k);
  st.u.assign(k, 0.0);
  st.a.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) st.v[i] = std::clamp(std::sqrt(init[i]), 0.0, 1.0);

  auto rate_of = [&]() {
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i) p[i] = st.v[i] * st.v[i];
    return objectives::weighted_sum_rate(inst, p);
  };

  SolverReport rep;
  rep.trace.push_back(rate_of());
  wmmse_receiver_update(inst, st);
  for (std::size_t t = 0; t < opt.max_iters; ++t) {
    wmmse_transmit_update(inst, st);
    wmmse_receiver_update(inst, st);
    double r = rate_of();
    rep.trace.push_back(r);
    rep.iterations = t + 1;
    if (opt.rate_tol > 0 && std::abs(r - rep.trace[rep.trace.size() - 2]) < opt.rate_tol)
      break;
  }
  rep.p.resize(k);
  for (std::size_t i = 0; i < k; ++i) rep.p[i] = st.v[i] * st.v[i];
  rep.wall_time_s = now_s() - t0;
  return rep;
}

SolverReport best_of_restarts(const D2dInstance& inst, std::size_t n_init,
                              std::uint64_t seed, const WmmseOptions& opt) {
  require(n_init >= 1, "best_of_restarts: need at least one restart");
  double t0 = now_s();
  SolverReport best;
  double best_rate = -1;
  for (std::size_t r = 0; r < n_init; ++r) {
    rng::Rng rr(rng::mix(seed, r));
    std::vector<double> init(inst.k);
    for (auto& v : init) v = rr.uniform();
    SolverReport rep = wmmse(inst, init, opt);
    double rate = rep.trace.back();
    if (rate > best_rate) {
      best_rate = rate;
      best = std::move(rep);
    }
  }
  best.wall_time_s = now_s() - t0;
  return best;
}

SolverReport maxmin_bisection(const CellFreeInstance& inst, double tol) {
  require(tol > 0, "maxmin_bisection: tol must be positive");
  channels::validate(inst);
  double t0 = now_s();

  std::vector<double> v = channels::compute_v_coeffs(inst);
  objectives::CellFreeCoeffs co = objectives::cellfree_coeffs(inst, v);
  std::size_t k = co.k;
  for (double s : co.sig)
    require(s > 0, "maxmin_bisection: degenerate instance with zero signal coefficient");

  // Least fixed point of p <- min(1, gamma * (D p + c) / S), reached
  // monotonically from zero. Feasible iff every SINR at the fixed point
  // reaches gamma.
  auto feasible = [&](double gamma, std::vector<double>& p_out) {
    std::vector<double> p(k, 0.0), pn(k);
    for (std::size_t it = 0; it < 2000; ++it) {
      double delta = 0;
      for (std::size_t i = 0; i < k; ++i) {
        double den = co.cst[i];
        for (std::size_t j = 0; j < k; ++j) den += co.den[i * k + j] * p[j];
        pn[i] = std::min(1.0, gamma * den / co.sig[i]);
        delta = std::max(delta, std::abs(pn[i] - p[i]));
      }
      p.swap(pn);
      if (delta < 1e-14) break;
    }
    std::vector<double> s = objectives::sinr_cellfree(co, p);
    for (std::size_t i = 0; i < k; ++i)
      if (s[i] < gamma * (1.0 - 1e-10)) return false;
    p_out = std::move(p);
    return true;
  };

  std::vector<double> full(k, 1.0);
  std::vector<double> s_full = objectives::sinr_cellfree(co, full);
  double gamma_hi = 0;
  for (double s : s_full) gamma_hi = std::max(gamma_hi, s);
  gamma_hi *= static_cast<double>(k);

  SolverReport rep;
  std::vector<double> best_p = full;  // full power is always feasible at its own min SINR
  double gamma_lo = *std::min_element(s_full.begin(), s_full.end());
  rep.trace.push_back(objectives::min_rate(co, best_p));

  double rate_hi = std::log2(1.0 + gamma_hi);
  while (rate_hi - std::log2(1.0 + gamma_lo) > tol) {
    double rate_mid = 0.5 * (std::log2(1.0 + gamma_lo) + rate_hi);
    double gamma = std::pow(2.0, rate_mid) - 1.0;
    std::vector<double> p;
    if (feasible(gamma, p)) {
      gamma_lo = gamma;
      best_p = std::move(p);
    } else {
      rate_hi = rate_mid;
    }
    rep.iterations++;
    rep.trace.push_back(objectives::min_rate(co, best_p));
    if (rep.iterations >= 200) break;
  }

  // Scaling every power up by a common factor improves all SINRs here, so
  // push the largest power to the box boundary.
  double pmax = *std::max_element(best_p.begin(), best_p.end());
  if (pmax > 0)
    for (double& x : best_p) x = std::min(1.0, x / pmax);
  rep.trace.push_back(objectives::min_rate(co, best_p));
  rep.p = std::move(best_p);
  rep.iterations++;
  rep.wall_time_s = now_s() - t0;
  return rep;
}

cxd project_unit_modulus(cxd z) {
  double m = std::abs(z);
  if (m == 0.0) return {1.0, 0.0};
  return z / m;
}

CMat digital_ls_scaled(const CMat& fopt, const CMat& xrf, std::size_t nrf) {
  std::size_t nt = fopt.rows, ns = fopt.cols;
  require(nt % nrf == 0 && xrf.rows == nt && xrf.cols == 1,
          "digital_ls_scaled: shape mismatch");
  std::size_t blen = nt / nrf;
  double ratio = static_cast<double>(nrf) / static_cast<double>(nt);
  CMat xbb(ns, nrf);  // row j holds (Fbb^H)(j,:) = conj(Fbb(:,j))
  for (std::size_t j = 0; j < ns; ++j)
    for (std::size_t r = 0; r < nrf; ++r) {
      cxd acc{0, 0};
      for (std::size_t i = r * blen; i < (r + 1) * blen; ++i)
        acc += xrf(i, 0) * std::conj(fopt(i, j));
      xbb(j, r) = ratio * acc;
    }
  double want = static_cast<double>(nrf * ns) / static_cast<double>(nt);
  double have = num::frob2(xbb);
  if (have > 0) {
    double scl = std::sqrt(want / have);
    for (auto& z : xbb.a) z *= scl;
  }
  return xbb;
}

HybridSolution altmin_iterate(const HybridInstance& inst, const CMat& xbb) {
  require(xbb.rows == inst.ns && xbb.cols == inst.nrf, "altmin_iterate: Xbb shape mismatch");
  HybridSolution s;
  s.xrf = CMat(inst.nt, 1);
  for (std::size_t i = 0; i < inst.nt; ++i) {
    std::size_t b = inst.block_of(i);
    cxd acc{0, 0};
    for (std::size_t j = 0; j < inst.ns; ++j)
      acc += inst.fopt(i, j) * xbb(j, b);  // (Fbb^H)(b,j)^* = xbb(j,b)
    s.xrf(i, 0) = project_unit_modulus(acc);
  }
  s.xbb = digital_ls_scaled(inst.fopt, s.xrf, inst.nrf);
  return s;
}

HybridSolution altmin_initial(const HybridInstance& inst, std::uint64_t init_seed) {
  CMat xrf(inst.nt, 1);
  if (init_seed == 0) {
    for (auto& z : xrf.a) z = 1.0;
  } else {
    rng::Rng r(init_seed);
    for (auto& z : xrf.a) {
      double th = r.uniform(0, 2.0 * M_PI);
      z = {std::cos(th), std::sin(th)};
    }
  }
  HybridSolution s;
  s.xrf = std::move(xrf);
  s.xbb = digital_ls_scaled(inst.fopt, s.xrf, inst.nrf);
  return s;
}

SolverReport hybrid_altmin(const HybridInstance& inst, const AltminOptions& opt) {
  require(opt.max_iters >= 1, "hybrid_altmin: need at least one iteration");
  channels::validate(inst);
  double t0 = now_s();

  SolverReport rep;
  HybridSolution s = altmin_initial(inst, opt.init_seed);
  rep.trace.push_back(objectives::hybrid_residual(inst, s));
  for (std::size_t t = 0; t < opt.max_iters; ++t) {
    s = altmin_iterate(inst, s.xbb);
    double r = objectives::hybrid_residual(inst, s);
    rep.trace.push_back(r);
    rep.iterations = t + 1;
    if (opt.residual_tol > 0 &&
        rep.trace[rep.trace.size() - 2] - r < opt.residual_tol)
      break;
  }
  rep.hybrid = std::move(s);
  rep.wall_time_s = now_s() - t0;
  return rep;
}

}  // namespace wgo::solvers
