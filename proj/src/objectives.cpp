#include "wgo/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace wgo::objectives {

using num::Shape;

namespace {

constexpr double kLn2 = 0.6931471805599453;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void check_power_feasible(const std::vector<double>& p, double pmax) {
  for (double v : p)
    require(v >= 0.0 && v <= pmax + 1e-12,
            "power vector violates the box constraint [0, " + std::to_string(pmax) + "]");
}

// ---- D2D ---------------------------------------------------------------

std::vector<double> sinr_d2d(const D2dInstance& inst, const std::vector<double>& p) {
  std::size_t k = inst.k;
  require(p.size() == k, "sinr_d2d: power length mismatch");
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    double interf = 0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) interf += std::norm(inst.h(j, i)) * p[j];
    out[i] = std::norm(inst.h(i, i)) * p[i] / (interf + inst.sigma2[i]);
  }
  return out;
}

double weighted_sum_rate(const D2dInstance& inst, const std::vector<double>& p) {
  std::vector<double> s = sinr_d2d(inst, p);
  double rate = 0;
  for (std::size_t i = 0; i < inst.k; ++i) rate += inst.w[i] * std::log2(1.0 + s[i]);
  return rate;
}

Tensor sinr_d2d_t(const D2dInstance& inst, const Tensor& p) {
  std::size_t k = inst.k;
  require(p.size() == k, "sinr_d2d: power length mismatch");
  std::vector<double> sig(k), noise(k), cross(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    sig[i] = std::norm(inst.h(i, i));
    noise[i] = inst.sigma2[i];
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) cross[j * k + i] = std::norm(inst.h(j, i));
  }
  Tensor prow = num::reshape(p, {1, k});
  Tensor interf = num::reshape(num::matmul(prow, Tensor({k, k}, cross)), {k});
  Tensor numer = num::mul(Tensor({k}, sig), p);
  Tensor denom = num::add(interf, Tensor({k}, noise));
  return num::divide(numer, denom);
}

Tensor weighted_sum_rate_t(const D2dInstance& inst, const Tensor& p) {
  Tensor s = sinr_d2d_t(inst, p);
  Tensor rates = num::scale(num::log(num::add_const(s, 1.0)), 1.0 / kLn2);
  return num::sum(num::mul(Tensor({inst.k}, inst.w), rates));
}

// ---- cell-free ------------------------------------------------------------

CellFreeCoeffs cellfree_coeffs(const CellFreeInstance& inst, const std::vector<double>& v) {
  std::size_t m = inst.m, k = inst.k;
  require(v.size() == m * k, "cellfree_coeffs: v size mismatch");
  for (std::size_t i = 0; i < inst.u.size(); ++i)
    require(inst.u[i] > 0, "cellfree_coeffs: zero large-scale coefficient");

  // Pilot cross-correlations.
  std::vector<double> pil(k * k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      num::cxd dot{0, 0};
      for (std::size_t t = 0; t < inst.tau; ++t)
        dot += std::conj(inst.phi(t, a)) * inst.phi(t, b);
      pil[a * k + b] = std::norm(dot);
    }

  CellFreeCoeffs co;
  co.k = k;
  co.sig.resize(k);
  co.cst.resize(k);
  co.den.assign(k * k, 0.0);
  for (std::size_t uk = 0; uk < k; ++uk) {
    double vsum = 0;
    for (std::size_t ap = 0; ap < m; ++ap) vsum += v[ap * k + uk];
    co.sig[uk] = vsum * vsum;
    co.cst[uk] = vsum / inst.rho;
    for (std::size_t kp = 0; kp < k; ++kp) {
      // Contamination term (k' != k): (sum_m v_mk u_mk'/u_mk)^2 |phi_k^H phi_k'|^2.
      if (kp != uk) {
        double ratio = 0;
        for (std::size_t ap = 0; ap < m; ++ap)
          ratio += v[ap * k + uk] * inst.u_at(ap, kp) / inst.u_at(ap, uk);
        co.den[uk * k + kp] += ratio * ratio * pil[uk * k + kp];
      }
      // Linear term, k' = k included as printed.
      double lin = 0;
      for (std::size_t ap = 0; ap < m; ++ap) lin += v[ap * k + uk] * inst.u_at(ap, kp);
      co.den[uk * k + kp] += lin;
    }
  }
  return co;
}

std::vector<double> sinr_cellfree(const CellFreeCoeffs& co, const std::vector<double>& p) {
  std::size_t k = co.k;
  require(p.size() == k, "sinr_cellfree: power length mismatch");
  std::vector<double> out(k);
  for (std::size_t uk = 0; uk < k; ++uk) {
    double den = co.cst[uk];
    for (std::size_t kp = 0; kp < k; ++kp) den += co.den[uk * k + kp] * p[kp];
    out[uk] = p[uk] * co.sig[uk] / den;
  }
  return out;
}

std::vector<double> sinr_cellfree(const CellFreeInstance& inst, const std::vector<double>& v,
                                  const std::vector<double>& p) {
  return sinr_cellfree(cellfree_coeffs(inst, v), p);
}

std::vector<double> rates_cellfree(const CellFreeCoeffs& co, const std::vector<double>& p) {
  std::vector<double> s = sinr_cellfree(co, p);
  for (double& v : s) v = std::log2(1.0 + v);
  return s;
}

double min_rate(const CellFreeCoeffs& co, const std::vector<double>& p) {
  std::vector<double> r = rates_cellfree(co, p);
  double m = r[0];
  for (double v : r) m = std::min(m, v);
  return m;
}

double min_rate(const CellFreeInstance& inst, const std::vector<double>& v,
                const std::vector<double>& p) {
  return min_rate(cellfree_coeffs(inst, v), p);
}

double soft_min_rate(const CellFreeCoeffs& co, const std::vector<double>& p, double beta) {
  require(beta > 0, "soft_min_rate: beta must be positive");
  std::vector<double> r = rates_cellfree(co, p);
  double m = r[0];
  for (double v : r) m = std::min(m, v);
  double s = 0;
  for (double v : r) s += std::exp(-beta * (v - m));
  return m - std::log(s) / beta;
}

Tensor rates_cellfree_t(const CellFreeCoeffs& co, const Tensor& p) {
  std::size_t k = co.k;
  require(p.size() == k, "rates_cellfree: power length mismatch");
  Tensor prow = num::reshape(p, {1, k});
  // den(k, j) p_j summed over j: p^T D^T, row k.
  std::vector<double> dt(k * k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) dt[b * k + a] = co.den[a * k + b];
  Tensor den = num::add(num::reshape(num::matmul(prow, Tensor({k, k}, dt)), {k}),
                        Tensor({k}, co.cst));
  Tensor sinr = num::divide(num::mul(Tensor({k}, co.sig), p), den);
  return num::scale(num::log(num::add_const(sinr, 1.0)), 1.0 / kLn2);
}

Tensor soft_min_rate_t(const CellFreeCoeffs& co, const Tensor& p, double beta) {
  require(beta > 0, "soft_min_rate: beta must be positive");
  Tensor r = rates_cellfree_t(co, p);
  double m = r.at(0);
  for (std::size_t i = 0; i < r.size(); ++i) m = std::min(m, r.at(i));
  // Shift by the (constant) minimum for a stable log-sum-exp.
  Tensor z = num::exp(num::scale(num::add_const(r, -m), -beta));
  Tensor lse = num::log(num::sum(z));
  return num::add_const(num::scale(lse, -1.0 / beta), m);
}

// ---- hybrid -----------------------------------------------------------------

void validate_solution(const HybridInstance& inst, const HybridSolution& s) {
  require(s.xrf.rows == inst.nt && s.xrf.cols == 1, "hybrid solution: Xrf must be Nt x 1");
  require(s.xbb.rows == inst.ns && s.xbb.cols == inst.nrf,
          "hybrid solution: Xbb must be Ns x Nrf");
  for (const auto& z : s.xrf.a)
    require(std::abs(std::abs(z) - 1.0) < 1e-6,
            "hybrid solution: Xrf entry is not unit modulus");
  double want = static_cast<double>(inst.nrf * inst.ns) / static_cast<double>(inst.nt);
  require(std::abs(num::frob2(s.xbb) - want) < 1e-6 * std::max(1.0, want),
          "hybrid solution: ||Xbb||_F^2 != Nrf*Ns/Nt");
}

CMat reconstruct_frf(const HybridInstance& inst, const CMat& xrf) {
  CMat frf(inst.nt, inst.nrf);
  for (std::size_t i = 0; i < inst.nt; ++i) frf(i, inst.block_of(i)) = xrf(i, 0);
  return frf;
}

CMat fbb_from_xbb(const CMat& xbb) { return num::adjoint(xbb); }

double hybrid_residual(const HybridInstance& inst, const HybridSolution& s) {
  validate_solution(inst, s);
  double total = 0;
  for (std::size_t i = 0; i < inst.nt; ++i) {
    std::size_t b = inst.block_of(i);
    for (std::size_t j = 0; j < inst.ns; ++j) {
      num::cxd term = inst.fopt(i, j) - s.xrf(i, 0) * std::conj(s.xbb(j, b));
      total += std::norm(term);
    }
  }
  return total;
}

double hybrid_residual_reconstructed(const HybridInstance& inst, const HybridSolution& s) {
  validate_solution(inst, s);
  CMat f = num::cmul(reconstruct_frf(inst, s.xrf), fbb_from_xbb(s.xbb));
  return num::frob2(num::csub(inst.fopt, f));
}

Tensor hybrid_residual_t(const HybridInstance& inst, const CTensor& xrf,
                         const CTensor& xbb) {
  std::size_t nt = inst.nt, nrf = inst.nrf;
  // Block-support mask expands xrf into the Nt x Nrf analog precoder.
  std::vector<double> mask(nt * nrf, 0.0);
  for (std::size_t i = 0; i < nt; ++i) mask[i * nrf + inst.block_of(i)] = 1.0;
  Tensor mk({nt, nrf}, mask);
  CTensor frf{num::mul(xrf.re, mk), num::mul(xrf.im, mk)};
  CTensor f = num::ct_matmul(frf, num::ct_adjoint(xbb));
  CTensor diff = num::ct_sub(num::ct_constant(inst.fopt), f);
  return num::ct_frob2(diff);
}

double spectral_efficiency(const HybridInstance& inst, const HybridSolution& s) {
  validate_solution(inst, s);
  CMat f = num::cmul(reconstruct_frf(inst, s.xrf), fbb_from_xbb(s.xbb));
  CMat hf = num::cmul(inst.h, f);  // Nr x Ns
  CMat m = num::cmul(num::adjoint(hf), hf);
  double c = inst.snr / static_cast<double>(inst.ns);
  for (auto& v : m.a) v *= c;
  m = num::cadd(m, num::identity(inst.ns));
  return num::log2_det_hermitian_pd(m);
}

double energy_efficiency(double r, std::size_t nrf, std::size_t nt, const EnergyModel& em) {
  require(em.p_common > 0 && em.p_rf > 0 && em.p_ps > 0 && em.p_pa > 0,
          "energy model: powers must be positive");
  double denom = em.p_common + static_cast<double>(nrf) * em.p_rf +
                 static_cast<double>(nt) * (em.p_pa + em.p_ps);
  return r / denom;
}

}  // namespace wgo::objectives
