#pragma once

// Objective and metric evaluation for all three problem families. Each
// objective has a plain double path (solvers, oracles) and, where training
// needs gradients, a tape path producing the same values.

#include <vector>

#include "wgo/channels.hpp"
#include "wgo/complexmat.hpp"
#include "wgo/tensor.hpp"

namespace wgo::objectives {

using channels::CellFreeInstance;
using channels::D2dInstance;
using channels::HybridInstance;
using num::CMat;
using num::CTensor;
using num::Tensor;

// ---- D2D ---------------------------------------------------------------

// Throws if any p_k is outside [0, pmax].
void check_power_feasible(const std::vector<double>& p, double pmax);

std::vector<double> sinr_d2d(const D2dInstance& inst, const std::vector<double>& p);
double weighted_sum_rate(const D2dInstance& inst, const std::vector<double>& p);

// p has shape (K); result shapes (K) and scalar.
Tensor sinr_d2d_t(const D2dInstance& inst, const Tensor& p);
Tensor weighted_sum_rate_t(const D2dInstance& inst, const Tensor& p);

// ---- cell-free ----------------------------------------------------------
// SINR_k = p_k * sig_k / (sum_j den(k,j) p_j + cst_k), with den folding the
// pilot-contamination term and the linear term exactly as printed (the
// j == k contribution of the second sum included).

struct CellFreeCoeffs {
  std::size_t k = 0;
  std::vector<double> sig;  // (sum_m v_mk)^2
  std::vector<double> den;  // K x K row-major, den(k, j)
  std::vector<double> cst;  // (1/rho) sum_m v_mk
};

CellFreeCoeffs cellfree_coeffs(const CellFreeInstance& inst, const std::vector<double>& v);

std::vector<double> sinr_cellfree(const CellFreeInstance& inst, const std::vector<double>& v,
                                  const std::vector<double>& p);
std::vector<double> sinr_cellfree(const CellFreeCoeffs& co, const std::vector<double>& p);

std::vector<double> rates_cellfree(const CellFreeCoeffs& co, const std::vector<double>& p);
double min_rate(const CellFreeInstance& inst, const std::vector<double>& v,
                const std::vector<double>& p);
double min_rate(const CellFreeCoeffs& co, const std::vector<double>& p);
// Log-sum-exp lower bound of the minimum rate; approaches it as beta grows.
double soft_min_rate(const CellFreeCoeffs& co, const std::vector<double>& p, double beta);

Tensor rates_cellfree_t(const CellFreeCoeffs& co, const Tensor& p);
Tensor soft_min_rate_t(const CellFreeCoeffs& co, const Tensor& p, double beta);

// ---- hybrid precoding -----------------------------------------------------

struct HybridSolution {
  CMat xrf;  // Nt x 1, unit-modulus entries
  CMat xbb;  // Ns x Nrf, ||xbb||_F^2 == Nrf*Ns/Nt
};

// Throws when the unit-modulus or norm constraints are violated.
void validate_solution(const HybridInstance& inst, const HybridSolution& s);

// Block-diagonal Nt x Nrf analog precoder holding xrf on the block pattern.
CMat reconstruct_frf(const HybridInstance& inst, const CMat& xrf);
// F_BB = Xbb^H.
CMat fbb_from_xbb(const CMat& xbb);

// sum_{i,j} |Fopt(i,j) - xrf_i * conj(xbb(j, block(i)))|^2 (indexed sum).
double hybrid_residual(const HybridInstance& inst, const HybridSolution& s);
// Same quantity through ||Fopt - F_RF F_BB||_F^2 (matrix reconstruction).
double hybrid_residual_reconstructed(const HybridInstance& inst, const HybridSolution& s);

// Tape path; xrf (Nt,1) and xbb (Ns,Nrf) complex pairs.
Tensor hybrid_residual_t(const HybridInstance& inst, const CTensor& xrf,
                         const CTensor& xbb);

struct EnergyModel {
  double p_common = 10.0;  // watts
  double p_rf = 0.1;
  double p_ps = 0.01;
  double p_pa = 0.1;
};

// R = log2 det(I + snr/Ns * H F F^H H^H) with F = F_RF F_BB.
double spectral_efficiency(const HybridInstance& inst, const HybridSolution& s);
// eta = R / (P_common + Nrf*P_rf + Nt*(P_pa + P_ps)), bit/Hz/J.
double energy_efficiency(double r, std::size_t nrf, std::size_t nt, const EnergyModel& em);

}  // namespace wgo::objectives
