#pragma once

// Seeded generation of the three physical scenarios: D2D interference
// channels (Gaussian and geometric), cell-free massive MIMO uplink, and
// mmWave point-to-point links for hybrid precoding.
//
// Samplers are pure functions of (config, sizes, seed). Batch generation
// derives per-sample seeds with rng::mix(master_seed, index).

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "wgo/complexmat.hpp"

namespace wgo::channels {

using num::CMat;
using num::cxd;

// ---- instance types --------------------------------------------------------

struct D2dInstance {
  std::size_t k = 0;
  CMat h;                      // K x K, h(j, i): transmitter j -> receiver i
  std::vector<double> w;       // rate weights, >= 0
  std::vector<double> sigma2;  // noise powers, > 0
  double pmax = 1.0;           // power box is [0, pmax]; fixed to 1
};

struct CellFreeInstance {
  std::size_t m = 0;       // access points
  std::size_t k = 0;       // users
  std::size_t tau = 0;     // pilot length
  std::vector<double> u;   // M x K large-scale coefficients, row-major, > 0
  CMat phi;                // tau x K pilot matrix, unit-norm columns
  double rho = 0;          // normalized SNR

  double u_at(std::size_t ap, std::size_t user) const { return u[ap * k + user]; }
};

struct HybridInstance {
  std::size_t nt = 0, nr = 0, ns = 0, nrf = 0;
  CMat h;      // Nr x Nt
  CMat fopt;   // Nt x Ns, ||fopt||_F^2 == Ns
  double snr = 1.0;  // linear

  std::size_t block_len() const { return nt / nrf; }
  // RF chain feeding antenna i (0-based): the block-diagonal column index.
  std::size_t block_of(std::size_t i) const { return i / block_len(); }
};

using ProblemInstance = std::variant<D2dInstance, CellFreeInstance, HybridInstance>;

void validate(const D2dInstance& inst);
void validate(const CellFreeInstance& inst);
void validate(const HybridInstance& inst);

// ---- samplers ---------------------------------------------------------------

struct GaussianIcConfig {
  double snr_db = 10.0;  // sets sigma^2 = 10^(-snr_db/10) with unit tx power
};

// i.i.d. CN(0,1) channels, unit weights.
D2dInstance sample_gaussian_ic(std::size_t k, std::uint64_t seed,
                               const GaussianIcConfig& cfg = {});

struct D2dGeomConfig {
  double area_m = 250.0;
  double dmin_m = 10.0;
  double dmax_m = 50.0;
  double tx_height_m = 1.5;
  double rx_height_m = 1.5;
  double carrier_ghz = 2.4;
  // Transmit power is folded into the channel gains so that the optimization
  // variable p in [0,1] scales the radiated power.
  double tx_power_dbm = 20.0;
  // Noise power over the operating bandwidth; default -94 dBm over 10 MHz.
  double noise_dbm = -94.0;
  bool rayleigh_fading = false;
  // Each link independently becomes non-line-of-sight with this probability;
  // NLoS links take an extra loss and Rayleigh fading.
  double nlos_prob = 0.0;
  double nlos_extra_loss_db = 20.0;
};

// Short-range outdoor model: free-space slope up to the breakpoint distance
// 4*h_tx*h_rx/lambda, slope 40 dB/decade beyond it.
double pathloss_db_short_range(double d_m, const D2dGeomConfig& cfg, bool nlos);

D2dInstance sample_d2d_geometric(const D2dGeomConfig& cfg, std::size_t k,
                                 std::uint64_t seed);

struct CellFreeConfig {
  double area_m = 500.0;
  std::size_t tau = 6;
  bool orthogonal_pilots = true;  // requires tau >= K
  // Normalized SNR: pilot power over thermal noise power
  // (k_B * 290K * bandwidth * noise figure).
  double pilot_power_w = 0.1;
  double bandwidth_hz = 20e6;
  double noise_figure_db = 9.0;
  // Three-slope pathloss (COST-231 Hata constant at 1.9 GHz, AP height 15 m,
  // user height 1.65 m) with log-normal shadowing beyond d1.
  double d0_m = 10.0;
  double d1_m = 50.0;
  double shadow_sigma_db = 8.0;
};

double cellfree_rho(const CellFreeConfig& cfg);
double three_slope_gain_db(double d_m, const CellFreeConfig& cfg);

CellFreeInstance sample_cellfree(const CellFreeConfig& cfg, std::size_t m,
                                 std::size_t k, std::uint64_t seed);

// v_{m,k} pilot-estimate coefficients, exactly per the printed formula:
//   v = sqrt(tau*rho)*u / (tau*rho * u * sum_{k'} |phi_k^H phi_{k'}|^2 + 1)
std::vector<double> compute_v_coeffs(const CellFreeInstance& inst);

struct MmWaveConfig {
  std::size_t n_clusters = 5;
  std::size_t n_rays = 10;
  double angular_spread_deg = 10.0;  // Laplacian ray offset scale
  double snr_db = 10.0;
};

// Clustered Saleh-Valenzuela channel with half-wavelength ULA steering
// vectors; fopt holds the Ns dominant right singular vectors (equal power
// per stream).
HybridInstance sample_mmwave(const MmWaveConfig& cfg, std::size_t nt, std::size_t nr,
                             std::size_t ns, std::size_t nrf, std::uint64_t seed);

// ---- serialization ----------------------------------------------------------
// JSON schema: shape fields plus flat row-major arrays; complex entries are
// [re, im] pairs.

std::string to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text);

}  // namespace wgo::channels
