#include "wgo/channels.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "wgo/rng.hpp"

namespace wgo::channels {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace

void validate(const D2dInstance& inst) {
  require(inst.k >= 1, "d2d instance: K must be >= 1");
  require(inst.h.rows == inst.k && inst.h.cols == inst.k, "d2d instance: H must be K x K");
  require(inst.w.size() == inst.k && inst.sigma2.size() == inst.k,
          "d2d instance: weight/noise length mismatch");
  for (const auto& v : inst.h.a)
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), "d2d instance: H not finite");
  for (double s : inst.sigma2) require(s > 0, "d2d instance: sigma^2 must be positive");
  for (double w : inst.w) require(w >= 0, "d2d instance: weights must be nonnegative");
}

void validate(const CellFreeInstance& inst) {
  require(inst.m >= 1 && inst.k >= 1 && inst.tau >= 1, "cellfree instance: empty dimension");
  require(inst.u.size() == inst.m * inst.k, "cellfree instance: U size mismatch");
  require(inst.phi.rows == inst.tau && inst.phi.cols == inst.k,
          "cellfree instance: pilot matrix must be tau x K");
  require(inst.rho > 0, "cellfree instance: rho must be positive");
  for (double v : inst.u) require(v > 0, "cellfree instance: U must be positive");
  for (std::size_t c = 0; c < inst.k; ++c) {
    double n2 = 0;
    for (std::size_t r = 0; r < inst.tau; ++r) n2 += std::norm(inst.phi(r, c));
    require(std::abs(n2 - 1.0) < 1e-9, "cellfree instance: pilot column not unit norm");
  }
}

void validate(const HybridInstance& inst) {
  require(inst.ns >= 1 && inst.ns <= inst.nrf && inst.nrf <= inst.nt,
          "hybrid instance: need Ns <= Nrf <= Nt");
  require(inst.nt % inst.nrf == 0, "hybrid instance: Nrf must divide Nt");
  require(inst.ns <= std::min(inst.nt, inst.nr), "hybrid instance: Ns exceeds min(Nt, Nr)");
  require(inst.h.rows == inst.nr && inst.h.cols == inst.nt, "hybrid instance: H must be Nr x Nt");
  require(inst.fopt.rows == inst.nt && inst.fopt.cols == inst.ns,
          "hybrid instance: Fopt must be Nt x Ns");
  require(std::abs(num::frob2(inst.fopt) - static_cast<double>(inst.ns)) < 1e-8,
          "hybrid instance: ||Fopt||_F^2 must equal Ns");
}

// ---- Gaussian interference channel -----------------------------------------

D2dInstance sample_gaussian_ic(std::size_t k, std::uint64_t seed,
                               const GaussianIcConfig& cfg) {
  require(k >= 1, "sample_gaussian_ic: K must be >= 1");
  rng::Rng r(seed);
  D2dInstance inst;
  inst.k = k;
  inst.h = CMat(k, k);
  for (auto& v : inst.h.a) v = r.cnormal();
  inst.w.assign(k, 1.0);
  inst.sigma2.assign(k, std::pow(10.0, -cfg.snr_db / 10.0));
  return inst;
}

// ---- geometric D2D ----------------------------------------------------------

double pathloss_db_short_range(double d_m, const D2dGeomConfig& cfg, bool nlos) {
  double d = std::max(d_m, 1.0);
  double lambda = 0.299792458 / cfg.carrier_ghz;  // meters
  double breakpoint = 4.0 * cfg.tx_height_m * cfg.rx_height_m / lambda;
  double pl = 32.45 + 20.0 * std::log10(cfg.carrier_ghz) +
              20.0 * std::log10(std::min(d, breakpoint));
  if (d > breakpoint) pl += 40.0 * std::log10(d / breakpoint);
  if (nlos) pl += cfg.nlos_extra_loss_db;
  return pl;
}

D2dInstance sample_d2d_geometric(const D2dGeomConfig& cfg, std::size_t k,
                                 std::uint64_t seed) {
  require(k >= 1, "sample_d2d_geometric: K must be >= 1");
  require(cfg.dmin_m > 0 && cfg.dmin_m <= cfg.dmax_m,
          "sample_d2d_geometric: need 0 < dmin <= dmax");
  require(cfg.dmax_m < cfg.area_m * M_SQRT2,
          "sample_d2d_geometric: dmax must be below the area diagonal");

  rng::Rng r(seed);
  std::vector<double> txx(k), txy(k), rxx(k), rxy(k);
  for (std::size_t i = 0; i < k; ++i) {
    txx[i] = r.uniform(0, cfg.area_m);
    txy[i] = r.uniform(0, cfg.area_m);
    double radius = r.uniform(cfg.dmin_m, cfg.dmax_m);
    double angle = r.uniform(0, 2.0 * M_PI);
    rxx[i] = txx[i] + radius * std::cos(angle);
    rxy[i] = txy[i] + radius * std::sin(angle);
  }

  double ptx = dbm_to_watt(cfg.tx_power_dbm);
  double noise = dbm_to_watt(cfg.noise_dbm);

  D2dInstance inst;
  inst.k = k;
  inst.h = CMat(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      double d = std::hypot(txx[j] - rxx[i], txy[j] - rxy[i]);
      bool nlos = cfg.nlos_prob > 0 && r.uniform() < cfg.nlos_prob;
      double gain = std::pow(10.0, -pathloss_db_short_range(d, cfg, nlos) / 10.0);
      cxd fading{1.0, 0.0};
      if (cfg.rayleigh_fading || nlos) fading = r.cnormal();
      inst.h(j, i) = std::sqrt(gain * ptx) * fading;
    }
  }
  inst.w.assign(k, 1.0);
  inst.sigma2.assign(k, noise);
  return inst;
}

// ---- cell-free --------------------------------------------------------------

double cellfree_rho(const CellFreeConfig& cfg) {
  double noise_w = 1.380649e-23 * 290.0 * cfg.bandwidth_hz *
                   std::pow(10.0, cfg.noise_figure_db / 10.0);
  return cfg.pilot_power_w / noise_w;
}

double three_slope_gain_db(double d_m, const CellFreeConfig& cfg) {
  // COST-231 Hata constant: f = 1900 MHz, AP height 15 m, user height 1.65 m.
  static const double kL = [] {
    double f = 1900.0, hap = 15.0, hu = 1.65;
    return 46.3 + 33.9 * std::log10(f) - 13.82 * std::log10(hap) -
           (1.1 * std::log10(f) - 0.7) * hu + (1.56 * std::log10(f) - 0.8);
  }();
  double d_km = std::max(d_m, 1e-3) / 1000.0;
  double d0_km = cfg.d0_m / 1000.0, d1_km = cfg.d1_m / 1000.0;
  if (d_m <= cfg.d0_m) return -kL - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d0_km);
  if (d_m <= cfg.d1_m) return -kL - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d_km);
  return -kL - 35.0 * std::log10(d_km);
}

CellFreeInstance sample_cellfree(const CellFreeConfig& cfg, std::size_t m,
                                 std::size_t k, std::uint64_t seed) {
  require(m >= 1 && k >= 1, "sample_cellfree: empty dimension");
  require(cfg.tau >= 1, "sample_cellfree: tau must be >= 1");
  require(!cfg.orthogonal_pilots || cfg.tau >= k,
          "sample_cellfree: orthogonal pilots need tau >= K");

  rng::Rng r(seed);
  std::vector<double> apx(m), apy(m);
  for (std::size_t i = 0; i < m; ++i) {
    apx[i] = r.uniform(0, cfg.area_m);
    apy[i] = r.uniform(0, cfg.area_m);
  }

  CellFreeInstance inst;
  inst.m = m;
  inst.k = k;
  inst.tau = cfg.tau;
  inst.rho = cellfree_rho(cfg);
  inst.u.resize(m * k);
  for (std::size_t uk = 0; uk < k; ++uk) {
    double ux = r.uniform(0, cfg.area_m);
    double uy = r.uniform(0, cfg.area_m);
    for (std::size_t ap = 0; ap < m; ++ap) {
      double d = std::hypot(apx[ap] - ux, apy[ap] - uy);
      double gain_db = three_slope_gain_db(d, cfg);
      if (d > cfg.d1_m) gain_db += cfg.shadow_sigma_db * r.normal();
      inst.u[ap * k + uk] = std::pow(10.0, gain_db / 10.0);
    }
  }

  inst.phi = CMat(cfg.tau, k);
  if (cfg.orthogonal_pilots) {
    for (std::size_t c = 0; c < k; ++c) inst.phi(c, c) = 1.0;
  } else {
    for (std::size_t c = 0; c < k; ++c) {
      double n2 = 0;
      for (std::size_t t = 0; t < cfg.tau; ++t) {
        inst.phi(t, c) = r.cnormal();
        n2 += std::norm(inst.phi(t, c));
      }
      double inv = 1.0 / std::sqrt(n2);
      for (std::size_t t = 0; t < cfg.tau; ++t) inst.phi(t, c) *= inv;
    }
  }
  return inst;
}

std::vector<double> compute_v_coeffs(const CellFreeInstance& inst) {
  validate(inst);
  std::size_t m = inst.m, k = inst.k;
  // pil(a, b) = |phi_a^H phi_b|^2
  std::vector<double> pil(k * k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      cxd dot{0, 0};
      for (std::size_t t = 0; t < inst.tau; ++t)
        dot += std::conj(inst.phi(t, a)) * inst.phi(t, b);
      pil[a * k + b] = std::norm(dot);
    }
  double trho = static_cast<double>(inst.tau) * inst.rho;
  std::vector<double> v(m * k);
  for (std::size_t ap = 0; ap < m; ++ap)
    for (std::size_t uk = 0; uk < k; ++uk) {
      double u = inst.u_at(ap, uk);
      double pilsum = 0;
      for (std::size_t kp = 0; kp < k; ++kp) pilsum += pil[uk * k + kp];
      v[ap * k + uk] = std::sqrt(trho) * u / (trho * u * pilsum + 1.0);
    }
  return v;
}

// ---- mmWave -----------------------------------------------------------------

namespace {

// Half-wavelength ULA steering vector, 1/sqrt(n) normalized.
void steering(std::size_t n, double theta, std::vector<cxd>& out) {
  out.resize(n);
  double inv = 1.0 / std::sqrt(static_cast<double>(n));
  double s = std::sin(theta);
  for (std::size_t i = 0; i < n; ++i) {
    double phase = M_PI * static_cast<double>(i) * s;
    out[i] = cxd{std::cos(phase), std::sin(phase)} * inv;
  }
}

double laplacian(rng::Rng& r, double scale) {
  double u = r.uniform() - 0.5;
  double s = u >= 0 ? 1.0 : -1.0;
  return -scale * s * std::log(1.0 - 2.0 * std::abs(u));
}

}  // namespace

HybridInstance sample_mmwave(const MmWaveConfig& cfg, std::size_t nt, std::size_t nr,
                             std::size_t ns, std::size_t nrf, std::uint64_t seed) {
  require(ns <= std::min(nt, nr), "sample_mmwave: Ns exceeds min(Nt, Nr)");
  require(ns >= 1 && ns <= nrf && nrf <= nt, "sample_mmwave: need 1 <= Ns <= Nrf <= Nt");
  require(nt % nrf == 0, "sample_mmwave: Nrf must divide Nt, got Nt=" + std::to_string(nt) +
                             " Nrf=" + std::to_string(nrf));

  rng::Rng r(seed);
  HybridInstance inst;
  inst.nt = nt;
  inst.nr = nr;
  inst.ns = ns;
  inst.nrf = nrf;
  inst.snr = std::pow(10.0, cfg.snr_db / 10.0);
  inst.h = CMat(nr, nt);

  double spread = cfg.angular_spread_deg * M_PI / 180.0;
  double norm = std::sqrt(static_cast<double>(nt * nr) /
                          static_cast<double>(cfg.n_clusters * cfg.n_rays));
  std::vector<cxd> at, ar;
  for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
    double mt = r.uniform(0, 2.0 * M_PI);
    double mr = r.uniform(0, 2.0 * M_PI);
    for (std::size_t l = 0; l < cfg.n_rays; ++l) {
      cxd alpha = r.cnormal();
      steering(nt, mt + laplacian(r, spread), at);
      steering(nr, mr + laplacian(r, spread), ar);
      for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nt; ++j)
          inst.h(i, j) += norm * alpha * ar[i] * std::conj(at[j]);
    }
  }

  std::vector<double> sigma;
  num::top_right_singular(inst.h, ns, sigma, inst.fopt);
  return inst;
}

// ---- serialization ----------------------------------------------------------

namespace {

json cmat_to_json(const CMat& m) {
  json arr = json::array();
  for (const auto& v : m.a) arr.push_back({v.real(), v.imag()});
  return json{{"shape", {m.rows, m.cols}}, {"data", arr}};
}

CMat cmat_from_json(const json& j) {
  CMat m(j["shape"][0].get<std::size_t>(), j["shape"][1].get<std::size_t>());
  const auto& arr = j["data"];
  if (arr.size() != m.a.size()) fail("instance json: complex array size mismatch");
  for (std::size_t i = 0; i < m.a.size(); ++i)
    m.a[i] = {arr[i][0].get<double>(), arr[i][1].get<double>()};
  return m;
}

}  // namespace

std::string to_json(const ProblemInstance& inst) {
  json j;
  if (const auto* d = std::get_if<D2dInstance>(&inst)) {
    j["type"] = "d2d";
    j["k"] = d->k;
    j["h"] = cmat_to_json(d->h);
    j["w"] = d->w;
    j["sigma2"] = d->sigma2;
    j["pmax"] = d->pmax;
  } else if (const auto* c = std::get_if<CellFreeInstance>(&inst)) {
    j["type"] = "cellfree";
    j["m"] = c->m;
    j["k"] = c->k;
    j["tau"] = c->tau;
    j["u"] = c->u;
    j["phi"] = cmat_to_json(c->phi);
    j["rho"] = c->rho;
  } else {
    const auto& hb = std::get<HybridInstance>(inst);
    j["type"] = "hybrid";
    j["nt"] = hb.nt;
    j["nr"] = hb.nr;
    j["ns"] = hb.ns;
    j["nrf"] = hb.nrf;
    j["h"] = cmat_to_json(hb.h);
    j["fopt"] = cmat_to_json(hb.fopt);
    j["snr"] = hb.snr;
  }
  return j.dump();
}

ProblemInstance instance_from_json(const std::string& text) {
  json j = json::parse(text);
  std::string type = j.at("type").get<std::string>();
  if (type == "d2d") {
    D2dInstance d;
    d.k = j.at("k").get<std::size_t>();
    d.h = cmat_from_json(j.at("h"));
    d.w = j.at("w").get<std::vector<double>>();
    d.sigma2 = j.at("sigma2").get<std::vector<double>>();
    d.pmax = j.at("pmax").get<double>();
    validate(d);
    return d;
  }
  if (type == "cellfree") {
    CellFreeInstance c;
    c.m = j.at("m").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    c.tau = j.at("tau").get<std::size_t>();
    c.u = j.at("u").get<std::vector<double>>();
    c.phi = cmat_from_json(j.at("phi"));
    c.rho = j.at("rho").get<double>();
    validate(c);
    return c;
  }
  if (type == "hybrid") {
    HybridInstance h;
    h.nt = j.at("nt").get<std::size_t>();
    h.nr = j.at("nr").get<std::size_t>();
    h.ns = j.at("ns").get<std::size_t>();
    h.nrf = j.at("nrf").get<std::size_t>();
    h.h = cmat_from_json(j.at("h"));
    h.fopt = cmat_from_json(j.at("fopt"));
    h.snr = j.at("snr").get<double>();
    validate(h);
    return h;
  }
  fail("instance json: unknown type '" + type + "'");
}

}  // namespace wgo::channels
