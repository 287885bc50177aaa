#include "wgo/gnn.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "wgo/rng.hpp"
#include "wgo/solvers.hpp"

namespace wgo::gnn {

using graphs::NodeType;
using nlohmann::json;
using num::Shape;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Tensor act(const Tensor& x, const std::string& tag) {
  if (tag == "relu") return num::relu(x);
  if (tag == "sigmoid") return num::sigmoid(x);
  throw std::invalid_argument("unknown activation '" + tag + "'");
}

struct TypeCounts {
  std::size_t pair = 0, ap = 0, ue = 0, antenna = 0, symbol = 0;
};

TypeCounts count_types(const CommGraph& g) {
  TypeCounts c;
  for (auto t : g.node_types) {
    switch (t) {
      case NodeType::pair: c.pair++; break;
      case NodeType::ap: c.ap++; break;
      case NodeType::ue: c.ue++; break;
      case NodeType::antenna: c.antenna++; break;
      case NodeType::symbol: c.symbol++; break;
    }
  }
  return c;
}

void require_d2d(const CommGraph& g, const char* who) {
  TypeCounts c = count_types(g);
  require(c.pair == g.n_nodes && g.d1() == 3 && g.d2() == 2,
          std::string(who) + ": needs a D2D pair graph");
}

void require_cellfree(const CommGraph& g, const char* who) {
  TypeCounts c = count_types(g);
  require(c.ap + c.ue == g.n_nodes && c.ap > 0 && c.ue > 0 && g.d2() == 1,
          std::string(who) + ": needs a cell-free bipartite graph");
}

void require_hybrid(const CommGraph& g, const char* who) {
  TypeCounts c = count_types(g);
  require(c.antenna + c.symbol == g.n_nodes && c.antenna > 0 && c.symbol > 0 && g.d2() == 2,
          std::string(who) + ": needs a hybrid precoding graph");
}

}  // namespace

double d2d_gain_feature(double gain, double sigma2) {
  return 0.25 * std::log1p(gain / sigma2);
}

double cellfree_gain_feature(double u) { return 0.25 * (std::log(u) + 27.0); }

const char* arch_name(Arch a) {
  switch (a) {
    case Arch::ecgnn: return "ecgnn";
    case Arch::pcgnn: return "pcgnn";
    case Arch::hetgnn: return "hetgnn";
    case Arch::cfpcgnn: return "cfpcgnn";
    case Arch::unrolled: return "unrolled";
    case Arch::refgnn: return "refgnn";
    case Arch::mlp: return "mlp";
  }
  return "?";
}

Arch arch_from_name(const std::string& name) {
  for (Arch a : {Arch::ecgnn, Arch::pcgnn, Arch::hetgnn, Arch::cfpcgnn, Arch::unrolled,
                 Arch::refgnn, Arch::mlp})
    if (name == arch_name(a)) return a;
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

// ---- construction ------------------------------------------------------------

namespace {

struct Builder {
  GnnModel model;
  std::uint64_t seed;

  void uniform(const std::string& name, std::size_t in, std::size_t out) {
    std::size_t fan = std::max<std::size_t>(in, 1);
    double a = 1.0 / std::sqrt(static_cast<double>(fan));
    rng::Rng r(rng::mix(seed, fnv1a(name)));
    std::vector<double> d(in * out);
    for (auto& v : d) v = r.uniform(-a, a);
    model.params.emplace(name, Tensor(Shape{in, out}, std::move(d)));
  }

  void bias(const std::string& name, std::size_t out) {
    model.params.emplace(name, Tensor::zeros(Shape{out}));
  }

  void head(std::size_t in, std::size_t outputs = 1) {
    uniform("head.w1", in, in);
    bias("head.b1", in);
    uniform("head.w2", in, outputs);
    bias("head.b2", outputs);
  }
};

}  // namespace

GnnModel make_model(Arch arch, const Hyper& hyper, std::uint64_t seed) {
  require(hyper.layers >= 1, "make_model: need at least one layer");
  require(hyper.hidden >= 1, "make_model: hidden width must be positive");
  Builder b{GnnModel{arch, hyper, {}}, seed};
  std::size_t h = hyper.hidden;
  switch (arch) {
    case Arch::ecgnn: {
      for (std::size_t t = 1; t <= hyper.layers; ++t) {
        std::size_t in = t == 1 ? 2 : h;
        std::string l = "l" + std::to_string(t);
        b.uniform(l + ".w1", in, h);
        b.uniform(l + ".w2", 1, h);
        b.uniform(l + ".w3", in, h);
      }
      b.head(h);
      break;
    }
    case Arch::pcgnn: {
      b.uniform("embed.node", 1, h);
      b.uniform("embed.edge", 2, h);
      for (std::size_t t = 1; t <= hyper.layers; ++t) {
        std::string l = "l" + std::to_string(t);
        b.uniform(l + ".w1", h, h);
        b.uniform(l + ".w2", h, h);
        b.uniform(l + ".w3", h, h);
      }
      b.head(h);
      break;
    }
    case Arch::hetgnn: {
      for (std::size_t t = 1; t <= hyper.layers; ++t) {
        std::size_t in = t == 1 ? 0 : h;
        std::string l = "l" + std::to_string(t);
        b.uniform(l + ".w1", in, h);
        b.uniform(l + ".w2", 1, h);
        b.uniform(l + ".w3", in, h);
        b.uniform(l + ".w4", 1, h);
        b.uniform(l + ".w5", in, h);
        b.uniform(l + ".w6", in, h);
      }
      b.head(h);
      break;
    }
    case Arch::cfpcgnn: {
      b.uniform("embed.w1", 1, h);
      for (std::size_t t = 2; t <= hyper.layers; ++t) {
        std::string l = "l" + std::to_string(t);
        b.uniform(l + ".w1", h, h);
        b.uniform(l + ".w2", h, h);
      }
      b.head(h);
      break;
    }
    case Arch::unrolled: {
      require(hyper.nrf >= 1, "make_model: unrolled needs nrf");
      // Start at the algorithm's mixing coefficient; the overall scale is
      // normalized away by the sphere projection.
      std::size_t nrf = hyper.nrf;
      double a = 0.01 / std::sqrt(static_cast<double>(nrf));
      for (std::size_t t = 1; t <= hyper.layers; ++t) {
        std::string l = "l" + std::to_string(t);
        rng::Rng rr(rng::mix(seed, fnv1a(l + ".w_re")));
        std::vector<double> wre(nrf * nrf), wim(nrf * nrf);
        for (auto& v : wre) v = rr.uniform(-a, a);
        for (auto& v : wim) v = rr.uniform(-a, a);
        for (std::size_t i = 0; i < nrf; ++i) wre[i * nrf + i] += 1.0;
        b.model.params.emplace(l + ".w_re", Tensor(Shape{nrf, nrf}, std::move(wre)));
        b.model.params.emplace(l + ".w_im", Tensor(Shape{nrf, nrf}, std::move(wim)));
      }
      break;
    }
    case Arch::refgnn: {
      for (std::size_t t = 1; t <= hyper.layers; ++t) {
        std::size_t prev = t == 1 ? 2 : h;
        std::string l = "l" + std::to_string(t);
        b.uniform(l + ".w1", 2 * prev + 2, h);
        b.bias(l + ".b1", h);
        b.uniform(l + ".w2", 2 + prev + h, h);
        b.bias(l + ".b2", h);
      }
      break;
    }
    case Arch::mlp:
      throw std::invalid_argument("make_model: use the mlp factories to bind input sizes");
  }
  return b.model;
}

GnnModel make_mlp_for_d2d(std::size_t k, Hyper hyper, std::uint64_t seed) {
  require(k >= 1, "make_mlp_for_d2d: K must be >= 1");
  hyper.mlp_family = "d2d";
  hyper.mlp_k = k;
  Builder b{GnnModel{Arch::mlp, hyper, {}}, seed};
  std::size_t in = 2 * k + k * k;
  std::size_t li = 0;
  for (std::size_t wspec : hyper.mlp_hidden) {
    std::string l = "l" + std::to_string(++li);
    b.uniform(l + ".w", in, wspec);
    b.bias(l + ".b", wspec);
    in = wspec;
  }
  b.uniform("out.w", in, k);
  b.bias("out.b", k);
  return b.model;
}

GnnModel make_mlp_for_hybrid(std::size_t nt, std::size_t ns, std::size_t nrf, Hyper hyper,
                             std::uint64_t seed) {
  require(nt >= 1 && ns >= 1 && nrf >= 1 && nt % nrf == 0,
          "make_mlp_for_hybrid: bad sizes");
  hyper.mlp_family = "hybrid";
  hyper.mlp_nt = nt;
  hyper.mlp_ns = ns;
  hyper.nrf = nrf;
  Builder b{GnnModel{Arch::mlp, hyper, {}}, seed};
  std::size_t in = 2 * nt * ns;
  std::size_t li = 0;
  for (std::size_t wspec : hyper.mlp_hidden) {
    std::string l = "l" + std::to_string(++li);
    b.uniform(l + ".w", in, wspec);
    b.bias(l + ".b", wspec);
    in = wspec;
  }
  b.uniform("out.w", in, 2 * nt);
  b.bias("out.b", 2 * nt);
  return b.model;
}

// ---- parameter binding ---------------------------------------------------------

const Tensor& BoundParams::at(const std::string& name) const {
  auto it = watched.find(name);
  if (it == watched.end())
    throw std::invalid_argument("model parameter '" + name + "' not found");
  return it->second;
}

BoundParams bind(const GnnModel& m, Tape* tape) {
  BoundParams bp;
  for (const auto& [name, value] : m.params)
    bp.watched.emplace(name, tape ? tape->watch(value) : value);
  return bp;
}

std::map<std::string, Tensor> param_grads(const GnnModel& m, Tape& tape,
                                          const std::map<std::string, Tensor>& watched,
                                          const Tensor& loss) {
  num::GradMap gm = tape.backward(loss);
  std::map<std::string, Tensor> out;
  for (const auto& [name, w] : watched) {
    if (gm.has(w))
      out.emplace(name, gm.wrt(w));
    else
      out.emplace(name, Tensor::zeros(m.params.at(name).shape()));
  }
  return out;
}

// ---- D2D helpers -----------------------------------------------------------

namespace {

struct D2dEdges {
  std::size_t k = 0;
  Tensor src_sel, tgt_sel;  // (E, K) selection matrices
  Tensor ef1;               // (E, 1) incoming gain feature
  Tensor ef2;               // (E, 2) incoming and reverse gain features
  Tensor node_gain;         // (K, 1) direct-link feature
  Tensor d0;                // (K, 2) [w_k, direct feature]
};

D2dEdges d2d_edges(const CommGraph& g) {
  std::size_t k = g.n_nodes, e = k * (k - 1);
  D2dEdges out;
  out.k = k;
  std::vector<double> src(e * k, 0.0), tgt(e * k, 0.0), f1(e), f2(e * 2), ng(k), d0(k * 2);
  std::size_t row = 0;
  for (std::size_t t = 0; t < k; ++t) {
    double sig_t = g.z.at(t, 2);
    for (std::size_t j = 0; j < k; ++j) {
      if (j == t) continue;
      src[row * k + j] = 1.0;
      tgt[row * k + t] = 1.0;
      f1[row] = d2d_gain_feature(g.a_at(j, t, 0), sig_t);
      f2[row * 2 + 0] = f1[row];
      f2[row * 2 + 1] = d2d_gain_feature(g.a_at(j, t, 1), g.z.at(j, 2));
      ++row;
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    ng[i] = d2d_gain_feature(g.z.at(i, 0), g.z.at(i, 2));
    d0[i * 2 + 0] = g.z.at(i, 1);
    d0[i * 2 + 1] = ng[i];
  }
  out.src_sel = Tensor(Shape{e, k}, std::move(src));
  out.tgt_sel = Tensor(Shape{e, k}, std::move(tgt));
  out.ef1 = Tensor(Shape{e, 1}, std::move(f1));
  out.ef2 = Tensor(Shape{e, 2}, std::move(f2));
  out.node_gain = Tensor(Shape{k, 1}, std::move(ng));
  out.d0 = Tensor(Shape{k, 2}, std::move(d0));
  return out;
}

Tensor mlp_head(const BoundParams& bp, const Tensor& d, const std::string& activation) {
  Tensor h1 = act(num::add(num::matmul(d, bp.at("head.w1")), bp.at("head.b1")), activation);
  Tensor out = num::add(num::matmul(h1, bp.at("head.w2")), bp.at("head.b2"));
  return num::sigmoid(num::reshape(out, {d.shape()[0]}));
}

Tensor ecgnn_impl(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require_d2d(g, "ecgnn");
  std::size_t k = g.n_nodes, h = m.hyper.hidden;
  require(k >= 2, "ecgnn: needs at least two nodes");
  D2dEdges ed = d2d_edges(g);
  Tensor d = ed.d0;
  for (std::size_t t = 1; t <= m.hyper.layers; ++t) {
    std::string l = "l" + std::to_string(t);
    Tensor srcf = num::matmul(ed.src_sel, d);
    Tensor tgtf = num::matmul(ed.tgt_sel, d);
    Tensor msg = act(num::add(num::add(num::matmul(tgtf, bp.at(l + ".w1")),
                                       num::matmul(ed.ef1, bp.at(l + ".w2"))),
                              num::matmul(srcf, bp.at(l + ".w3"))),
                     m.hyper.activation);
    Tensor agg = num::sum(num::reshape(msg, {k, k - 1, h}), 1);
    d = num::scale(agg, 1.0 / static_cast<double>(k - 1));
  }
  return mlp_head(bp, d, m.hyper.activation);
}

Tensor pcgnn_impl(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require_d2d(g, "pcgnn");
  std::size_t k = g.n_nodes, h = m.hyper.hidden;
  require(k >= 2, "pcgnn: needs at least two nodes");
  D2dEdges ed = d2d_edges(g);
  Tensor d = act(num::matmul(ed.node_gain, bp.at("embed.node")), m.hyper.activation);
  Tensor e0 = act(num::matmul(ed.ef2, bp.at("embed.edge")), m.hyper.activation);
  for (std::size_t t = 1; t <= m.hyper.layers; ++t) {
    std::string l = "l" + std::to_string(t);
    Tensor srcf = num::matmul(ed.src_sel, d);
    Tensor tgtf = num::matmul(ed.tgt_sel, d);
    Tensor msg = act(num::add(num::add(num::matmul(tgtf, bp.at(l + ".w1")),
                                       num::matmul(e0, bp.at(l + ".w2"))),
                              num::matmul(srcf, bp.at(l + ".w3"))),
                     m.hyper.activation);
    d = num::max(num::reshape(msg, {k, k - 1, h}), 1);
  }
  return mlp_head(bp, d, m.hyper.activation);
}

// ---- cell-free forwards ------------------------------------------------------

struct CellFreeFeatures {
  std::size_t m = 0, k = 0;
  Tensor ufeat;    // (M*K, 1) row-major by (ap, ue)
  Tensor ue_sums;  // (K, 1) sums of ufeat over APs
  Tensor ap_sums;  // (M, 1) sums of ufeat over UEs
};

CellFreeFeatures cellfree_features(const CommGraph& g) {
  TypeCounts c = count_types(g);
  CellFreeFeatures out;
  out.m = c.ap;
  out.k = c.ue;
  std::vector<double> uf(out.m * out.k), us(out.k, 0.0), as(out.m, 0.0);
  for (std::size_t ap = 0; ap < out.m; ++ap)
    for (std::size_t ue = 0; ue < out.k; ++ue) {
      double f = cellfree_gain_feature(g.a_at(ap, out.m + ue, 0));
      uf[ap * out.k + ue] = f;
      us[ue] += f;
      as[ap] += f;
    }
  out.ufeat = Tensor(Shape{out.m * out.k, 1}, std::move(uf));
  out.ue_sums = Tensor(Shape{out.k, 1}, std::move(us));
  out.ap_sums = Tensor(Shape{out.m, 1}, std::move(as));
  return out;
}

Tensor hetgnn_impl(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require_cellfree(g, "hetgnn");
  CellFreeFeatures cf = cellfree_features(g);
  std::size_t h = m.hyper.hidden;
  Tensor d_ue = Tensor::zeros({cf.k, 0});
  Tensor d_ap = Tensor::zeros({cf.m, 0});
  for (std::size_t t = 1; t <= m.hyper.layers; ++t) {
    std::string l = "l" + std::to_string(t);
    std::size_t in = t == 1 ? 0 : h;
    Tensor s_ap = num::reshape(num::sum(d_ap, 0), {1, in});
    Tensor s_ue = num::reshape(num::sum(d_ue, 0), {1, in});
    Tensor a_ue = num::add(num::matmul(cf.ue_sums, bp.at(l + ".w2")),
                           num::matmul(s_ap, bp.at(l + ".w1")));
    Tensor a_ap = num::add(num::matmul(cf.ap_sums, bp.at(l + ".w4")),
                           num::matmul(s_ue, bp.at(l + ".w3")));
    Tensor ue_next = act(num::add(num::matmul(d_ue, bp.at(l + ".w5")), a_ue),
                         m.hyper.activation);
    Tensor ap_next = act(num::add(num::matmul(d_ap, bp.at(l + ".w6")), a_ap),
                         m.hyper.activation);
    d_ue = ue_next;
    d_ap = ap_next;
  }
  return mlp_head(bp, d_ue, m.hyper.activation);
}

Tensor cfpcgnn_impl(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require_cellfree(g, "cfpcgnn");
  CellFreeFeatures cf = cellfree_features(g);
  std::size_t h = m.hyper.hidden;
  // Round 1: mean over APs of the embedded gains.
  Tensor r = act(num::matmul(cf.ufeat, bp.at("embed.w1")), m.hyper.activation);
  Tensor d = num::mean(num::reshape(r, {cf.m, cf.k, h}), 0);
  // Later rounds pass messages among the users only.
  for (std::size_t t = 2; t <= m.hyper.layers; ++t) {
    std::string l = "l" + std::to_string(t);
    Tensor s = num::reshape(num::sum(d, 0), {1, h});
    Tensor a = num::matmul(s, bp.at(l + ".w1"));
    d = act(num::add(num::matmul(d, bp.at(l + ".w2")), a), m.hyper.activation);
  }
  return mlp_head(bp, d, m.hyper.activation);
}

// ---- hybrid forwards -----------------------------------------------------------

struct HybridGraphView {
  std::size_t nt = 0, ns = 0;
  num::CMat fopt;
};

HybridGraphView hybrid_view(const CommGraph& g) {
  TypeCounts c = count_types(g);
  HybridGraphView v;
  v.nt = c.antenna;
  v.ns = c.symbol;
  v.fopt = num::CMat(v.nt, v.ns);
  for (std::size_t i = 0; i < v.nt; ++i)
    for (std::size_t j = 0; j < v.ns; ++j)
      v.fopt(i, j) = {g.a_at(i, v.nt + j, 0), g.a_at(i, v.nt + j, 1)};
  return v;
}

// Grouped digital direction: (Fopt^H Frf)^T as an (Ns, Nrf) tensor, from the
// Nt analog entries on the block pattern.
CTensor digital_direction(const CTensor& fopt_conj, const CTensor& xrf, std::size_t nrf,
                          std::size_t nt, std::size_t ns) {
  CTensor prod = num::ct_mul(fopt_conj, xrf);  // (Nt, Ns) * (Nt, 1)
  CTensor grouped = num::ct_sum(num::ct_reshape(prod, {nrf, nt / nrf, ns}), 1);
  return num::ct_transpose(grouped);  // (Ns, Nrf)
}

CTensor sphere_normalize(const CTensor& a, double target_sq) {
  Tensor n2 = num::ct_frob2(a);
  if (n2.item() < 1e-12)
    throw std::domain_error("hybrid forward: digital aggregate norm below 1e-12");
  Tensor fac = num::mul(Tensor::scalar(std::sqrt(target_sq)),
                        num::reciprocal(num::sqrt(n2)));
  return num::ct_scale(a, fac);
}

CTensor unit_modulus_checked(const CTensor& inblock) {
  Tensor mag2 = num::ct_abs2(inblock);
  for (std::size_t i = 0; i < mag2.size(); ++i)
    if (mag2.at(i) < 1e-24)
      throw std::domain_error("hybrid forward: analog aggregate vanished at antenna " +
                              std::to_string(i));
  return num::ct_unit_modulus(inblock);
}

HybridForward unrolled_impl(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require_hybrid(g, "unrolled");
  HybridGraphView hv = hybrid_view(g);
  std::size_t nrf = m.hyper.nrf, nt = hv.nt, ns = hv.ns;
  require(nt % nrf == 0, "unrolled: Nrf must divide the antenna count");
  double target_sq = static_cast<double>(nrf * ns) / static_cast<double>(nt);

  CTensor foptc = num::ct_constant(hv.fopt);
  CTensor fopt_conj = num::ct_conj(foptc);
  std::vector<double> mask(nt * nrf, 0.0);
  std::size_t blen = nt / nrf;
  for (std::size_t i = 0; i < nt; ++i) mask[i * nrf + i / blen] = 1.0;
  Tensor mk({nt, nrf}, mask);

  // Initial symbol states: the LS digital part for all-ones analog phases.
  num::CMat ones(nt, 1);
  for (auto& z : ones.a) z = 1.0;
  CTensor dsym = num::ct_constant(solvers::digital_ls_scaled(hv.fopt, ones, nrf));

  CTensor xrf;
  for (std::size_t t = 1; t <= m.hyper.layers; ++t) {
    std::string l = "l" + std::to_string(t);
    CTensor w{bp.at(l + ".w_re"), bp.at(l + ".w_im")};
    // Antenna update: phase of the matched digital combination.
    CTensor agg = num::ct_matmul(foptc, dsym);  // (Nt, Nrf)
    CTensor inblock{num::sum(num::mul(agg.re, mk), 1), num::sum(num::mul(agg.im, mk), 1)};
    xrf = unit_modulus_checked(num::ct_reshape(inblock, {nt, 1}));
    // Symbol update: grouped digital direction through the learned mixing,
    // then the sphere projection enforcing the power constraint.
    CTensor dir = digital_direction(fopt_conj, xrf, nrf, nt, ns);
    dsym = sphere_normalize(num::ct_matmul(dir, w), target_sq);
  }
  return {xrf, dsym};
}

Tensor mlp_d2d_impl(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require_d2d(g, "mlp");
  std::size_t k = g.n_nodes;
  require(k == m.hyper.mlp_k, "mlp: built for K=" + std::to_string(m.hyper.mlp_k) +
                                  ", got a graph with K=" + std::to_string(k));
  std::vector<double> in(2 * k + k * k);
  for (std::size_t i = 0; i < k; ++i) {
    in[2 * i + 0] = g.z.at(i, 1);
    in[2 * i + 1] = d2d_gain_feature(g.z.at(i, 0), g.z.at(i, 2));
  }
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i)
      in[2 * k + j * k + i] =
          i == j ? 0.0 : d2d_gain_feature(g.a_at(j, i, 0), g.z.at(i, 2));
  std::size_t in_len = in.size();
  Tensor x(Shape{1, in_len}, std::move(in));
  for (std::size_t li = 1; li <= m.hyper.mlp_hidden.size(); ++li) {
    std::string l = "l" + std::to_string(li);
    x = act(num::add(num::matmul(x, bp.at(l + ".w")), bp.at(l + ".b")), m.hyper.activation);
  }
  Tensor out = num::add(num::matmul(x, bp.at("out.w")), bp.at("out.b"));
  return num::sigmoid(num::reshape(out, {k}));
}

HybridForward mlp_hybrid_impl(const GnnModel& m, const BoundParams& bp,
                              const CommGraph& g) {
  require_hybrid(g, "mlp");
  HybridGraphView hv = hybrid_view(g);
  require(hv.nt == m.hyper.mlp_nt && hv.ns == m.hyper.mlp_ns,
          "mlp: built for Nt=" + std::to_string(m.hyper.mlp_nt) + ", Ns=" +
              std::to_string(m.hyper.mlp_ns) + ", got Nt=" + std::to_string(hv.nt) +
              ", Ns=" + std::to_string(hv.ns));
  std::size_t nt = hv.nt, ns = hv.ns, nrf = m.hyper.nrf;
  std::vector<double> in(2 * nt * ns);
  for (std::size_t i = 0; i < nt * ns; ++i) {
    in[2 * i + 0] = hv.fopt.a[i].real();
    in[2 * i + 1] = hv.fopt.a[i].imag();
  }
  std::size_t in_len = in.size();
  Tensor x(Shape{1, in_len}, std::move(in));
  for (std::size_t li = 1; li <= m.hyper.mlp_hidden.size(); ++li) {
    std::string l = "l" + std::to_string(li);
    x = act(num::add(num::matmul(x, bp.at(l + ".w")), bp.at(l + ".b")), m.hyper.activation);
  }
  Tensor out = num::add(num::matmul(x, bp.at("out.w")), bp.at("out.b"));  // (1, 2 Nt)
  Tensor pair = num::reshape(out, {nt, 2});
  CTensor raw{num::reshape(num::slice(pair, {0, 0}, {nt, 1}), {nt, 1}),
              num::reshape(num::slice(pair, {0, 1}, {nt, 1}), {nt, 1})};
  CTensor xrf = unit_modulus_checked(raw);
  // Digital part from the LS companion step of the analog projection.
  CTensor foptc = num::ct_constant(hv.fopt);
  CTensor dir = digital_direction(num::ct_conj(foptc), xrf, nrf, nt, ns);
  double target_sq = static_cast<double>(nrf * ns) / static_cast<double>(nt);
  CTensor xbb = sphere_normalize(dir, target_sq);
  return {xrf, xbb};
}

Tensor refgnn_impl(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require_d2d(g, "refgnn");
  std::size_t k = g.n_nodes, h = m.hyper.hidden;
  require(k >= 2, "refgnn: needs at least two nodes");
  D2dEdges ed = d2d_edges(g);
  Tensor d = ed.d0;  // (K, 2)
  for (std::size_t t = 1; t <= m.hyper.layers; ++t) {
    std::string l = "l" + std::to_string(t);
    Tensor srcf = num::matmul(ed.src_sel, d);
    Tensor tgtf = num::matmul(ed.tgt_sel, d);
    Tensor m1in = num::concat({srcf, tgtf, ed.ef2}, 1);
    Tensor msg = act(num::add(num::matmul(m1in, bp.at(l + ".w1")), bp.at(l + ".b1")),
                     m.hyper.activation);
    Tensor agg = num::sum(num::reshape(msg, {k, k - 1, h}), 1);
    Tensor m2in = num::concat({ed.d0, d, agg}, 1);
    d = act(num::add(num::matmul(m2in, bp.at(l + ".w2")), bp.at(l + ".b2")),
            m.hyper.activation);
  }
  return d;
}

}  // namespace

Tensor power_forward_bound(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  switch (m.arch) {
    case Arch::ecgnn: return ecgnn_impl(m, bp, g);
    case Arch::pcgnn: return pcgnn_impl(m, bp, g);
    case Arch::hetgnn: return hetgnn_impl(m, bp, g);
    case Arch::cfpcgnn: return cfpcgnn_impl(m, bp, g);
    case Arch::mlp:
      require(m.hyper.mlp_family == "d2d", "mlp: this model is not a power-control model");
      return mlp_d2d_impl(m, bp, g);
    default:
      throw std::invalid_argument(std::string("power_forward: architecture ") +
                                  arch_name(m.arch) + " does not produce powers");
  }
}

Tensor power_forward(const GnnModel& m, const CommGraph& g, Tape* tape) {
  BoundParams bp = bind(m, tape);
  return power_forward_bound(m, bp, g);
}

HybridForward hybrid_forward_bound(const GnnModel& m, const BoundParams& bp,
                                   const CommGraph& g) {
  if (m.arch == Arch::unrolled) return unrolled_impl(m, bp, g);
  if (m.arch == Arch::mlp && m.hyper.mlp_family == "hybrid")
    return mlp_hybrid_impl(m, bp, g);
  throw std::invalid_argument(std::string("hybrid_forward: architecture ") +
                              arch_name(m.arch) + " does not produce precoders");
}

HybridForward hybrid_forward(const GnnModel& m, const CommGraph& g, Tape* tape) {
  BoundParams bp = bind(m, tape);
  return hybrid_forward_bound(m, bp, g);
}

Tensor refgnn_forward_bound(const GnnModel& m, const BoundParams& bp, const CommGraph& g) {
  require(m.arch == Arch::refgnn, "refgnn_forward: wrong architecture");
  return refgnn_impl(m, bp, g);
}

Tensor refgnn_forward(const GnnModel& m, const CommGraph& g, Tape* tape) {
  require(m.arch == Arch::refgnn, "refgnn_forward: wrong architecture");
  BoundParams bp = bind(m, tape);
  return refgnn_impl(m, bp, g);
}

std::vector<double> power_of(const GnnModel& m, const CommGraph& g) {
  Tensor p = power_forward(m, g, nullptr);
  return {p.data().begin(), p.data().end()};
}

objectives::HybridSolution hybrid_solution_of(const GnnModel& m, const CommGraph& g) {
  HybridForward f = hybrid_forward(m, g, nullptr);
  objectives::HybridSolution s;
  s.xrf = num::to_cmat(f.xrf);
  s.xbb = num::to_cmat(f.xbb);
  return s;
}

// ---- checkpoints ----------------------------------------------------------------

std::string to_json(const GnnModel& m) {
  json j;
  j["arch"] = arch_name(m.arch);
  j["hyper"] = {{"layers", m.hyper.layers},
                {"hidden", m.hyper.hidden},
                {"activation", m.hyper.activation},
                {"nrf", m.hyper.nrf},
                {"mlp_hidden", m.hyper.mlp_hidden},
                {"mlp_family", m.hyper.mlp_family},
                {"mlp_k", m.hyper.mlp_k},
                {"mlp_nt", m.hyper.mlp_nt},
                {"mlp_ns", m.hyper.mlp_ns}};
  json params = json::object();
  for (const auto& [name, t] : m.params)
    params[name] = {{"shape", t.shape()},
                    {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  j["params"] = params;
  return j.dump();
}

GnnModel model_from_json(const std::string& text) {
  json j = json::parse(text);
  GnnModel m;
  m.arch = arch_from_name(j.at("arch").get<std::string>());
  const json& h = j.at("hyper");
  m.hyper.layers = h.at("layers").get<std::size_t>();
  m.hyper.hidden = h.at("hidden").get<std::size_t>();
  m.hyper.activation = h.at("activation").get<std::string>();
  m.hyper.nrf = h.at("nrf").get<std::size_t>();
  m.hyper.mlp_hidden = h.at("mlp_hidden").get<std::vector<std::size_t>>();
  m.hyper.mlp_family = h.at("mlp_family").get<std::string>();
  m.hyper.mlp_k = h.at("mlp_k").get<std::size_t>();
  m.hyper.mlp_nt = h.at("mlp_nt").get<std::size_t>();
  m.hyper.mlp_ns = h.at("mlp_ns").get<std::size_t>();
  for (const auto& [name, pj] : j.at("params").items())
    m.params.emplace(name, Tensor(pj.at("shape").get<Shape>(),
                                  pj.at("data").get<std::vector<double>>()));
  return m;
}

}  // namespace wgo::gnn
