#include "wgo/dmp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wgo/objectives.hpp"
#include "wgo/rng.hpp"

namespace wgo::dmp {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_dims_per_type(const std::vector<State>& states, const CommGraph& g,
                         std::size_t round) {
  // Dimensions must be constant across nodes of the same type.
  std::array<std::ptrdiff_t, 5> dim_of_type{-1, -1, -1, -1, -1};
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto ty = static_cast<std::size_t>(g.node_types[i]);
    auto d = static_cast<std::ptrdiff_t>(states[i].size());
    if (dim_of_type[ty] < 0) dim_of_type[ty] = d;
    if (dim_of_type[ty] != d)
      throw std::runtime_error("run_dmp: state dimension mismatch at round " +
                               std::to_string(round) + ", node " + std::to_string(i));
  }
}

}  // namespace

std::vector<State> run_dmp(const DmpSpec& spec, const CommGraph& g,
                           const RunOptions& opts) {
  require(spec.encode && spec.aggregate && spec.update && spec.init,
          "run_dmp: spec is missing a function");
  if (spec.check_graph) spec.check_graph(g);

  std::size_t n = g.n_nodes;
  std::vector<State> states(n);
  for (std::size_t i = 0; i < n; ++i) states[i] = spec.init(i, g);
  check_dims_per_type(states, g, 0);

  std::size_t d2 = g.d2();
  const double* adata = g.a.data().data();
  const double* zdata = g.z.data().data();
  std::size_t d1 = g.d1();

  std::vector<State> next(n);
  for (std::size_t t = 1; t <= spec.n_rounds; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Message> msgs;
      for (std::size_t j = 0; j < n; ++j) {
        if (!g.edge(j, i)) continue;
        std::span<const double> aji{adata + (j * n + i) * d2, d2};
        msgs.push_back(spec.encode(static_cast<int>(t), states[j], states[i], aji));
      }
      if (opts.shuffle && msgs.size() > 1) {
        rng::Rng rr(rng::mix(rng::mix(opts.shuffle_seed, t), i));
        for (std::size_t a = msgs.size(); a-- > 1;)
          std::swap(msgs[a], msgs[rr.uniform_index(a + 1)]);
      }
      // The aggregate consumes a multiset: canonicalize the representation so
      // that equal multisets produce bit-identical folds regardless of
      // arrival order.
      std::sort(msgs.begin(), msgs.end());
      Message agg = spec.aggregate(static_cast<int>(t), std::move(msgs));
      std::span<const double> zi{zdata + i * d1, d1};
      next[i] = spec.update(static_cast<int>(t), i, zi, states[i], agg);
    }
    states.swap(next);
    check_dims_per_type(states, g, t);
    if (opts.on_round) opts.on_round(t, states);
  }
  return states;
}

// ---- WMMSE ------------------------------------------------------------------

DmpSpec wmmse_dmp_spec(std::size_t wmmse_iters, const std::vector<double>& p_init) {
  DmpSpec spec;
  // Odd rounds update the transmit amplitude v, even rounds refresh the
  // receive filter u and the MSE weight; one WMMSE iteration is two rounds.
  spec.n_rounds = 2 * wmmse_iters;

  spec.check_graph = [](const CommGraph& g) {
    for (auto ty : g.node_types)
      require(ty == graphs::NodeType::pair, "wmmse dmp: needs a D2D pair graph");
    require(g.d2() == 2, "wmmse dmp: needs both gain channels");
    require(g.d1() == 3, "wmmse dmp: needs [gain, weight, noise] node features");
  };

  spec.init = [p_init](std::size_t node, const CommGraph& g) -> State {
    std::size_t n = g.n_nodes;
    require(p_init.size() == n, "wmmse dmp: init power length mismatch");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(std::sqrt(p_init[i]), 0.0, 1.0);
    double gain = g.z.at(node, 0), weight = g.z.at(node, 1), noise = g.z.at(node, 2);
    double interf = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != node) interf += g.a_at(j, node, 0) * v[j] * v[j];
    double den = (interf + gain * v[node] * v[node]) + noise;
    double u = std::sqrt(gain) * v[node] / den;
    double wa = weight / (1.0 - u * std::sqrt(gain) * v[node]);
    return {v[node], u, wa};
  };

  spec.encode = [](int t, const State& xj, const State&, std::span<const double> aji) -> Message {
    if (t % 2 == 1) return {xj[2] * xj[1] * xj[1] * aji[1]};  // (w a)_j u_j^2 |h_{i,j}|^2
    return {xj[0] * xj[0] * aji[0]};                          // v_j^2 |h_{j,i}|^2
  };

  spec.aggregate = [](int, std::vector<Message>&& msgs) -> Message {
    double s = 0;
    for (const auto& m : msgs) s += m[0];
    return {s};
  };

  spec.update = [](int t, std::size_t, std::span<const double> zi, const State& xi,
                   const Message& agg) -> State {
    double gain = zi[0], weight = zi[1], noise = zi[2];
    double v = xi[0], u = xi[1], wa = xi[2];
    if (t % 2 == 1) {
      double den = agg[0] + wa * u * u * gain;
      double vn = den > 0 ? std::clamp(wa * u * std::sqrt(gain) / den, 0.0, 1.0) : 0.0;
      return {vn, u, wa};
    }
    double den = (agg[0] + gain * v * v) + noise;
    double un = std::sqrt(gain) * v / den;
    double wan = weight / (1.0 - un * std::sqrt(gain) * v);
    return {v, un, wan};
  };
  return spec;
}

// ---- Riemannian analog-precoder iteration -------------------------------------

namespace {

struct RowStats {
  std::vector<cxd> g;   // aggregated messages (gradient direction / -2)
  double s0 = 0;        // sum |c_j|^2
  std::vector<cxd> s1;  // sum conj(c_j) conj(x_j)
  std::vector<double> s2;  // sum |x_j|^2 elementwise
};

// Shared step logic: tangent projection, retraction, and the step rule on
// the single in-block coordinate.
cxd riemannian_step(cxd xi, cxd yb, double s0, cxd s1b, double s2b, StepRule rule) {
  cxd gb = yb - std::real(yb * std::conj(xi)) * xi;
  double gn2 = std::norm(gb);
  if (rule.kind == StepRule::Kind::fixed)
    return solvers::project_unit_modulus(xi - rule.alpha * gb);
  if (gn2 < 1e-30) return xi;
  auto value_at = [&](cxd x) {
    return s0 - 2.0 * std::real(x * s1b) + std::norm(x) * s2b;
  };
  double f0 = value_at(xi);
  double alpha = rule.alpha;
  for (std::size_t bt = 0; bt < rule.max_backtracks; ++bt) {
    cxd cand = solvers::project_unit_modulus(xi - alpha * gb);
    if (value_at(cand) <= f0 - rule.c1 * alpha * gn2) return cand;
    alpha *= rule.shrink;
  }
  return xi;  // no sufficient decrease found
}

}  // namespace

DmpSpec riemannian_dmp_spec(std::size_t rounds, const channels::HybridInstance& inst,
                            const CMat& xbb, const CMat& xrf0, StepRule rule) {
  require(xbb.rows == inst.ns && xbb.cols == inst.nrf,
          "riemannian dmp: Xbb shape mismatch");
  require(xrf0.rows == inst.nt && xrf0.cols == 1, "riemannian dmp: Xrf0 shape mismatch");
  std::size_t nt = inst.nt, nrf = inst.nrf, blen = inst.block_len();

  DmpSpec spec;
  spec.n_rounds = rounds;

  spec.check_graph = [nt, ns = inst.ns](const CommGraph& g) {
    require(g.n_nodes == nt + ns, "riemannian dmp: node count mismatch");
    for (std::size_t i = 0; i < nt; ++i)
      require(g.node_types[i] == graphs::NodeType::antenna,
              "riemannian dmp: needs a hybrid precoding graph");
    for (std::size_t i = nt; i < nt + ns; ++i)
      require(g.node_types[i] == graphs::NodeType::symbol,
              "riemannian dmp: needs a hybrid precoding graph");
    require(g.d2() == 2, "riemannian dmp: needs complex edge features");
  };

  spec.init = [nt, nrf, blen, xbb, xrf0](std::size_t node, const CommGraph&) -> State {
    State s(2 * nrf, 0.0);
    if (node < nt) {
      std::size_t b = node / blen;
      s[b] = xrf0(node, 0).real();
      s[nrf + b] = xrf0(node, 0).imag();
    } else {
      for (std::size_t r = 0; r < nrf; ++r) {
        s[r] = xbb(node - nt, r).real();
        s[nrf + r] = xbb(node - nt, r).imag();
      }
    }
    return s;
  };

  spec.encode = [nrf](int, const State& xj, const State& xi,
                      std::span<const double> aji) -> Message {
    // c = A(j,i)^*; the residual message (c - x_i^T x_j^*) x_j plus the
    // sufficient statistics the line search needs.
    cxd c{aji[0], -aji[1]};
    cxd dot{0, 0};
    for (std::size_t r = 0; r < nrf; ++r)
      dot += cxd{xi[r], xi[nrf + r]} * std::conj(cxd{xj[r], xj[nrf + r]});
    cxd resid = c - dot;
    Message m(5 * nrf + 1, 0.0);
    for (std::size_t r = 0; r < nrf; ++r) {
      cxd xjr{xj[r], xj[nrf + r]};
      cxd g = resid * xjr;
      m[r] = g.real();
      m[nrf + r] = g.imag();
      cxd s1 = std::conj(c) * std::conj(xjr);
      m[2 * nrf + 1 + r] = s1.real();
      m[3 * nrf + 1 + r] = s1.imag();
      m[4 * nrf + 1 + r] = std::norm(xjr);
    }
    m[2 * nrf] = std::norm(c);
    return m;
  };

  spec.aggregate = [](int, std::vector<Message>&& msgs) -> Message {
    if (msgs.empty()) return {};
    Message out(msgs[0].size(), 0.0);
    for (const auto& m : msgs)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += m[i];
    return out;
  };

  spec.update = [nt, nrf, blen, rule](int, std::size_t node, std::span<const double>,
                                      const State& xi, const Message& agg) -> State {
    if (node >= nt || agg.empty()) return xi;  // symbol states stay fixed
    std::size_t b = node / blen;
    cxd x{xi[b], xi[nrf + b]};
    cxd yb = -2.0 * cxd{agg[b], agg[nrf + b]};
    cxd s1b{agg[2 * nrf + 1 + b], agg[3 * nrf + 1 + b]};
    double s2b = agg[4 * nrf + 1 + b];
    cxd xn = riemannian_step(x, yb, agg[2 * nrf], s1b, s2b, rule);
    State s(2 * nrf, 0.0);
    s[b] = xn.real();
    s[nrf + b] = xn.imag();
    return s;
  };
  return spec;
}

std::vector<CMat> riemannian_direct(const channels::HybridInstance& inst,
                                    const CMat& xbb, const CMat& xrf0,
                                    std::size_t rounds, StepRule rule) {
  require(xbb.rows == inst.ns && xbb.cols == inst.nrf,
          "riemannian_direct: Xbb shape mismatch");
  std::size_t nt = inst.nt, ns = inst.ns;

  std::vector<CMat> iterates;
  CMat xrf = xrf0;
  iterates.push_back(xrf);
  for (std::size_t t = 0; t < rounds; ++t) {
    CMat next(nt, 1);
    for (std::size_t k = 0; k < nt; ++k) {
      std::size_t b = inst.block_of(k);
      cxd x = xrf(k, 0);
      cxd gb{0, 0}, s1b{0, 0};
      double s0 = 0, s2b = 0;
      for (std::size_t j = 0; j < ns; ++j) {
        cxd c = inst.fopt(k, j);
        cxd resid = c - x * std::conj(xbb(j, b));
        gb += resid * xbb(j, b);
        s0 += std::norm(c);
        s1b += std::conj(c) * std::conj(xbb(j, b));
        s2b += std::norm(xbb(j, b));
      }
      next(k, 0) = riemannian_step(x, -2.0 * gb, s0, s1b, s2b, rule);
    }
    xrf = std::move(next);
    iterates.push_back(xrf);
  }
  return iterates;
}

CMat antenna_states_to_xrf(const std::vector<State>& states, std::size_t nt,
                           std::size_t nrf, const channels::HybridInstance& inst) {
  CMat xrf(nt, 1);
  for (std::size_t i = 0; i < nt; ++i) {
    std::size_t b = inst.block_of(i);
    xrf(i, 0) = {states[i][b], states[i][nrf + b]};
  }
  return xrf;
}

}  // namespace wgo::dmp
