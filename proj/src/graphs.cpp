#include "wgo/graphs.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace wgo::graphs {

using nlohmann::json;
using num::Shape;
using num::Tensor;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::vector<std::size_t> CommGraph::neighbors_of(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_nodes; ++j)
    if (edge(j, i)) out.push_back(j);
  return out;
}

void validate(const CommGraph& g) {
  std::size_t n = g.n_nodes;
  require(g.node_types.size() == n, "graph: node_types length mismatch");
  require(g.z.shape()[0] == n, "graph: Z row count mismatch");
  require(g.a.shape()[0] == n && g.a.shape()[1] == n, "graph: A leading dims mismatch");
  require(g.edge_mask.size() == n * n, "graph: edge mask size mismatch");
  std::size_t d2 = g.d2();
  for (std::size_t i = 0; i < n; ++i) {
    require(!g.edge(i, i), "graph: self edge at node " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (g.edge(i, j)) continue;
      for (std::size_t c = 0; c < d2; ++c)
        require(g.a_at(i, j, c) == 0.0,
                "graph: nonzero adjacency feature on non-edge (" + std::to_string(i) +
                    "," + std::to_string(j) + ")");
    }
  }
}

CommGraph build_d2d_graph(const channels::D2dInstance& inst) {
  channels::validate(inst);
  std::size_t k = inst.k;
  CommGraph g;
  g.n_nodes = k;
  g.node_types.assign(k, NodeType::pair);

  std::vector<double> z(k * 3);
  for (std::size_t i = 0; i < k; ++i) {
    z[i * 3 + 0] = std::norm(inst.h(i, i));
    z[i * 3 + 1] = inst.w[i];
    z[i * 3 + 2] = inst.sigma2[i];
  }
  g.z = Tensor(Shape{k, 3}, std::move(z));

  std::vector<double> a(k * k * 2, 0.0);
  g.edge_mask.assign(k * k, 0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) {
      if (i == j) continue;
      a[(j * k + i) * 2 + 0] = std::norm(inst.h(j, i));
      a[(j * k + i) * 2 + 1] = std::norm(inst.h(i, j));
      g.edge_mask[j * k + i] = 1;
    }
  g.a = Tensor(Shape{k, k, 2}, std::move(a));
  return g;
}

CommGraph build_cellfree_graph(const channels::CellFreeInstance& inst) {
  channels::validate(inst);
  std::size_t m = inst.m, k = inst.k, n = m + k;
  CommGraph g;
  g.n_nodes = n;
  g.node_types.assign(m, NodeType::ap);
  g.node_types.insert(g.node_types.end(), k, NodeType::ue);
  g.z = Tensor(Shape{n, 0}, {});

  std::vector<double> a(n * n, 0.0);
  g.edge_mask.assign(n * n, 0);
  for (std::size_t ap = 0; ap < m; ++ap)
    for (std::size_t ue = 0; ue < k; ++ue) {
      double u = inst.u_at(ap, ue);
      a[ap * n + (m + ue)] = u;
      a[(m + ue) * n + ap] = u;
      g.edge_mask[ap * n + (m + ue)] = 1;
      g.edge_mask[(m + ue) * n + ap] = 1;
    }
  g.a = Tensor(Shape{n, n, 1}, std::move(a));
  return g;
}

CommGraph build_hybrid_graph(const channels::HybridInstance& inst) {
  channels::validate(inst);
  std::size_t nt = inst.nt, ns = inst.ns, n = nt + ns;
  CommGraph g;
  g.n_nodes = n;
  g.node_types.assign(nt, NodeType::antenna);
  g.node_types.insert(g.node_types.end(), ns, NodeType::symbol);
  g.z = Tensor(Shape{n, 0}, {});

  std::vector<double> a(n * n * 2, 0.0);
  g.edge_mask.assign(n * n, 0);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < ns; ++j) {
      num::cxd f = inst.fopt(i, j);
      a[(i * n + (nt + j)) * 2 + 0] = f.real();
      a[(i * n + (nt + j)) * 2 + 1] = f.imag();
      a[((nt + j) * n + i) * 2 + 0] = f.real();
      a[((nt + j) * n + i) * 2 + 1] = -f.imag();
      g.edge_mask[i * n + (nt + j)] = 1;
      g.edge_mask[(nt + j) * n + i] = 1;
    }
  g.a = Tensor(Shape{n, n, 2}, std::move(a));
  return g;
}

std::vector<std::size_t> identity_perm(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

std::vector<std::size_t> inverse_perm(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

CommGraph permute_graph(const CommGraph& g, const std::vector<std::size_t>& perm) {
  std::size_t n = g.n_nodes;
  require(perm.size() == n, "permute_graph: permutation length mismatch");
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    require(perm[i] < n && !seen[perm[i]], "permute_graph: not a permutation");
    seen[perm[i]] = true;
    require(g.node_types[i] == g.node_types[perm[i]],
            "permute_graph: permutation mixes node types at node " + std::to_string(i));
  }

  CommGraph out;
  out.n_nodes = n;
  out.node_types = g.node_types;
  std::size_t d1 = g.d1(), d2 = g.d2();

  std::vector<double> z(n * d1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d1; ++c) z[perm[i] * d1 + c] = g.z.at(i * d1 + c);
  out.z = Tensor(Shape{n, d1}, std::move(z));

  std::vector<double> a(n * n * d2);
  out.edge_mask.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.edge_mask[perm[i] * n + perm[j]] = g.edge_mask[i * n + j];
      for (std::size_t c = 0; c < d2; ++c)
        a[(perm[i] * n + perm[j]) * d2 + c] = g.a_at(i, j, c);
    }
  out.a = Tensor(Shape{n, n, d2}, std::move(a));
  return out;
}

std::string to_json(const CommGraph& g) {
  json j;
  j["n_nodes"] = g.n_nodes;
  std::vector<int> types;
  for (NodeType t : g.node_types) types.push_back(static_cast<int>(t));
  j["node_types"] = types;
  j["z"] = {{"shape", g.z.shape()}, {"data", std::vector<double>(g.z.data().begin(), g.z.data().end())}};
  j["a"] = {{"shape", g.a.shape()}, {"data", std::vector<double>(g.a.data().begin(), g.a.data().end())}};
  j["edge_mask"] = g.edge_mask;
  return j.dump();
}

CommGraph graph_from_json(const std::string& text) {
  json j = json::parse(text);
  CommGraph g;
  g.n_nodes = j.at("n_nodes").get<std::size_t>();
  for (int t : j.at("node_types").get<std::vector<int>>())
    g.node_types.push_back(static_cast<NodeType>(t));
  g.z = Tensor(j["z"]["shape"].get<Shape>(), j["z"]["data"].get<std::vector<double>>());
  g.a = Tensor(j["a"]["shape"].get<Shape>(), j["a"]["data"].get<std::vector<double>>());
  g.edge_mask = j.at("edge_mask").get<std::vector<std::uint8_t>>();
  validate(g);
  return g;
}

}  // namespace wgo::graphs
