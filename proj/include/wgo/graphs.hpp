#pragma once

// Communication graphs: node feature matrix Z, adjacency feature tensor A,
// and an edge mask. Built from problem instances; immutable afterwards.
//
// Feature layout by scenario:
//   d2d:      K pair-nodes, Z = [|h_kk|^2, w_k, sigma_k^2],
//             A channel 0 = |h_jk|^2, channel 1 = |h_kj|^2 (reverse link)
//   cellfree: M ap-nodes then K ue-nodes, Z is n x 0,
//             A channel 0 holds U on the bipartite blocks
//   hybrid:   Nt antenna-nodes then Ns symbol-nodes, Z is n x 0,
//             A channels (0,1) = (re, im) of Fopt on the bipartite blocks

#include <cstdint>
#include <string>
#include <vector>

#include "wgo/channels.hpp"
#include "wgo/tensor.hpp"

namespace wgo::graphs {

enum class NodeType : std::uint8_t { pair, ap, ue, antenna, symbol };

struct CommGraph {
  std::size_t n_nodes = 0;
  std::vector<NodeType> node_types;
  num::Tensor z;  // n x d1, d1 may be 0
  num::Tensor a;  // n x n x d2
  std::vector<std::uint8_t> edge_mask;  // n*n, [from * n + to]

  bool edge(std::size_t from, std::size_t to) const {
    return edge_mask[from * n_nodes + to] != 0;
  }
  std::size_t d1() const { return z.shape()[1]; }
  std::size_t d2() const { return a.shape()[2]; }
  double a_at(std::size_t i, std::size_t j, std::size_t c) const {
    return a.at((i * n_nodes + j) * d2() + c);
  }
  std::vector<std::size_t> neighbors_of(std::size_t i) const;
};

// Throws unless the zero-off-edge invariant and no-self-edge rule hold.
void validate(const CommGraph& g);

CommGraph build_d2d_graph(const channels::D2dInstance& inst);
CommGraph build_cellfree_graph(const channels::CellFreeInstance& inst);
CommGraph build_hybrid_graph(const channels::HybridInstance& inst);

// Relabels node i to perm[i]. The permutation must map every node to a node
// of the same type.
CommGraph permute_graph(const CommGraph& g, const std::vector<std::size_t>& perm);

std::vector<std::size_t> identity_perm(std::size_t n);
std::vector<std::size_t> inverse_perm(const std::vector<std::size_t>& perm);

std::string to_json(const CommGraph& g);
CommGraph graph_from_json(const std::string& text);

}  // namespace wgo::graphs
