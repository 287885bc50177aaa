#pragma once

// Learned architectures: edge-convolution and max-aggregation GNNs for D2D
// power control, the heterogeneous and simplified bipartite GNNs for
// cell-free power control, the unrolled hybrid-precoding network, the generic
// aggregate/combine reference GNN, and the flattened-input MLP baseline.
//
// All models consume a CommGraph (feature transforms are part of the model),
// produce feasible outputs by construction, and are permutation-equivariant
// within node types (the MLP intentionally is not). Parameter shapes are
// independent of the graph size for every GNN; the MLP binds its input
// layout at construction.

#include <cstdint>
#include <map>
#include <string>

#include "wgo/channels.hpp"
#include "wgo/complexmat.hpp"
#include "wgo/graphs.hpp"
#include "wgo/objectives.hpp"
#include "wgo/tensor.hpp"

namespace wgo::gnn {

using graphs::CommGraph;
using num::CTensor;
using num::Tape;
using num::Tensor;

enum class Arch { ecgnn, pcgnn, hetgnn, cfpcgnn, unrolled, refgnn, mlp };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);

struct Hyper {
  std::size_t layers = 2;     // message passing rounds / unrolled iterations
  std::size_t hidden = 32;    // hidden width
  std::string activation = "relu";
  std::size_t nrf = 4;        // unrolled: RF chain count
  std::vector<std::size_t> mlp_hidden = {128, 128};
  // mlp input binding, set by the factory
  std::string mlp_family;     // "d2d" or "hybrid"
  std::size_t mlp_k = 0;      // d2d: pair count
  std::size_t mlp_nt = 0, mlp_ns = 0;  // hybrid: antenna / stream counts
};

struct GnnModel {
  Arch arch = Arch::ecgnn;
  Hyper hyper;
  std::map<std::string, Tensor> params;  // ordered: deterministic traversal
};

// Parameters are initialized uniform(-a, a), a = 1/sqrt(fan_in); the
// unrolled weights start at the algorithm's coefficient (Nrf/Nt) I plus
// small noise.
GnnModel make_model(Arch arch, const Hyper& hyper, std::uint64_t seed);
GnnModel make_mlp_for_d2d(std::size_t k, Hyper hyper, std::uint64_t seed);
GnnModel make_mlp_for_hybrid(std::size_t nt, std::size_t ns, std::size_t nrf, Hyper hyper,
                             std::uint64_t seed);

// ---- forward passes --------------------------------------------------------
// With a tape, parameters are watched and the output participates in
// backward; with tape == nullptr this is plain evaluation.

// Power-control forwards (ecgnn, pcgnn, hetgnn, cfpcgnn, mlp on d2d);
// returns a (K) tensor in [0,1].
Tensor power_forward(const GnnModel& m, const CommGraph& g, Tape* tape);

struct HybridForward {
  CTensor xrf;  // (Nt, 1), unit modulus
  CTensor xbb;  // (Ns, Nrf), Frobenius norm fixed by the sphere projection
};
HybridForward hybrid_forward(const GnnModel& m, const CommGraph& g, Tape* tape);

// Generic aggregate/combine network; returns the final node states (n, hidden).
Tensor refgnn_forward(const GnnModel& m, const CommGraph& g, Tape* tape);

// Gradients of the loss with respect to every parameter, keyed like params.
// Parameters that do not influence the loss get zero gradients.
std::map<std::string, Tensor> param_grads(const GnnModel& m, Tape& tape,
                                          const std::map<std::string, Tensor>& watched,
                                          const Tensor& loss);

// Convenience plain-evaluation wrappers.
std::vector<double> power_of(const GnnModel& m, const CommGraph& g);
objectives::HybridSolution hybrid_solution_of(const GnnModel& m, const CommGraph& g);

// The watched-parameter view used by forwards; exposed for training.
struct BoundParams {
  std::map<std::string, Tensor> watched;
  const Tensor& at(const std::string& name) const;
};
BoundParams bind(const GnnModel& m, Tape* tape);

// Forward passes that reuse an existing binding (one tape, many calls).
Tensor power_forward_bound(const GnnModel& m, const BoundParams& bp, const CommGraph& g);
HybridForward hybrid_forward_bound(const GnnModel& m, const BoundParams& bp,
                                   const CommGraph& g);
Tensor refgnn_forward_bound(const GnnModel& m, const BoundParams& bp, const CommGraph& g);

// ---- checkpoints -------------------------------------------------------------

std::string to_json(const GnnModel& m);
GnnModel model_from_json(const std::string& text);

// Feature transforms shared by the models and their oracle tests.
double d2d_gain_feature(double gain, double sigma2);  // ln(1 + g/sigma^2)/4
double cellfree_gain_feature(double u);               // (ln u + 27)/4

}  // namespace wgo::gnn
