#pragma once

// Synchronous distributed message passing: every round, each node encodes a
// message for each neighbor from the previous round's states, aggregates its
// incoming messages with an order-insensitive reduction, and updates its own
// state. Also the message-passing forms of WMMSE and of the Riemannian
// analog-precoder iteration, exercised against their direct implementations.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wgo/channels.hpp"
#include "wgo/graphs.hpp"
#include "wgo/solvers.hpp"

namespace wgo::dmp {

using State = std::vector<double>;
using Message = std::vector<double>;
using graphs::CommGraph;
using num::CMat;
using num::cxd;

struct DmpSpec {
  // Message from node j to node i along the edge feature A[j,i,:].
  std::function<Message(int t, const State& xj, const State& xi,
                        std::span<const double> aji)>
      encode;
  // Multiset-symmetric reduction of the incoming messages.
  std::function<Message(int t, std::vector<Message>&& msgs)> aggregate;
  // New state of node i. The node index is passed because the classic
  // updates are defined piecewise over index ranges (antennas vs symbols,
  // APs vs UEs).
  std::function<State(int t, std::size_t node, std::span<const double> zi,
                      const State& xi, const Message& agg)>
      update;
  std::function<State(std::size_t node, const CommGraph& g)> init;
  std::size_t n_rounds = 0;
  // Optional precondition on the graph (node types, feature widths).
  std::function<void(const CommGraph& g)> check_graph;
};

struct RunOptions {
  // When set, incoming message lists are shuffled per (node, round) before
  // aggregation; outputs must not change for a valid spec.
  bool shuffle = false;
  std::uint64_t shuffle_seed = 0;
  // Observer invoked after every round with the current states.
  std::function<void(std::size_t round, const std::vector<State>& states)> on_round;
};

std::vector<State> run_dmp(const DmpSpec& spec, const CommGraph& g,
                           const RunOptions& opts = {});

// ---- WMMSE as message passing ----------------------------------------------
// Hidden state [v, u, w*alpha]; one WMMSE iteration costs two rounds (odd
// rounds refresh the receive filter and MSE weight, even rounds the transmit
// amplitude). For unit weights the third slot is exactly alpha.
DmpSpec wmmse_dmp_spec(std::size_t wmmse_iters, const std::vector<double>& p_init);

// ---- Riemannian analog-precoder iteration as message passing ----------------

struct StepRule {
  enum class Kind { fixed, armijo } kind = Kind::fixed;
  double alpha = 0.1;        // fixed step, or the Armijo starting step
  double shrink = 0.5;       // Armijo backtracking factor
  double c1 = 1e-4;          // Armijo sufficient-decrease constant
  std::size_t max_backtracks = 40;

  static StepRule fixed_step(double a) { return {Kind::fixed, a, 0.5, 1e-4, 40}; }
  static StepRule armijo() { return {Kind::armijo, 1.0, 0.5, 1e-4, 40}; }
};

// Messages flow from symbol nodes to antenna nodes; symbol states hold the
// fixed digital rows and never change. Antenna states are the analog rows.
DmpSpec riemannian_dmp_spec(std::size_t rounds, const channels::HybridInstance& inst,
                            const CMat& xbb, const CMat& xrf0, StepRule rule);

// Direct (matrix-form) implementation of the same iteration; returns the
// xrf iterate after every round, index 0 being the initial point.
std::vector<CMat> riemannian_direct(const channels::HybridInstance& inst,
                                    const CMat& xbb, const CMat& xrf0,
                                    std::size_t rounds, StepRule rule);

// Antenna-node states of a DMP state vector gathered into an Nt x 1 matrix.
CMat antenna_states_to_xrf(const std::vector<State>& states, std::size_t nt,
                           std::size_t nrf, const channels::HybridInstance& inst);

}  // namespace wgo::dmp
