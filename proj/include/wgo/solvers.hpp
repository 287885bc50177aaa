#pragma once

// Classic optimization baselines: WMMSE for D2D weighted sum rate,
// best-of-restarts WMMSE, max-min bisection for cell-free power control, and
// alternating minimization for partially connected hybrid precoding.

#include <cstdint>
#include <vector>

#include "wgo/channels.hpp"
#include "wgo/objectives.hpp"

namespace wgo::solvers {

using channels::CellFreeInstance;
using channels::D2dInstance;
using channels::HybridInstance;
using num::CMat;
using num::cxd;
using objectives::HybridSolution;

struct SolverReport {
  std::vector<double> p;    // power problems
  HybridSolution hybrid;    // hybrid precoding
  std::vector<double> trace;  // objective per iteration, including the initial point
  std::size_t iterations = 0;
  double wall_time_s = 0;
};

struct WmmseOptions {
  std::size_t max_iters = 100;
  double rate_tol = 1e-8;  // early stop when the rate change drops below this; 0 disables
};

// Block-coordinate WMMSE; p = v^2, trace holds the weighted sum rate.
SolverReport wmmse(const D2dInstance& inst, const std::vector<double>& init,
                   const WmmseOptions& opt = {});

// The v iterates of the first `iters` WMMSE iterations (index 0 = initial v),
// with no early stopping. Used by the message-passing equivalence checks.
std::vector<std::vector<double>> wmmse_v_iterates(const D2dInstance& inst,
                                                  const std::vector<double>& init,
                                                  std::size_t iters);

// n_init independent uniform restarts, returns the best-sum-rate run.
SolverReport best_of_restarts(const D2dInstance& inst, std::size_t n_init,
                              std::uint64_t seed, const WmmseOptions& opt = {});

// Max-min power control by bisection over the target SINR; the feasibility
// subproblem runs the standard fixed-point iteration clipped to the box.
// Returns p achieving a min rate within tol of the supremum.
SolverReport maxmin_bisection(const CellFreeInstance& inst, double tol);

// Digital LS step (Nrf/Nt) Frf^H Fopt on X coordinates, rescaled to meet
// ||Frf Fbb||_F^2 = Ns. fopt is Nt x Ns, xrf is Nt x 1 on the block pattern.
CMat digital_ls_scaled(const CMat& fopt, const CMat& xrf, std::size_t nrf);

// One alternation: analog step F_RF = P_X(Fopt Fbb^H) on the block pattern,
// then the least-squares digital step with the global power rescale.
HybridSolution altmin_iterate(const HybridInstance& inst, const CMat& xbb);

struct AltminOptions {
  std::size_t max_iters = 100;
  double residual_tol = 0;  // early stop when the residual improvement drops below this
  std::uint64_t init_seed = 0;  // 0: all-ones initial phases; else seeded random phases
};

SolverReport hybrid_altmin(const HybridInstance& inst, const AltminOptions& opt = {});

// Initial feasible solution used by both the solver and the unrolled model:
// analog phases (all ones by default), digital part from the LS step.
HybridSolution altmin_initial(const HybridInstance& inst, std::uint64_t init_seed = 0);

// z / |z| with the 0 -> 1+0i convention.
cxd project_unit_modulus(cxd z);

}  // namespace wgo::solvers
