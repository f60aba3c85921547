#pragma once

#include "piplus/pi.hpp"

namespace piplus {

// Grid approximation of the outer-semicontinuous hull of the improvement map:
// the union of H over the grid states within delta_reg of x, then closed
// under the tie rule against the objectives at x.  H(x) is always contained
// in the result.
PolicyTable regularize(const TransitionTable& t, const Grid& grid, const PolicyTable& h,
                       const ValueTable& v, double delta_reg, double tie_tol, ExecMode mode);

// Evaluation step of PI+: the optimal cost of the control problem restricted
// to the per-state action sets of hr, solved by value iteration on the
// restricted action graph.  Equals the minimum of J over all selections of
// hr.  States with no restricted path to absorption come out +inf.
ValueTable evaluate_min_selection(const TransitionTable& t, const PolicyTable& hr,
                                  const DpOptions& opts, const ValueTable* warm_start = nullptr);

// Best-selection step: minimizers of l + interp(vr, f) over hr(x), with the
// lowest surviving index as distinguished selection.
PolicyTable best_selection(const TransitionTable& t, const PolicyTable& hr, const ValueTable& vr,
                           double tie_tol, ExecMode mode);

struct PiPlusIterate {
  int iteration = 0;
  ValueTable value;          // V_r^i
  PolicyTable improved;      // H^i
  PolicyTable regularized;   // H_r^i
  PolicyTable best;          // H_r^{*,i} with its selection
  double sup_change = 0;
};

struct PiPlusRunOptions {
  int iterations = 10;
  double delta_reg = -1;  // < 0: one grid cell diameter
  double stop_tol = 0;
  DpOptions dp;
};

struct PiPlusRun {
  std::vector<PiPlusIterate> trace;  // trace[0] carries V_r^0 and {h0}
};

// Full PI+ iteration.  Non-emptiness of every improvement, regularization and
// best-selection set is asserted; a violation raises FeasibilityError naming
// the state, since on a certified instance it indicates a discretization
// artifact.
PiPlusRun run_piplus(const Instance& instance, const Grid& grid, const TransitionTable& t,
                     const PiPlusRunOptions& opts);

}  // namespace piplus
