#pragma once

#include <cstdint>

#include "piplus/pi.hpp"

namespace piplus {

struct OracleResult {
  ValueTable v_star;
  PolicyTable h_star;  // tie sets with lowest-index selections
  int sweeps = 0;
  double final_change = 0;
  bool converged = false;
};

// Full-action value iteration from zero, absorbing states pinned.  The result
// satisfies the Bellman residual bound |V(x) - min_a {l + interp(V, f)}| <=
// eval_tol * (1 + V(x)) on every finite node.
OracleResult value_iteration(const TransitionTable& t, const DpOptions& opts);

double bellman_residual(const TransitionTable& t, const ValueTable& v);

// Scalar discrete-time Riccati fixed point p = q + a^2 p - (a b p)^2 / (r + b^2 p).
double riccati_lq(double a, double b, double q, double r, double tol = 1e-12,
                  int max_iter = 100000);
double riccati_gain(double a, double b, double r, double p);

// Enumerates every stationary policy of a degenerate (node-to-node) grid
// problem and returns the pointwise-minimal cost with all minimizing actions
// per state.  Exact: evaluation walks the policy graph, so the values agree
// bit-for-bit with exact-mode value iteration.  Throws BudgetError when the
// policy count exceeds `budget` and ModelError when transitions interpolate.
OracleResult exhaustive_policy_search(const TransitionTable& t, double tie_tol,
                                      std::size_t budget = std::size_t{1} << 22);

// Pointwise minimum of J over every selection of the restricted sets; the
// brute-force oracle for the PI+ evaluation step on tiny instances.
ValueTable min_over_selections_bruteforce(const TransitionTable& t, const PolicyTable& hr,
                                          std::size_t budget = std::size_t{1} << 22);

// Exact cost of one stationary policy on a degenerate problem (graph walk,
// +inf on cycles).
ValueTable policy_cost_exact(const TransitionTable& t, const PolicyTable& policy);

// Random solvable instance with <= max_states states and <= max_actions
// actions: action 0 always steps toward the absorbing state 0.
Instance random_tiny_instance(std::uint64_t seed, int max_states = 6, int max_actions = 4);

}  // namespace piplus
