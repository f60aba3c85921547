#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "piplus/model.hpp"

namespace piplus {

struct DpOptions {
  double tie_tol = 1e-9;        // relative tie tolerance for argmin sets
  double eval_tol = 1e-9;       // relative sup-norm stopping tolerance for sweeps
  int max_sweeps = 5000;
  bool exact = false;           // stop only when a sweep changes nothing (tiny graphs)
  double divergence_cut = 1e13; // values beyond this are treated as divergent
  ExecMode mode = ExecMode::kParallel;
};

// Grid policy evaluation: the cost-to-go of the single-action graph induced by
// the selections of `policy`, obtained by sweeping
//   V(x) <- l(x, u) + interp(V, f(x, u))
// with absorbing states pinned at zero.  Sweeps stop once the sup-norm change
// falls below eval_tol (the running tail bound) and states still moving at
// max_sweeps are reported as +inf (no path to absorption).
ValueTable evaluate_policy(const TransitionTable& t, const PolicyTable& policy,
                           const DpOptions& opts, const ValueTable* warm_start = nullptr);

// Same evaluation for an exact policy function (no input sampling); used for
// the initial policy so certificates stated for h0 bind without quantization.
ValueTable evaluate_policy_fn(const SystemModel& model, const Grid& grid, const PolicyFn& h,
                              const DpOptions& opts, ExecMode mode = ExecMode::kParallel);

// Policy improvement: per state the set of sampled inputs whose objective
//   l(x, u) + interp(V, f(x, u))
// ties with the minimum within tie_tol * (1 + min).  States where every
// objective is infinite are reported through `infeasible`.
PolicyTable improve(const TransitionTable& t, const ValueTable& v, double tie_tol,
                    ExecMode mode, std::vector<std::size_t>* infeasible = nullptr);

// Objective of one (state, action) pair against v; +inf when unreachable.
double improvement_objective(const TransitionTable& t, const ValueTable& v, std::size_t state,
                             int action);

enum class SelectRule {
  kLowestIndex,   // deterministic default
  kAdversarial,   // highest index: takes the worst branch at the paper's tie
  kRandomInSet,   // seeded uniform pick per state
};

// Picks one selection index per state out of the tie sets.
void select_policy(PolicyTable& policy, SelectRule rule, std::uint64_t seed);

// Lower-semicontinuity diagnostic: evaluates g(u) = l(x, u) + V(f(x, u)) on a
// ladder of input grids, each `refine_factor` times denser.  A gap that stays
// put across the ladder is evidence that the improvement has no minimizer.
struct LscLadderOptions {
  int base_points_per_dim = 16363;  // chosen so u = 0 lands on the base grid
  int levels = 3;
  int refine_factor = 8;
  double stability_rtol = 0.05;     // gap counted stable when levels agree to 5%
  double gap_atol = 1e-9;
};

struct LscGapReport {
  std::vector<double> state;
  std::vector<double> inf_estimates;           // per ladder level
  std::vector<std::vector<double>> argmins;    // per ladder level
  std::vector<double> limit_input;             // extrapolated argmin limit
  double objective_at_limit = 0;
  double gap = 0;
  bool stable = false;                          // infeasibility evidence
};

using ValueFn = std::function<double(StateRef)>;

ValueFn as_value_fn(const ValueTable& table);

LscGapReport lsc_gap(const SystemModel& model, const ValueFn& v, StateRef x,
                     const LscLadderOptions& opts = {});

// One PI iterate: the evaluated cost, the set-valued improvement it came
// from, and any lsc probes taken while improving.
struct PiIterate {
  int iteration = 0;
  ValueTable value;
  PolicyTable policy;
  double sup_change = 0;
  std::vector<LscGapReport> probes;
};

struct PiRunOptions {
  int iterations = 10;
  SelectRule select = SelectRule::kLowestIndex;
  std::uint64_t seed = 0;
  double stop_tol = 0;  // > 0: stop once the sup-norm change drops below it
  std::vector<std::vector<double>> lsc_probes;
  LscLadderOptions probe_ladder;
  DpOptions dp;
};

struct PiRun {
  std::vector<PiIterate> trace;  // trace[0] holds V0 under h0
  bool feasibility_alarm = false;
  std::string alarm;             // names the state and iteration
};

PiRun run_pi(const Instance& instance, const Grid& grid, const TransitionTable& t,
             const PiRunOptions& opts);

}  // namespace piplus
