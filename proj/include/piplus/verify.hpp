#pragma once

#include <cstdint>
#include <optional>

#include "piplus/bounds.hpp"
#include "piplus/pi.hpp"

namespace piplus {

struct Trajectory {
  enum class End { kAbsorbed, kHorizon, kOutOfGrid };
  std::vector<double> x0;
  std::vector<std::vector<double>> states;  // k = 0..K, including x0
  std::vector<std::vector<double>> inputs;  // one per step taken
  std::vector<double> costs;
  End end = End::kHorizon;
};

enum class SelectionMode { kDistinguished, kRandomInSet, kAdversarialMaxSigma };

// Closed-loop trajectory under the table policy (nearest-node lookup for
// off-grid states), terminated at absorption, the horizon, or grid escape.
Trajectory rollout(const Instance& instance, const Grid& grid, const PolicyTable& policy,
                   StateRef x0, int horizon, SelectionMode mode = SelectionMode::kDistinguished,
                   std::uint64_t seed = 0);

// Sum of the recorded stage costs.
double trajectory_cost(const Trajectory& traj);

struct Witness {
  std::vector<double> state;
  int iteration = -1;
  int k = -1;
};

struct CheckReport {
  std::string check;
  bool pass = true;
  double worst_violation = 0;
  Witness witness;
  std::size_t samples = 0;
};

// sigma(phi(k, x)) <= beta(sigma(x0), k) * (1 + eps) along every trajectory.
// Iteration labels (parallel to `trajectories`) mark the witness.
CheckReport check_kl_envelope(std::span<const Trajectory> trajectories, const KLBound& beta,
                              const std::function<double(StateRef)>& sigma, double eps_check,
                              std::span<const int> iteration_labels = {});

// Sandwich lower_y(sigma) <= Y <= upper_y(sigma) at every non-absorbing node.
CheckReport check_lyapunov_sandwich(const Instance& instance, const Grid& grid,
                                    const BoundBundle& bundle, const ValueTable& v,
                                    double eps_check, int iteration = -1);

// One-step decrease Y(f(x, h(x))) - Y(x) <= -alpha_y(sigma(x)) at every
// non-absorbing node, with one interpolation cell of slack.
CheckReport check_lyapunov_decrease(const Instance& instance, const Grid& grid,
                                    const BoundBundle& bundle, const ValueTable& v,
                                    const PolicyTable& policy, double eps_check,
                                    int iteration = -1);

// Explicit near-optimality: V_i - V* <= bound(sigma(x), i) + slack per node
// and iteration; optionally also the trajectory form
//   (V_i - V*)(x) <= (V_0 - V*)(phi(i, x, h*)) + slack.
CheckReport check_near_optimality(const Instance& instance, const Grid& grid,
                                  std::span<const ValueTable> trace, const ValueTable& v_star,
                                  const std::function<double(double, int)>& bound,
                                  double eps_check);

CheckReport check_near_optimality_trajectory(const Instance& instance, const Grid& grid,
                                             std::span<const ValueTable> trace,
                                             const ValueTable& v_star,
                                             const PolicyTable& h_star, double eps_check);

// Per-node monotone decrease across the trace (one interpolation cell of
// slack) plus, when v_star is supplied, a nonincreasing sup-gap probe.
CheckReport check_monotone(std::span<const ValueTable> trace, const ValueTable* v_star,
                           double eps_check);

enum class PerturbMode { kUniformRandom, kWorstCaseBallGrid };

// rho-perturbed closed loop: sample (or maximize over a ball grid)
// x~ in x + rho(x) B, take v = f(x~, policy(x~)), then the successor in
// v + rho(v) B.  rho identically zero reproduces `rollout` bit for bit.
Trajectory perturbed_rollout(const Instance& instance, const Grid& grid,
                             const PolicyTable& policy,
                             const std::function<double(StateRef)>& rho, StateRef x0, int horizon,
                             std::uint64_t seed, PerturbMode mode,
                             int ball_points_per_dim = 8);

struct RobustnessReport {
  std::vector<double> levels;      // descending ladder of constant rho
  std::vector<bool> level_pass;
  double certified_level = 0;      // largest passing level (0 when none)
  CheckReport summary;
};

// Sweeps the rho ladder: a level passes when every perturbed trajectory from
// the sampled initial set {sigma < Delta} satisfies the practical envelope
//   max{sigma - delta, 0}(phi_rho(k, x)) <= beta(sigma(x), k) * (1 + eps).
RobustnessReport check_robust_stability(const Instance& instance, const Grid& grid,
                                        const PolicyTable& policy, const KLBound& beta,
                                        std::span<const double> levels, double delta,
                                        double big_delta, int horizon, int initial_stride,
                                        double eps_check, PerturbMode mode,
                                        std::uint64_t seed = 0);

// Assumption-4 probe: evaluates J for the lowest-index, highest-index and
// n_random seeded selections of the set-valued policy and reports the largest
// node-wise spread.
CheckReport check_same_cost(const TransitionTable& t, const PolicyTable& policy, int n_random,
                            std::uint64_t seed, double tol, const DpOptions& dp);

}  // namespace piplus
