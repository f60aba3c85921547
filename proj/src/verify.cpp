#include "piplus/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace piplus {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double unit_double(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

int pick_input(const Instance& instance, const Grid& grid, const PolicyTable& policy,
               StateRef x, SelectionMode mode, std::mt19937_64& rng) {
  bool clamped = false;
  const std::size_t node = grid.nearest_node(x, &clamped);
  const auto set = policy.set(node);
  if (set.empty()) {
    throw FeasibilityError("rollout: policy has no admissible input", node, -1);
  }
  switch (mode) {
    case SelectionMode::kDistinguished:
      return policy.selection(node);
    case SelectionMode::kRandomInSet:
      return set[static_cast<std::size_t>(rng() % set.size())];
    case SelectionMode::kAdversarialMaxSigma: {
      int best = set.front();
      double best_sigma = -kInf;
      std::vector<double> u(grid.input_dim()), xn(grid.dim());
      const InputBox box = instance.model.admissible_inputs(x);
      for (int a : set) {
        grid.input_at(a, box, u);
        instance.model.dynamics(x, u, xn);
        const double s = instance.model.measure(xn);
        if (s > best_sigma) {
          best_sigma = s;
          best = a;
        }
      }
      return best;
    }
  }
  return set.front();
}

}  // namespace

Trajectory rollout(const Instance& instance, const Grid& grid, const PolicyTable& policy,
                   StateRef x0, int horizon, SelectionMode mode, std::uint64_t seed) {
  Trajectory traj;
  traj.x0.assign(x0.begin(), x0.end());
  std::mt19937_64 rng(seed);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> u(grid.input_dim());
  traj.states.push_back(x);
  traj.end = Trajectory::End::kHorizon;
  for (int k = 0; k < horizon; ++k) {
    if (!grid.in_bounds(x)) {
      traj.end = Trajectory::End::kOutOfGrid;
      return traj;
    }
    if (instance.model.measure(x) <= grid.sigma_abs()) {
      traj.end = Trajectory::End::kAbsorbed;
      return traj;
    }
    const int a = pick_input(instance, grid, policy, x, mode, rng);
    const InputBox box = instance.model.admissible_inputs(x);
    grid.input_at(a, box, u);
    traj.costs.push_back(stage_cost(instance.model, x, u));
    traj.inputs.push_back(u);
    x = step(instance.model, x, u);
    traj.states.push_back(x);
  }
  return traj;
}

double trajectory_cost(const Trajectory& traj) {
  double acc = 0;
  for (double c : traj.costs) acc += c;
  return acc;
}

CheckReport check_kl_envelope(std::span<const Trajectory> trajectories, const KLBound& beta,
                              const std::function<double(StateRef)>& sigma, double eps_check,
                              std::span<const int> iteration_labels) {
  CheckReport report;
  report.check = "kl_envelope";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    const double s0 = sigma(traj.x0);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      ++report.samples;
      const double lhs = sigma(traj.states[k]);
      const double rhs = beta(s0, static_cast<int>(k)) * (1.0 + eps_check);
      const double excess = lhs - rhs;
      if (excess > report.worst_violation || (!report.pass && excess > 0)) {
        if (excess > report.worst_violation) {
          report.worst_violation = excess;
          report.witness.state = traj.states[k];
          report.witness.k = static_cast<int>(k);
          report.witness.iteration =
              i < iteration_labels.size() ? iteration_labels[i] : -1;
        }
      }
      if (excess > 0) report.pass = false;
    }
  }
  return report;
}

CheckReport check_lyapunov_sandwich(const Instance& instance, const Grid& grid,
                                    const BoundBundle& bundle, const ValueTable& v,
                                    double eps_check, int iteration) {
  CheckReport report;
  report.check = "lyapunov_sandwich";
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    const double sigma = instance.model.measure(x);
    if (sigma <= grid.sigma_abs()) continue;  // sink nodes are the grid attractor
    if (!std::isfinite(v[s])) continue;
    ++report.samples;
    const double y = lyapunov_value(bundle, v[s], instance.cert.storage(x));
    const double lower = bundle.lower_y(sigma);
    const double upper = bundle.upper_y(sigma);
    const double spread = v.neighbor_spread(s);
    const double slack = bundle.rho_v(v[s] + spread) - bundle.rho_v(v[s]) +
                         eps_check * (1.0 + upper);
    const double excess = std::max(lower - y, y - upper) - slack;
    if (excess > report.worst_violation) {
      report.worst_violation = excess;
      report.witness.state = x;
      report.witness.iteration = iteration;
    }
    if (excess > 0) report.pass = false;
  }
  return report;
}

CheckReport check_lyapunov_decrease(const Instance& instance, const Grid& grid,
                                    const BoundBundle& bundle, const ValueTable& v,
                                    const PolicyTable& policy, double eps_check, int iteration) {
  CheckReport report;
  report.check = "lyapunov_decrease";
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    const double sigma = instance.model.measure(x);
    if (sigma <= grid.sigma_abs()) continue;
    if (!std::isfinite(v[s])) continue;
    const int a = policy.selection(s);
    if (a < 0) continue;
    const std::vector<double> u = input_value(instance.model, grid, x, a);
    const std::vector<double> xn = step(instance.model, x, u);
    if (!grid.in_bounds(xn)) continue;  // clamped transitions are excluded
    ++report.samples;
    double v_next = v.interpolate(xn);
    if (!std::isfinite(v_next)) {
      report.pass = false;
      report.worst_violation = kInf;
      report.witness.state = x;
      report.witness.iteration = iteration;
      continue;
    }
    const double y_x = lyapunov_value(bundle, v[s], instance.cert.storage(x));
    const double y_n = lyapunov_value(bundle, v_next, instance.cert.storage(xn));
    const double spread = v.cell_spread(xn);
    const double slack =
        bundle.rho_v(v_next + spread) - bundle.rho_v(v_next) + eps_check * (1.0 + std::abs(y_x));
    const double excess = (y_n - y_x) - (-bundle.alpha_y(sigma) + slack);
    if (excess > report.worst_violation) {
      report.worst_violation = excess;
      report.witness.state = x;
      report.witness.iteration = iteration;
    }
    if (excess > 0) report.pass = false;
  }
  return report;
}

CheckReport check_near_optimality(const Instance& instance, const Grid& grid,
                                  std::span<const ValueTable> trace, const ValueTable& v_star,
                                  const std::function<double(double, int)>& bound,
                                  double eps_check) {
  CheckReport report;
  report.check = "near_optimality_explicit";
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      if (!std::isfinite(trace[i][s]) || !std::isfinite(v_star[s])) continue;
      grid.state_at(s, x);
      const double sigma = instance.model.measure(x);
      if (sigma <= grid.sigma_abs()) continue;
      ++report.samples;
      const double gap = trace[i][s] - v_star[s];
      const double b = bound(sigma, static_cast<int>(i));
      const double slack = eps_check * (1.0 + std::abs(v_star[s])) +
                           trace[i].neighbor_spread(s) + v_star.neighbor_spread(s);
      const double excess = gap - b - slack;
      if (excess > report.worst_violation) {
        report.worst_violation = excess;
        report.witness.state = x;
        report.witness.iteration = static_cast<int>(i);
      }
      if (excess > 0) report.pass = false;
    }
  }
  return report;
}

CheckReport check_near_optimality_trajectory(const Instance& instance, const Grid& grid,
                                             std::span<const ValueTable> trace,
                                             const ValueTable& v_star,
                                             const PolicyTable& h_star, double eps_check) {
  CheckReport report;
  report.check = "near_optimality_trajectory";
  if (trace.empty()) return report;
  const ValueTable& v0 = trace.front();
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    const double sigma = instance.model.measure(x);
    if (sigma <= grid.sigma_abs()) continue;
    if (!std::isfinite(v_star[s])) continue;
    const Trajectory traj = rollout(instance, grid, h_star, x,
                                    static_cast<int>(trace.size()) - 1);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (!std::isfinite(trace[i][s])) continue;
      ++report.samples;
      const std::size_t kk = std::min<std::size_t>(i, traj.states.size() - 1);
      const auto& y = traj.states[kk];
      const double v0_y = v0.interpolate(y);
      const double vs_y = v_star.interpolate(y);
      if (!std::isfinite(v0_y) || !std::isfinite(vs_y)) continue;
      const double lhs = trace[i][s] - v_star[s];
      const double rhs = (v0_y - vs_y) + v0.cell_spread(y) + v_star.cell_spread(y) +
                         eps_check * (1.0 + std::abs(v_star[s]) + std::abs(vs_y));
      const double excess = lhs - rhs;
      if (excess > report.worst_violation) {
        report.worst_violation = excess;
        report.witness.state = x;
        report.witness.iteration = static_cast<int>(i);
      }
      if (excess > 0) report.pass = false;
    }
  }
  return report;
}

CheckReport check_monotone(std::span<const ValueTable> trace, const ValueTable* v_star,
                           double eps_check) {
  CheckReport report;
  report.check = "monotone_decrease";
  if (trace.size() < 2) return report;
  const Grid& grid = trace.front().grid();
  std::vector<double> x(grid.dim());
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const ValueTable& prev = trace[i - 1];
    const ValueTable& cur = trace[i];
    for (std::size_t s = 0; s < prev.size(); ++s) {
      if (!std::isfinite(prev[s]) || !std::isfinite(cur[s])) continue;
      ++report.samples;
      const double slack = eps_check * (1.0 + std::abs(prev[s])) + prev.neighbor_spread(s);
      const double excess = cur[s] - prev[s] - slack;
      if (excess > report.worst_violation) {
        report.worst_violation = excess;
        grid.state_at(s, x);
        report.witness.state = x;
        report.witness.iteration = static_cast<int>(i);
      }
      if (excess > 0) report.pass = false;
    }
  }
  if (v_star) {
    double prev_gap = kInf;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      double gap = 0;
      for (std::size_t s = 0; s < trace[i].size(); ++s) {
        if (std::isfinite(trace[i][s]) && std::isfinite((*v_star)[s])) {
          gap = std::max(gap, trace[i][s] - (*v_star)[s]);
        }
      }
      if (i > 0 && gap > prev_gap + eps_check * (1.0 + prev_gap)) {
        report.pass = false;
        report.worst_violation = std::max(report.worst_violation, gap - prev_gap);
        report.witness.iteration = static_cast<int>(i);
      }
      prev_gap = gap;
    }
  }
  return report;
}

Trajectory perturbed_rollout(const Instance& instance, const Grid& grid,
                             const PolicyTable& policy,
                             const std::function<double(StateRef)>& rho, StateRef x0, int horizon,
                             std::uint64_t seed, PerturbMode mode, int ball_points_per_dim) {
  Trajectory traj;
  traj.x0.assign(x0.begin(), x0.end());
  std::mt19937_64 rng(seed);
  const int dims = grid.dim();
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> u(grid.input_dim());
  traj.states.push_back(x);
  traj.end = Trajectory::End::kHorizon;

  const auto sample_ball = [&](const std::vector<double>& center, double radius,
                               std::vector<double>& out) {
    out = center;
    if (radius <= 0) return;
    for (int d = 0; d < dims; ++d) {
      out[d] = center[d] + radius * (2.0 * unit_double(rng) - 1.0);
    }
  };

  std::vector<double> x_tilde(dims), upsilon(dims), eta(dims), cand(dims), cand2(dims);
  for (int k = 0; k < horizon; ++k) {
    if (!grid.in_bounds(x)) {
      traj.end = Trajectory::End::kOutOfGrid;
      return traj;
    }
    const double r_x = rho(x);
    if (mode == PerturbMode::kUniformRandom || r_x <= 0) {
      sample_ball(x, r_x, x_tilde);
      const int a = pick_input(instance, grid, policy, x_tilde, SelectionMode::kDistinguished,
                               rng);
      const InputBox box = instance.model.admissible_inputs(x_tilde);
      grid.input_at(a, box, u);
      traj.costs.push_back(stage_cost(instance.model, x_tilde, u));
      traj.inputs.push_back(u);
      upsilon = step(instance.model, x_tilde, u);
      const double r_u = rho(upsilon);
      if (mode == PerturbMode::kUniformRandom) {
        sample_ball(upsilon, r_u, eta);
      } else {
        eta = upsilon;
      }
      x = eta;
    } else {
      // Worst case over the discretized ball: maximize sigma of the successor.
      double best_sigma = -kInf;
      std::vector<double> best_eta = x;
      std::vector<double> best_u(grid.input_dim());
      double best_cost = 0;
      for (int i = 0; i < ball_points_per_dim; ++i) {
        const double fi = ball_points_per_dim == 1
                              ? 0.0
                              : -1.0 + 2.0 * static_cast<double>(i) / (ball_points_per_dim - 1);
        for (int d = 0; d < dims; ++d) cand[d] = x[d] + r_x * fi;  // per-axis sweep, 1-D exact
        const int a =
            pick_input(instance, grid, policy, cand, SelectionMode::kDistinguished, rng);
        const InputBox box = instance.model.admissible_inputs(cand);
        grid.input_at(a, box, u);
        const std::vector<double> ups = step(instance.model, cand, u);
        const double r_u = rho(ups);
        for (int j = 0; j < ball_points_per_dim; ++j) {
          const double fj = ball_points_per_dim == 1
                                ? 0.0
                                : -1.0 + 2.0 * static_cast<double>(j) / (ball_points_per_dim - 1);
          for (int d = 0; d < dims; ++d) cand2[d] = ups[d] + r_u * fj;
          const double s = instance.model.measure(cand2);
          if (s > best_sigma) {
            best_sigma = s;
            best_eta = cand2;
            best_u = u;
            best_cost = stage_cost(instance.model, cand, u);
          }
        }
      }
      traj.costs.push_back(best_cost);
      traj.inputs.push_back(best_u);
      x = best_eta;
    }
    traj.states.push_back(x);
  }
  return traj;
}

RobustnessReport check_robust_stability(const Instance& instance, const Grid& grid,
                                        const PolicyTable& policy, const KLBound& beta,
                                        std::span<const double> levels, double delta,
                                        double big_delta, int horizon, int initial_stride,
                                        double eps_check, PerturbMode mode, std::uint64_t seed) {
  RobustnessReport report;
  report.summary.check = "robust_stability";
  const auto sigma = [&](StateRef x) { return instance.model.measure(x); };

  std::vector<std::size_t> initial_nodes;
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); s += std::max(1, initial_stride)) {
    grid.state_at(s, x);
    const double sg = sigma(x);
    if (sg < big_delta && sg > grid.sigma_abs()) initial_nodes.push_back(s);
  }

  for (double level : levels) {
    const auto rho = [level](StateRef) { return level; };
    bool level_ok = true;
    for (std::size_t node : initial_nodes) {
      grid.state_at(node, x);
      const double s0 = sigma(x);
      const Trajectory traj =
          perturbed_rollout(instance, grid, policy, rho, x, horizon, seed ^ node, mode);
      for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const double sig1 = std::max(sigma(traj.states[k]) - delta, 0.0);
        const double rhs = beta(s0, static_cast<int>(k)) * (1.0 + eps_check);
        ++report.summary.samples;
        if (sig1 > rhs) {
          level_ok = false;
          const double excess = sig1 - rhs;
          if (excess > report.summary.worst_violation) {
            report.summary.worst_violation = excess;
            report.summary.witness.state = traj.states[k];
            report.summary.witness.k = static_cast<int>(k);
          }
          break;
        }
      }
      if (!level_ok) break;
    }
    report.levels.push_back(level);
    report.level_pass.push_back(level_ok);
    if (level_ok) report.certified_level = std::max(report.certified_level, level);
  }
  report.summary.pass = std::any_of(report.level_pass.begin(), report.level_pass.end(),
                                    [](bool b) { return b; });
  return report;
}

CheckReport check_same_cost(const TransitionTable& t, const PolicyTable& policy, int n_random,
                            std::uint64_t seed, double tol, const DpOptions& dp) {
  CheckReport report;
  report.check = "same_cost";
  std::vector<ValueTable> costs;

  const auto evaluate_selection = [&](SelectRule rule, std::uint64_t s) {
    PolicyTable chosen = policy;
    select_policy(chosen, rule, s);
    costs.push_back(evaluate_policy(t, chosen, dp));
  };
  evaluate_selection(SelectRule::kLowestIndex, seed);
  evaluate_selection(SelectRule::kAdversarial, seed);
  for (int i = 0; i < n_random; ++i) {
    evaluate_selection(SelectRule::kRandomInSet, seed + 1 + i);
  }

  const Grid& grid = t.grid ? *t.grid : costs.front().grid();
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < t.states; ++s) {
    if (t.absorbing[s]) continue;
    double lo = kInf, hi = -kInf;
    bool any_inf = false;
    for (const ValueTable& c : costs) {
      if (!std::isfinite(c[s])) {
        any_inf = true;
        continue;
      }
      lo = std::min(lo, c[s]);
      hi = std::max(hi, c[s]);
    }
    ++report.samples;
    const double spread = (any_inf && hi >= lo) ? kInf : (hi >= lo ? hi - lo : 0.0);
    if (spread > report.worst_violation) {
      report.worst_violation = spread;
      grid.state_at(s, x);
      report.witness.state = x;
    }
  }
  report.pass = report.worst_violation <= tol;
  return report;
}

}  // namespace piplus
