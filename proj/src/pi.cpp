#include "piplus/pi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace piplus {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_objective(const TransitionTable& t, std::span<const double> v, std::size_t row) {
  double acc = t.cost[row];
  const std::size_t base = row * t.corners;
  for (int c = 0; c < t.corners; ++c) {
    const double w = t.weight[base + c];
    if (w == 0) continue;
    const double val = v[t.corner[base + c]];
    if (!std::isfinite(val)) return kInf;
    acc += w * val;
  }
  return acc;
}

struct SweepRows {
  // One action per state, already resolved to a transition row index.
  std::vector<std::size_t> row;
};

// Synchronous sweeps of V <- cost + interp(V, next) until the sup-norm change
// settles.  Deterministic regardless of the execution mode: each state writes
// only its own slot and the reduction is a plain max.
ValueTable sweep_fixed_point(const TransitionTable& t, const SweepRows& rows,
                             const DpOptions& opts, const ValueTable* warm_start) {
  ValueTable v = warm_start ? *warm_start : ValueTable(t.grid, 0.0);
  ValueTable next(t.grid, 0.0);
  std::vector<double> change(t.states, 0.0);

  int sweep = 0;
  bool settled = false;
  for (; sweep < opts.max_sweeps; ++sweep) {
    auto vin = v.values();
    parallel_for(t.states, opts.mode, [&](std::size_t s) {
      if (t.absorbing[s]) {
        next[s] = 0.0;
        change[s] = std::isfinite(vin[s]) ? std::abs(vin[s]) : kInf;
        return;
      }
      const double val = row_objective(t, vin, rows.row[s]);
      next[s] = val;
      if (std::isfinite(val) && std::isfinite(vin[s])) {
        change[s] = std::abs(val - vin[s]);
      } else if (std::isfinite(val) == std::isfinite(vin[s])) {
        change[s] = 0.0;
      } else {
        change[s] = kInf;
      }
    });
    double sup_change = 0;
    double sup_v = 0;
    for (std::size_t s = 0; s < t.states; ++s) {
      sup_change = std::max(sup_change, change[s]);
      if (std::isfinite(next[s])) sup_v = std::max(sup_v, next[s]);
    }
    std::swap(v, next);
    if (opts.exact ? sup_change == 0.0 : sup_change <= opts.eval_tol * (1.0 + sup_v)) {
      settled = true;
      ++sweep;
      break;
    }
  }
  if (!settled) {
    // States still moving never reach absorption: their cost diverges.
    for (std::size_t s = 0; s < t.states; ++s) {
      if (change[s] > opts.eval_tol * (1.0 + std::abs(v[s])) || v[s] > opts.divergence_cut) {
        v[s] = kInf;
      }
    }
  } else {
    for (std::size_t s = 0; s < t.states; ++s) {
      if (v[s] > opts.divergence_cut) v[s] = kInf;
    }
  }
  return v;
}

}  // namespace

ValueTable evaluate_policy(const TransitionTable& t, const PolicyTable& policy,
                           const DpOptions& opts, const ValueTable* warm_start) {
  SweepRows rows;
  rows.row.resize(t.states);
  for (std::size_t s = 0; s < t.states; ++s) {
    const int a = policy.selection(s);
    if (a < 0) throw FeasibilityError("evaluate_policy: state without a selection", s, -1);
    rows.row[s] = t.row(s, a);
  }
  return sweep_fixed_point(t, rows, opts, warm_start);
}

ValueTable evaluate_policy_fn(const SystemModel& model, const Grid& grid, const PolicyFn& h,
                              const DpOptions& opts, ExecMode mode) {
  // Build single-action rows from the exact policy values.
  TransitionTable t;
  t.grid = &grid;
  t.states = grid.num_states();
  t.actions = 1;
  t.corners = 1 << grid.dim();
  t.cost.assign(t.states, 0.0);
  t.corner.assign(t.states * t.corners, 0);
  t.weight.assign(t.states * t.corners, 0.0);
  t.clamped.assign(t.states, 0);
  t.absorbing.assign(t.states, 0);

  std::vector<double> x(grid.dim()), u(grid.input_dim()), xn(grid.dim());
  for (std::size_t s = 0; s < t.states; ++s) {
    grid.state_at(s, x);
    t.absorbing[s] = model.measure(x) <= grid.sigma_abs() ? 1 : 0;
    h(x, u);
    t.cost[s] = stage_cost(model, x, u);
    model.dynamics(x, u, xn);
    const Grid::CellWeights cw = grid.interpolation_weights(xn);
    t.clamped[s] = cw.clamped ? 1 : 0;
    for (int c = 0; c < t.corners; ++c) {
      t.corner[s * t.corners + c] = static_cast<std::int32_t>(cw.corner[c]);
      t.weight[s * t.corners + c] = cw.weight[c];
    }
  }
  SweepRows rows;
  rows.row.resize(t.states);
  for (std::size_t s = 0; s < t.states; ++s) rows.row[s] = s;
  DpOptions sweep_opts = opts;
  sweep_opts.mode = mode;
  return sweep_fixed_point(t, rows, sweep_opts, nullptr);
}

double improvement_objective(const TransitionTable& t, const ValueTable& v, std::size_t state,
                             int action) {
  return row_objective(t, v.values(), t.row(state, action));
}

PolicyTable improve(const TransitionTable& t, const ValueTable& v, double tie_tol,
                    ExecMode mode, std::vector<std::size_t>* infeasible) {
  PolicyTable policy(t.grid);
  std::vector<std::uint8_t> bad(t.states, 0);
  auto vin = v.values();
  parallel_for(t.states, mode, [&](std::size_t s) {
    double best = kInf;
    for (int a = 0; a < t.actions; ++a) {
      best = std::min(best, row_objective(t, vin, t.row(s, a)));
    }
    if (!std::isfinite(best)) {
      bad[s] = 1;
      policy.assign(s, {}, -1);
      return;
    }
    const double cut = best + tie_tol * (1.0 + std::abs(best));
    std::vector<int> set;
    for (int a = 0; a < t.actions; ++a) {
      if (row_objective(t, vin, t.row(s, a)) <= cut) set.push_back(a);
    }
    const int selection = set.front();
    policy.assign(s, std::move(set), selection);
  });
  if (infeasible) {
    infeasible->clear();
    for (std::size_t s = 0; s < t.states; ++s) {
      if (bad[s]) infeasible->push_back(s);
    }
  }
  return policy;
}

void select_policy(PolicyTable& policy, SelectRule rule, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < policy.size(); ++s) {
    const auto set = policy.set(s);
    if (set.empty()) continue;
    int pick = set.front();
    switch (rule) {
      case SelectRule::kLowestIndex:
        pick = set.front();
        break;
      case SelectRule::kAdversarial:
        pick = set.back();
        break;
      case SelectRule::kRandomInSet: {
        const std::uint64_t r = rng();
        pick = set[static_cast<std::size_t>(r % set.size())];
        break;
      }
    }
    policy.assign(s, std::vector<int>(set.begin(), set.end()), pick);
  }
}

ValueFn as_value_fn(const ValueTable& table) {
  return [&table](StateRef x) { return table.interpolate(x); };
}

LscGapReport lsc_gap(const SystemModel& model, const ValueFn& v, StateRef x,
                     const LscLadderOptions& opts) {
  if (model.input_dim != 1) {
    throw ModelError("lsc_gap: only 1-D input spaces are supported");
  }
  LscGapReport report;
  report.state.assign(x.begin(), x.end());
  const InputBox box = model.admissible_inputs(x);
  if (!box.finite()) throw ModelError("lsc_gap: admissible box must be finite");

  std::vector<double> xn(model.state_dim);
  const auto objective = [&](double u) {
    const double u_arr[1] = {u};
    model.dynamics(x, {u_arr, 1}, xn);
    return model.stage_cost(x, {u_arr, 1}) + v(xn);
  };

  int points = opts.base_points_per_dim;
  for (int level = 0; level < opts.levels; ++level) {
    const double lo = box.lo[0], hi = box.hi[0];
    double best = kInf;
    double best_u = lo;
    for (int i = 0; i < points; ++i) {
      const double u = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
      const double g = objective(u);
      if (g < best) {
        best = g;
        best_u = u;
      }
    }
    report.inf_estimates.push_back(best);
    report.argmins.push_back({best_u});
    points = (points - 1) * opts.refine_factor + 1;
  }

  // Geometric extrapolation of the argmin sequence; exact when the argmin
  // walks toward a jump at the refinement rate.
  const auto& arg = report.argmins;
  double u_lim = arg.back()[0];
  if (arg.size() >= 2) {
    const double prev = arg[arg.size() - 2][0];
    u_lim = u_lim + (u_lim - prev) / (opts.refine_factor - 1);
  }
  u_lim = std::clamp(u_lim, box.lo[0], box.hi[0]);
  report.limit_input = {u_lim};
  report.objective_at_limit = objective(u_lim);
  report.gap = report.objective_at_limit - report.inf_estimates.back();

  bool stable = report.gap > opts.gap_atol;
  for (std::size_t l = 1; l < report.inf_estimates.size() && stable; ++l) {
    const double g_prev = report.objective_at_limit - report.inf_estimates[l - 1];
    const double g_cur = report.objective_at_limit - report.inf_estimates[l];
    if (std::abs(g_prev - g_cur) > opts.stability_rtol * std::abs(g_cur) + opts.gap_atol) {
      stable = false;
    }
  }
  report.stable = stable;
  return report;
}

PiRun run_pi(const Instance& instance, const Grid& grid, const TransitionTable& t,
             const PiRunOptions& opts) {
  PiRun run;
  PiIterate initial;
  initial.iteration = 0;
  initial.value = evaluate_policy_fn(instance.model, grid, instance.initial_policy, opts.dp,
                                     opts.dp.mode);
  // The trace records h0 snapped to the nearest input sample; evaluation above
  // used the exact policy values.
  initial.policy = PolicyTable(&grid);
  {
    std::vector<double> x(grid.dim()), u(grid.input_dim());
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      grid.state_at(s, x);
      instance.initial_policy(x, u);
      const InputBox box = instance.model.admissible_inputs(x);
      int best = 0;
      double best_d = kInf;
      std::vector<double> cand(grid.input_dim());
      for (int a = 0; a < grid.num_input_samples(); ++a) {
        grid.input_at(a, box, cand);
        double d = 0;
        for (int j = 0; j < grid.input_dim(); ++j) d += (cand[j] - u[j]) * (cand[j] - u[j]);
        if (d < best_d) {
          best_d = d;
          best = a;
        }
      }
      initial.policy.assign(s, {best}, best);
    }
  }
  run.trace.push_back(std::move(initial));

  for (int i = 1; i <= opts.iterations; ++i) {
    const ValueTable& v_prev = run.trace.back().value;
    PiIterate it;
    it.iteration = i;

    for (const auto& probe : opts.lsc_probes) {
      it.probes.push_back(
          lsc_gap(instance.model, as_value_fn(v_prev), probe, opts.probe_ladder));
    }

    std::vector<std::size_t> infeasible;
    it.policy = improve(t, v_prev, opts.dp.tie_tol, opts.dp.mode, &infeasible);
    if (!infeasible.empty()) {
      run.feasibility_alarm = true;
      run.alarm = "improvement infeasible at state index " + std::to_string(infeasible.front()) +
                  " (iteration " + std::to_string(i) + ")";
      run.trace.push_back(std::move(it));
      return run;
    }
    select_policy(it.policy, opts.select, opts.seed + static_cast<std::uint64_t>(i));
    it.value = evaluate_policy(t, it.policy, opts.dp, &v_prev);

    double sup_change = 0;
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      if (std::isfinite(it.value[s]) && std::isfinite(v_prev[s])) {
        sup_change = std::max(sup_change, std::abs(it.value[s] - v_prev[s]));
      }
    }
    it.sup_change = sup_change;
    run.trace.push_back(std::move(it));
    if (opts.stop_tol > 0 && sup_change < opts.stop_tol) break;
  }
  return run;
}

}  // namespace piplus
