#include "piplus/piplus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace piplus {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double restricted_objective(const TransitionTable& t, std::span<const double> v, std::size_t s,
                            int a) {
  const std::size_t row = t.row(s, a);
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

}  // namespace

PolicyTable regularize(const TransitionTable& t, const Grid& grid, const PolicyTable& h,
                       const ValueTable& v, double delta_reg, double tie_tol, ExecMode mode) {
  const double radius = delta_reg >= 0 ? delta_reg : grid.cell_diameter();
  const int dims = grid.dim();
  std::vector<int> reach(dims);
  for (int d = 0; d < dims; ++d) {
    reach[d] = static_cast<int>(std::floor(radius / grid.axes()[d].spacing() + 1e-12));
  }

  PolicyTable hr(&grid);
  auto vin = v.values();
  parallel_for(grid.num_states(), mode, [&](std::size_t s) {
    std::vector<int> coords(dims);
    grid.coords_of(s, coords);

    std::vector<int> members;
    std::vector<int> offset(dims, 0);
    // Walk the neighbour box and keep nodes within the euclidean radius.
    std::vector<int> cursor(dims);
    for (int d = 0; d < dims; ++d) cursor[d] = -reach[d];
    while (true) {
      double dist_sq = 0;
      for (int d = 0; d < dims; ++d) {
        const double step = cursor[d] * grid.axes()[d].spacing();
        dist_sq += step * step;
      }
      if (dist_sq <= radius * radius * (1.0 + 1e-12)) {
        bool ok = true;
        std::vector<int> nb(dims);
        for (int d = 0; d < dims; ++d) {
          nb[d] = coords[d] + cursor[d];
          if (nb[d] < 0 || nb[d] >= grid.axes()[d].nodes) ok = false;
        }
        if (ok) {
          const auto set = h.set(grid.flat_index(nb));
          members.insert(members.end(), set.begin(), set.end());
        }
      }
      int d = 0;
      for (; d < dims; ++d) {
        if (++cursor[d] <= reach[d]) break;
        cursor[d] = -reach[d];
      }
      if (d == dims) break;
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());

    if (!members.empty()) {
      // Close the union under the tie rule at x itself.
      double best = kInf;
      for (int a : members) best = std::min(best, restricted_objective(t, vin, s, a));
      if (std::isfinite(best)) {
        const double cut = best + tie_tol * (1.0 + std::abs(best));
        for (int a = 0; a < t.actions; ++a) {
          if (restricted_objective(t, vin, s, a) <= cut) members.push_back(a);
        }
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
      }
    }
    const int selection = members.empty() ? -1 : members.front();
    hr.assign(s, std::move(members), selection);
  });
  return hr;
}

ValueTable evaluate_min_selection(const TransitionTable& t, const PolicyTable& hr,
                                  const DpOptions& opts, const ValueTable* warm_start) {
  for (std::size_t s = 0; s < t.states; ++s) {
    if (!hr.feasible(s)) {
      throw FeasibilityError("evaluate_min_selection: empty restricted action set", s, -1);
    }
  }
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
      double best = kInf;
      for (int a : hr.set(s)) {
        best = std::min(best, restricted_objective(t, vin, s, a));
      }
      next[s] = best;
      if (std::isfinite(best) && std::isfinite(vin[s])) {
        change[s] = std::abs(best - vin[s]);
      } else if (std::isfinite(best) == std::isfinite(vin[s])) {
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
  for (std::size_t s = 0; s < t.states; ++s) {
    if ((!settled && change[s] > opts.eval_tol * (1.0 + std::abs(v[s]))) ||
        v[s] > opts.divergence_cut) {
      v[s] = kInf;
    }
  }
  return v;
}

PolicyTable best_selection(const TransitionTable& t, const PolicyTable& hr, const ValueTable& vr,
                           double tie_tol, ExecMode mode) {
  PolicyTable best(t.grid);
  auto vin = vr.values();
  parallel_for(t.states, mode, [&](std::size_t s) {
    const auto candidates = hr.set(s);
    if (candidates.empty()) {
      best.assign(s, {}, -1);
      return;
    }
    double min_obj = kInf;
    for (int a : candidates) {
      min_obj = std::min(min_obj, restricted_objective(t, vin, s, a));
    }
    std::vector<int> winners;
    if (std::isfinite(min_obj)) {
      const double cut = min_obj + tie_tol * (1.0 + std::abs(min_obj));
      for (int a : candidates) {
        if (restricted_objective(t, vin, s, a) <= cut) winners.push_back(a);
      }
    } else {
      winners.assign(candidates.begin(), candidates.end());
    }
    const int selection = winners.empty() ? -1 : winners.front();
    best.assign(s, std::move(winners), selection);
  });
  return best;
}

PiPlusRun run_piplus(const Instance& instance, const Grid& grid, const TransitionTable& t,
                     const PiPlusRunOptions& opts) {
  PiPlusRun run;

  PiPlusIterate initial;
  initial.iteration = 0;
  initial.value = evaluate_policy_fn(instance.model, grid, instance.initial_policy, opts.dp,
                                     opts.dp.mode);
  // H^0 = H_r^0 = H_r^{*,0} = {h0}, recorded as the nearest-sample singleton.
  PolicyTable h0(&grid);
  {
    std::vector<double> x(grid.dim()), u(grid.input_dim()), cand(grid.input_dim());
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      grid.state_at(s, x);
      instance.initial_policy(x, u);
      const InputBox box = instance.model.admissible_inputs(x);
      int besta = 0;
      double best_d = kInf;
      for (int a = 0; a < grid.num_input_samples(); ++a) {
        grid.input_at(a, box, cand);
        double d = 0;
        for (int j = 0; j < grid.input_dim(); ++j) d += (cand[j] - u[j]) * (cand[j] - u[j]);
        if (d < best_d) {
          best_d = d;
          besta = a;
        }
      }
      h0.assign(s, {besta}, besta);
    }
  }
  initial.improved = h0;
  initial.regularized = h0;
  initial.best = h0;
  run.trace.push_back(std::move(initial));

  for (int i = 1; i <= opts.iterations; ++i) {
    const ValueTable& v_prev = run.trace.back().value;
    PiPlusIterate it;
    it.iteration = i;

    std::vector<std::size_t> infeasible;
    it.improved = improve(t, v_prev, opts.dp.tie_tol, opts.dp.mode, &infeasible);
    if (!infeasible.empty()) {
      throw FeasibilityError("run_piplus: improvement set empty", infeasible.front(), i);
    }
    it.regularized = regularize(t, grid, it.improved, v_prev, opts.delta_reg, opts.dp.tie_tol,
                                opts.dp.mode);
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      if (!it.regularized.feasible(s)) {
        throw FeasibilityError("run_piplus: regularized set empty", s, i);
      }
    }
    it.value = evaluate_min_selection(t, it.regularized, opts.dp, &v_prev);
    it.best = best_selection(t, it.regularized, it.value, opts.dp.tie_tol, opts.dp.mode);
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      if (!it.best.feasible(s)) {
        throw FeasibilityError("run_piplus: best-selection set empty", s, i);
      }
    }

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
