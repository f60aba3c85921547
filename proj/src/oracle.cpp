#include "piplus/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace piplus {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double objective(const TransitionTable& t, std::span<const double> v, std::size_t s, int a) {
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

// Single successor of a degenerate row; -1 if the row interpolates.
int degenerate_successor(const TransitionTable& t, std::size_t row) {
  int succ = -1;
  const std::size_t base = row * t.corners;
  for (int c = 0; c < t.corners; ++c) {
    const double w = t.weight[base + c];
    if (w == 0) continue;
    if (w != 1.0 || succ >= 0) return -1;
    succ = t.corner[base + c];
  }
  return succ;
}

void require_degenerate(const TransitionTable& t, std::vector<int>& succ) {
  succ.assign(t.states * t.actions, -1);
  for (std::size_t s = 0; s < t.states; ++s) {
    for (int a = 0; a < t.actions; ++a) {
      const int n = degenerate_successor(t, t.row(s, a));
      if (n < 0) {
        throw ModelError("oracle: transitions interpolate; exact enumeration needs "
                         "node-to-node dynamics");
      }
      succ[t.row(s, a)] = n;
    }
  }
}

// Cost-to-go of one stationary action assignment via memoized graph walk.
// Right-associated sums, matching what converged value iteration computes.
std::vector<double> walk_policy(const TransitionTable& t, const std::vector<int>& succ,
                                const std::vector<int>& action) {
  enum : std::uint8_t { kUnset, kInProgress, kDone };
  std::vector<std::uint8_t> mark(t.states, kUnset);
  std::vector<double> cost(t.states, 0.0);

  for (std::size_t start = 0; start < t.states; ++start) {
    if (mark[start] == kDone) continue;
    // Iterative walk to keep recursion depth bounded.
    std::vector<std::size_t> path;
    std::size_t s = start;
    while (true) {
      if (t.absorbing[s]) {
        cost[s] = 0.0;
        mark[s] = kDone;
        break;
      }
      if (mark[s] == kDone) break;
      if (mark[s] == kInProgress) {
        // Cycle: everyone on it diverges.
        cost[s] = kInf;
        mark[s] = kDone;
        break;
      }
      mark[s] = kInProgress;
      path.push_back(s);
      s = static_cast<std::size_t>(succ[t.row(s, action[s])]);
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      const std::size_t p = *it;
      if (mark[p] == kDone) continue;  // closed as part of a cycle
      const std::size_t n = static_cast<std::size_t>(succ[t.row(p, action[p])]);
      cost[p] = std::isfinite(cost[n]) ? t.cost[t.row(p, action[p])] + cost[n] : kInf;
      mark[p] = kDone;
    }
  }
  return cost;
}

}  // namespace

OracleResult value_iteration(const TransitionTable& t, const DpOptions& opts) {
  OracleResult result;
  ValueTable v(t.grid, 0.0);
  ValueTable next(t.grid, 0.0);
  std::vector<double> change(t.states, 0.0);

  int sweep = 0;
  bool settled = false;
  for (; sweep < opts.max_sweeps; ++sweep) {
    auto vin = v.values();
    parallel_for(t.states, opts.mode, [&](std::size_t s) {
      if (t.absorbing[s]) {
        next[s] = 0.0;
        change[s] = 0.0;
        return;
      }
      double best = kInf;
      for (int a = 0; a < t.actions; ++a) {
        best = std::min(best, objective(t, vin, s, a));
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
    result.final_change = sup_change;
    if (opts.exact ? sup_change == 0.0 : sup_change <= opts.eval_tol * (1.0 + sup_v)) {
      settled = true;
      ++sweep;
      break;
    }
  }
  result.sweeps = sweep;
  result.converged = settled;
  for (std::size_t s = 0; s < t.states; ++s) {
    if ((!settled && change[s] > opts.eval_tol * (1.0 + std::abs(v[s]))) ||
        v[s] > opts.divergence_cut) {
      v[s] = kInf;
    }
  }

  // Argmin sets against the converged values.
  PolicyTable h_star(t.grid);
  auto vin = v.values();
  parallel_for(t.states, opts.mode, [&](std::size_t s) {
    double best = kInf;
    for (int a = 0; a < t.actions; ++a) {
      best = std::min(best, objective(t, vin, s, a));
    }
    std::vector<int> set;
    if (std::isfinite(best)) {
      const double cut = best + opts.tie_tol * (1.0 + std::abs(best));
      for (int a = 0; a < t.actions; ++a) {
        if (objective(t, vin, s, a) <= cut) set.push_back(a);
      }
    }
    const int selection = set.empty() ? -1 : set.front();
    h_star.assign(s, std::move(set), selection);
  });

  result.v_star = std::move(v);
  result.h_star = std::move(h_star);
  return result;
}

double bellman_residual(const TransitionTable& t, const ValueTable& v) {
  double worst = 0;
  auto vin = v.values();
  for (std::size_t s = 0; s < t.states; ++s) {
    if (t.absorbing[s] || !std::isfinite(v[s])) continue;
    double best = kInf;
    for (int a = 0; a < t.actions; ++a) {
      best = std::min(best, objective(t, vin, s, a));
    }
    if (std::isfinite(best)) worst = std::max(worst, std::abs(v[s] - best));
  }
  return worst;
}

double riccati_lq(double a, double b, double q, double r, double tol, int max_iter) {
  if (!(q > 0)) throw ConfigError("riccati_lq: q must be positive");
  if (!(r >= 0)) throw ConfigError("riccati_lq: r must be non-negative");
  if (r == 0 && b == 0) throw ConfigError("riccati_lq: (a, b) not stabilizable");
  if (b == 0 && !(std::abs(a) < 1)) throw ConfigError("riccati_lq: (a, b) not stabilizable");
  double p = q;
  for (int i = 0; i < max_iter; ++i) {
    const double denom = r + b * b * p;
    if (!(denom > 0)) throw ConfigError("riccati_lq: degenerate input weight");
    const double next = q + a * a * p - (a * b * p) * (a * b * p) / denom;
    if (!std::isfinite(next)) throw ConfigError("riccati_lq: iteration diverged");
    if (std::abs(next - p) <= tol * (1.0 + std::abs(next))) return next;
    p = next;
  }
  throw ConfigError("riccati_lq: no convergence");
}

double riccati_gain(double a, double b, double r, double p) {
  return -a * b * p / (r + b * b * p);
}

OracleResult exhaustive_policy_search(const TransitionTable& t, double tie_tol,
                                      std::size_t budget) {
  std::vector<int> succ;
  require_degenerate(t, succ);

  std::size_t count = 1;
  for (std::size_t s = 0; s < t.states; ++s) {
    if (t.absorbing[s]) continue;
    if (count > budget / static_cast<std::size_t>(t.actions)) {
      throw BudgetError("exhaustive_policy_search: " + std::to_string(t.states) + " states x " +
                        std::to_string(t.actions) + " actions exceeds the policy budget");
    }
    count *= static_cast<std::size_t>(t.actions);
  }

  std::vector<double> best(t.states, kInf);
  std::vector<int> action(t.states, 0);
  for (std::size_t code = 0; code < count; ++code) {
    std::size_t rem = code;
    for (std::size_t s = 0; s < t.states; ++s) {
      if (t.absorbing[s]) {
        action[s] = 0;
        continue;
      }
      action[s] = static_cast<int>(rem % t.actions);
      rem /= t.actions;
    }
    const std::vector<double> cost = walk_policy(t, succ, action);
    for (std::size_t s = 0; s < t.states; ++s) best[s] = std::min(best[s], cost[s]);
  }

  OracleResult result;
  result.v_star = ValueTable(t.grid, 0.0);
  for (std::size_t s = 0; s < t.states; ++s) result.v_star[s] = best[s];
  result.converged = true;

  PolicyTable h_star(t.grid);
  auto vin = result.v_star.values();
  for (std::size_t s = 0; s < t.states; ++s) {
    double mn = kInf;
    for (int a = 0; a < t.actions; ++a) mn = std::min(mn, objective(t, vin, s, a));
    std::vector<int> set;
    if (std::isfinite(mn)) {
      const double cut = mn + tie_tol * (1.0 + std::abs(mn));
      for (int a = 0; a < t.actions; ++a) {
        if (objective(t, vin, s, a) <= cut) set.push_back(a);
      }
    }
    const int selection = set.empty() ? -1 : set.front();
    h_star.assign(s, std::move(set), selection);
  }
  result.h_star = std::move(h_star);
  return result;
}

ValueTable min_over_selections_bruteforce(const TransitionTable& t, const PolicyTable& hr,
                                          std::size_t budget) {
  std::vector<int> succ;
  require_degenerate(t, succ);

  std::size_t count = 1;
  for (std::size_t s = 0; s < t.states; ++s) {
    if (t.absorbing[s]) continue;
    const std::size_t k = hr.set(s).size();
    if (k == 0) throw FeasibilityError("min_over_selections: empty set", s, -1);
    if (count > budget / k) {
      throw BudgetError("min_over_selections: selection count exceeds the budget");
    }
    count *= k;
  }

  std::vector<double> best(t.states, kInf);
  std::vector<int> action(t.states, 0);
  for (std::size_t code = 0; code < count; ++code) {
    std::size_t rem = code;
    for (std::size_t s = 0; s < t.states; ++s) {
      const auto set = hr.set(s);
      if (t.absorbing[s]) {
        action[s] = set.empty() ? 0 : set.front();
        continue;
      }
      action[s] = set[rem % set.size()];
      rem /= set.size();
    }
    const std::vector<double> cost = walk_policy(t, succ, action);
    for (std::size_t s = 0; s < t.states; ++s) best[s] = std::min(best[s], cost[s]);
  }

  ValueTable out(t.grid, 0.0);
  for (std::size_t s = 0; s < t.states; ++s) out[s] = best[s];
  return out;
}

ValueTable policy_cost_exact(const TransitionTable& t, const PolicyTable& policy) {
  std::vector<int> succ;
  require_degenerate(t, succ);
  std::vector<int> action(t.states, 0);
  for (std::size_t s = 0; s < t.states; ++s) {
    const int a = policy.selection(s);
    if (a < 0) throw FeasibilityError("policy_cost_exact: state without a selection", s, -1);
    action[s] = a;
  }
  const std::vector<double> cost = walk_policy(t, succ, action);
  ValueTable out(t.grid, 0.0);
  for (std::size_t s = 0; s < t.states; ++s) out[s] = cost[s];
  return out;
}

Instance random_tiny_instance(std::uint64_t seed, int max_states, int max_actions) {
  std::mt19937_64 rng(seed);
  const auto draw = [&rng](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const int n = draw(3, max_states);
  const int m = draw(2, max_actions);

  std::vector<TableEntry> entries;
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) {
      TableEntry e;
      e.state = s;
      e.input = a;
      if (s == 0) {
        e.next_state = 0;
        e.cost = 0.0;
      } else if (a == 0) {
        e.next_state = s - 1;  // guarantees a path to absorption
        e.cost = 0.25 + 3.75 * ((rng() >> 11) * 0x1.0p-53);
      } else {
        e.next_state = draw(0, n - 1);
        e.cost = 0.25 + 3.75 * ((rng() >> 11) * 0x1.0p-53);
      }
      entries.push_back(e);
    }
  }
  return table_instance(n, m, std::move(entries));
}

}  // namespace piplus
