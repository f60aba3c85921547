#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "piplus/oracle.hpp"
#include "piplus/piplus.hpp"

using namespace piplus;

TEST_CASE("riccati fixed point: deadbeat, rejection, and convergence") {
  CHECK(riccati_lq(0.0, 1.0, 2.5, 1.0) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK_THROWS_AS((void)riccati_lq(0.5, 1.0, 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS((void)riccati_lq(1.5, 0.0, 1.0, 1.0), ConfigError);

  // Matches a long plain fixed-point iteration.
  double p = 1.0;
  for (int i = 0; i < 200; ++i) {
    p = 1.0 + 0.81 * p - (0.9 * p) * (0.9 * p) / (1.0 + p);
  }
  CHECK(riccati_lq(0.9, 1.0, 1.0, 1.0) == doctest::Approx(p).epsilon(1e-10));
}

TEST_CASE("value iteration satisfies the Bellman residual bound") {
  const Instance inst = lq_instance(LqOptions{.nodes = 501, .input_samples = 201});
  const TransitionTable t = build_transitions(inst.model, inst.grid);
  DpOptions opts;
  const OracleResult oracle = value_iteration(t, opts);
  CHECK(oracle.converged);
  const double residual = bellman_residual(t, oracle.v_star);
  double scale = 0;
  for (std::size_t s = 0; s < t.states; ++s) {
    if (std::isfinite(oracle.v_star[s])) scale = std::max(scale, oracle.v_star[s]);
  }
  CHECK(residual <= opts.eval_tol * (1.0 + scale));

  // V*(attractor) = 0 and V* tracks the Riccati solution.
  const double zero = 0.0;
  CHECK(oracle.v_star[inst.grid.nearest_node({&zero, 1})] == 0.0);
  const double p_star = riccati_lq(0.9, 1.0, 1.0, 1.0);
  double num = 0, den = 0;
  for (std::size_t s = 0; s < t.states; ++s) {
    const double x = inst.grid.state_at(s)[0];
    if (std::abs(x) > 2.4) continue;
    num = std::max(num, std::abs(oracle.v_star[s] - p_star * x * x));
    den = std::max(den, p_star * x * x);
  }
  CHECK(num / den < 0.01);
}

TEST_CASE("counterexample optimal value is below the two-step branch cost") {
  const Instance inst = counterexample_instance();
  const TransitionTable t = build_transitions(inst.model, inst.grid);
  const OracleResult oracle = value_iteration(t, DpOptions{});
  const double x_bar = counterexample::kXBar;
  const std::size_t node = inst.grid.nearest_node({&x_bar, 1});
  CHECK(oracle.v_star[node] <= 381.0 / 28.0 + 0.05);
}

TEST_CASE("exhaustive enumeration equals exact value iteration on tiny instances") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const Instance inst = random_tiny_instance(seed);
    const TransitionTable t = build_transitions(inst.model, inst.grid);
    DpOptions exact;
    exact.exact = true;
    exact.max_sweeps = static_cast<int>(t.states) + 8;
    const OracleResult vi = value_iteration(t, exact);
    const OracleResult brute = exhaustive_policy_search(t, exact.tie_tol);
    for (std::size_t s = 0; s < t.states; ++s) {
      CHECK(vi.v_star[s] == brute.v_star[s]);  // bit-exact, including +inf
    }
  }
}

TEST_CASE("single-action models make the unique policy optimal") {
  std::vector<TableEntry> entries = {{0, 0, 0, 0.0}, {1, 0, 0, 2.0}, {2, 0, 1, 1.5}};
  const Instance inst = table_instance(3, 1, entries);
  const TransitionTable t = build_transitions(inst.model, inst.grid);
  const OracleResult brute = exhaustive_policy_search(t, 1e-9);
  CHECK(brute.v_star[0] == 0.0);
  CHECK(brute.v_star[1] == 2.0);
  CHECK(brute.v_star[2] == 3.5);
}

TEST_CASE("two-state toy picks the zero-cost action everywhere") {
  // state 1 has a free action into the sink and a costly self-loop.
  std::vector<TableEntry> entries = {
      {0, 0, 0, 0.0}, {0, 1, 0, 0.0},
      {1, 0, 0, 0.0}, {1, 1, 1, 1.0},
  };
  const Instance inst = table_instance(2, 2, entries);
  const TransitionTable t = build_transitions(inst.model, inst.grid);
  const OracleResult brute = exhaustive_policy_search(t, 1e-9);
  CHECK(brute.v_star[1] == 0.0);
  REQUIRE(brute.h_star.set(1).size() == 1);
  CHECK(brute.h_star.set(1)[0] == 0);
}

TEST_CASE("enumeration refuses oversized models") {
  const Instance inst = lq_instance(LqOptions{.nodes = 101, .input_samples = 11});
  const TransitionTable t = build_transitions(inst.model, inst.grid);
  CHECK_THROWS(static_cast<void>(exhaustive_policy_search(t, 1e-9)));
}

TEST_CASE("policy_cost_exact walks cycles to infinity") {
  std::vector<TableEntry> entries = {
      {0, 0, 0, 0.0},
      {1, 0, 2, 1.0},
      {2, 0, 1, 1.0},
  };
  const Instance inst = table_instance(3, 1, entries);
  const TransitionTable t = build_transitions(inst.model, inst.grid);
  PolicyTable h(&inst.grid);
  for (std::size_t s = 0; s < 3; ++s) h.assign(s, {0}, 0);
  const ValueTable cost = policy_cost_exact(t, h);
  CHECK(cost[0] == 0.0);
  CHECK(std::isinf(cost[1]));
  CHECK(std::isinf(cost[2]));
}
