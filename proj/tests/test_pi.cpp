#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "piplus/oracle.hpp"
#include "piplus/pi.hpp"

using namespace piplus;

namespace {

// Grid aligned so the integer breakpoints, the tie state and its +1 shift are
// all nodes, with u = 0 and u = 1 on the input sample grid.
Instance aligned_counterexample() {
  CounterexampleOptions opts;
  opts.x_max = 4.0;
  opts.nodes = 2801;        // spacing 1/350 puts all k/7 points on the grid
  opts.input_samples = 203; // spacing 1.01/202 puts 0 and 1 on the sample set
  return counterexample_instance(opts);
}

int sample_index_of(const Instance& inst, const Grid& grid, double x, double u) {
  const InputBox box = inst.model.admissible_inputs({&x, 1});
  int best = 0;
  double best_d = 1e300;
  std::vector<double> cand(1);
  for (int a = 0; a < grid.num_input_samples(); ++a) {
    grid.input_at(a, box, cand);
    const double d = std::abs(cand[0] - u);
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("evaluate_policy_fn reproduces the analytic zero-policy cost") {
  const Instance inst = aligned_counterexample();
  const Grid& grid = inst.grid;
  const ValueTable v0 = evaluate_policy_fn(inst.model, grid, inst.initial_policy, DpOptions{});

  const double x_bar = counterexample::kXBar;
  const std::size_t node = grid.nearest_node({&x_bar, 1});
  CHECK(grid.state_at(node)[0] == doctest::Approx(x_bar).epsilon(1e-14));
  CHECK(v0[node] == doctest::Approx(99.0 / 7.0).epsilon(1e-10));

  // Absorbing states evaluate to zero.
  const double origin = 0.0;
  CHECK(v0[grid.nearest_node({&origin, 1})] == 0.0);
}

TEST_CASE("lq policy evaluation matches the scalar closed form") {
  const Instance inst = lq_instance();
  const Grid& grid = inst.grid;
  const ValueTable v0 = evaluate_policy_fn(inst.model, grid, inst.initial_policy, DpOptions{});
  const double p0 = lq_policy_cost_coefficient(0.9, 1.0, 1.0, 1.0, -0.5);
  for (std::size_t s = 0; s < grid.num_states(); s += 97) {
    const double x = grid.state_at(s)[0];
    if (std::abs(x) < 0.5) continue;
    CHECK(v0[s] == doctest::Approx(p0 * x * x).epsilon(0.01));
  }
}

TEST_CASE("improve finds the paper's set-valued tie at x-bar") {
  const Instance inst = aligned_counterexample();
  const Grid& grid = inst.grid;
  const TransitionTable t = build_transitions(inst.model, grid);

  // Exact analytic initial cost on the aligned grid.
  ValueTable v0(&grid, 0.0);
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    v0[s] = counterexample::v0(grid.state_at(s)[0]);
  }
  const PolicyTable h1 = improve(t, v0, 1e-9, ExecMode::kParallel);

  const double x_bar = counterexample::kXBar;
  const std::size_t tie_node = grid.nearest_node({&x_bar, 1});
  const int idx_zero = sample_index_of(inst, grid, x_bar, 0.0);
  const int idx_one = sample_index_of(inst, grid, x_bar, 1.0);
  const auto tie_set = h1.set(tie_node);
  REQUIRE(tie_set.size() == 2);
  CHECK(tie_set[0] == idx_zero);
  CHECK(tie_set[1] == idx_one);

  // The tied objectives both equal 396/28.
  CHECK(improvement_objective(t, v0, tie_node, idx_zero) ==
        doctest::Approx(396.0 / 28.0).epsilon(1e-9));
  CHECK(improvement_objective(t, v0, tie_node, idx_one) ==
        doctest::Approx(396.0 / 28.0).epsilon(1e-9));

  // Above the tie the argmin is u = 0, below it u = 1, and at the origin
  // every input ties.
  const double above = 3.0;
  const auto above_set = h1.set(grid.nearest_node({&above, 1}));
  REQUIRE(above_set.size() == 1);
  CHECK(above_set[0] == idx_zero);
  const double below = 1.5;
  const auto below_set = h1.set(grid.nearest_node({&below, 1}));
  REQUIRE(below_set.size() == 1);
  CHECK(below_set[0] == idx_one);
  const double origin = 0.0;
  CHECK(h1.set(grid.nearest_node({&origin, 1})).size() ==
        static_cast<std::size_t>(grid.num_input_samples()));
}

TEST_CASE("improve flags states whose objectives are all infinite") {
  const Instance inst = lq_instance(LqOptions{.nodes = 101, .input_samples = 11});
  const Grid& grid = inst.grid;
  const TransitionTable t = build_transitions(inst.model, grid);
  ValueTable v(&grid, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> infeasible;
  (void)improve(t, v, 1e-9, ExecMode::kSerial, &infeasible);
  CHECK(!infeasible.empty());
}

TEST_CASE("run_pi is monotone within slack and deterministic") {
  const Instance inst = lq_instance(LqOptions{.nodes = 501, .input_samples = 201});
  const Grid& grid = inst.grid;
  const TransitionTable t = build_transitions(inst.model, grid);
  PiRunOptions opts;
  opts.iterations = 6;
  const PiRun run_a = run_pi(inst, grid, t, opts);
  const PiRun run_b = run_pi(inst, grid, t, opts);
  REQUIRE(run_a.trace.size() == run_b.trace.size());
  for (std::size_t i = 0; i < run_a.trace.size(); ++i) {
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      CHECK(run_a.trace[i].value[s] == run_b.trace[i].value[s]);
    }
  }
  for (std::size_t i = 1; i < run_a.trace.size(); ++i) {
    const ValueTable& prev = run_a.trace[i - 1].value;
    const ValueTable& cur = run_a.trace[i].value;
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
      CHECK(cur[s] <= prev[s] + 1e-9 * (1.0 + prev[s]) + prev.neighbor_spread(s));
    }
  }
  // One-step improvement never worsens the bound: min objective <= V^i.
  for (std::size_t i = 0; i + 1 < run_a.trace.size(); ++i) {
    const ValueTable& v = run_a.trace[i].value;
    for (std::size_t s = 0; s < grid.num_states(); s += 31) {
      if (t.absorbing[s]) continue;
      double best = 1e300;
      for (int a = 0; a < t.actions; ++a) {
        best = std::min(best, improvement_objective(t, v, s, a));
      }
      CHECK(best <= v[s] + 1e-9 * (1.0 + v[s]) + v.neighbor_spread(s));
    }
  }
}

TEST_CASE("run_pi converges to the Riccati solution within 5 percent") {
  const Instance inst = lq_instance();
  const Grid& grid = inst.grid;
  const TransitionTable t = build_transitions(inst.model, grid);
  PiRunOptions opts;
  opts.iterations = 10;
  const PiRun run = run_pi(inst, grid, t, opts);
  const double p_star = riccati_lq(0.9, 1.0, 1.0, 1.0);

  double num = 0, den = 0;
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    const double x = grid.state_at(s)[0];
    if (std::abs(x) > 0.8 * 3.0) continue;
    num = std::max(num, std::abs(run.trace.back().value[s] - p_star * x * x));
    den = std::max(den, p_star * x * x);
  }
  CHECK(num / den < 0.05);
}

TEST_CASE("lsc_gap reproduces the non-attained infimum on the analytic branch") {
  const Instance inst = counterexample_instance();
  const double probe = counterexample::kXBar + 1.0;

  const LscGapReport bad = lsc_gap(
      inst.model, [](StateRef x) { return counterexample::v1(x[0]); }, {&probe, 1});
  CHECK(bad.objective_at_limit == doctest::Approx(696.0 / 28.0).epsilon(1e-12));
  CHECK(bad.inf_estimates.back() == doctest::Approx(681.0 / 28.0).epsilon(0.005));
  CHECK(bad.gap == doctest::Approx(15.0 / 28.0).epsilon(0.005));
  CHECK(bad.limit_input[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bad.stable);

  // The min-cost branch attains its minimum at u = 0: no gap.
  const LscGapReport good = lsc_gap(
      inst.model, [](StateRef x) { return counterexample::v1_prime(x[0]); }, {&probe, 1});
  CHECK(good.gap <= 1e-9);
  CHECK_FALSE(good.stable);
  CHECK(good.limit_input[0] == doctest::Approx(0.0).epsilon(1e-12));

  // A continuous objective over a compact set: gap vanishes under refinement.
  const Instance lq = lq_instance();
  const ValueTable v0 = evaluate_policy_fn(lq.model, lq.grid, lq.initial_policy, DpOptions{});
  const double x0 = 1.5;
  LscLadderOptions small;
  small.base_points_per_dim = 2048;
  const LscGapReport cont = lsc_gap(lq.model, as_value_fn(v0), {&x0, 1}, small);
  CHECK(std::abs(cont.gap) <= 1e-4);
  CHECK_FALSE(cont.stable);
}

TEST_CASE("adversarial selection reports the lsc diagnostic at iteration 2") {
  const Instance inst = aligned_counterexample();
  const Grid& grid = inst.grid;
  const TransitionTable t = build_transitions(inst.model, grid);
  PiRunOptions opts;
  opts.iterations = 2;
  opts.select = SelectRule::kAdversarial;  // resolves the tie toward u = 1
  opts.lsc_probes = {{counterexample::kXBar + 1.0}};
  opts.probe_ladder.base_points_per_dim = 101;
  const PiRun run = run_pi(inst, grid, t, opts);
  REQUIRE(run.trace.size() >= 3);
  const auto& probes = run.trace[2].probes;  // taken while improving on V^1
  REQUIRE(probes.size() == 1);
  // Grid data smears the jump over one cell, but the probe still lands on the
  // paper's numbers: objective 696/28 at the extrapolated limit input 0 and a
  // near-15/28 gap to the sampled infimum.
  CHECK(probes[0].limit_input[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(probes[0].objective_at_limit == doctest::Approx(696.0 / 28.0).epsilon(1e-6));
  CHECK(probes[0].gap == doctest::Approx(15.0 / 28.0).epsilon(0.1));
  CHECK(probes[0].inf_estimates.back() == doctest::Approx(681.0 / 28.0).epsilon(0.01));
}

TEST_CASE("select_policy rules are deterministic and stay inside the set") {
  const Instance inst = lq_instance(LqOptions{.nodes = 101, .input_samples = 21});
  const Grid& grid = inst.grid;
  const TransitionTable t = build_transitions(inst.model, grid);
  const ValueTable v(&grid, 0.0);
  PolicyTable h = improve(t, v, 1e-9, ExecMode::kSerial);
  PolicyTable adv = h;
  select_policy(adv, SelectRule::kAdversarial, 0);
  PolicyTable rnd_a = h, rnd_b = h;
  select_policy(rnd_a, SelectRule::kRandomInSet, 42);
  select_policy(rnd_b, SelectRule::kRandomInSet, 42);
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    const auto set = h.set(s);
    CHECK(adv.selection(s) == set.back());
    CHECK(rnd_a.selection(s) == rnd_b.selection(s));
    CHECK(std::find(set.begin(), set.end(), rnd_a.selection(s)) != set.end());
  }
}
