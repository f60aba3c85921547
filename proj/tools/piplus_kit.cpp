#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "piplus/bounds.hpp"
#include "piplus/io.hpp"
#include "piplus/oracle.hpp"
#include "piplus/piplus.hpp"
#include "piplus/scenario.hpp"
#include "piplus/verify.hpp"

namespace fs = std::filesystem;
using namespace piplus;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCheckFailed = 3;
constexpr int kExitFeasibility = 4;

struct CommonArgs {
  std::string scenario_path;
  std::string algo;
  int iterations = -1;
  std::string select;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = "out";
};

Scenario resolve_scenario(const CommonArgs& args) {
  Scenario sc = load_scenario(args.scenario_path);
  if (!args.algo.empty()) sc.algo = args.algo;
  if (args.iterations >= 0) sc.iterations = args.iterations;
  if (!args.select.empty()) sc.select = args.select;
  if (args.seed_set) sc.seed = args.seed;
  if (sc.algo != "pi" && sc.algo != "piplus") throw ConfigError("unknown algorithm " + sc.algo);
  return sc;
}

SelectRule rule_of(const std::string& name) {
  if (name == "adversarial") return SelectRule::kAdversarial;
  if (name == "random") return SelectRule::kRandomInSet;
  return SelectRule::kLowestIndex;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

DpOptions dp_of(const Scenario& sc) {
  DpOptions dp;
  dp.tie_tol = sc.tie_tol;
  dp.eval_tol = sc.eval_tol;
  return dp;
}

// Runs the configured algorithm and writes traces, bound tables and a check
// summary.  Returns the process exit code.
int cmd_run(const CommonArgs& args) {
  const Scenario sc = resolve_scenario(args);
  const Instance instance = make_instance(sc);
  const Grid& grid = instance.grid;

  fs::create_directories(args.out_dir);
  {
    std::ofstream echo(fs::path(args.out_dir) / "config_echo.toml");
    echo_scenario(sc, echo);
  }

  const TransitionTable t = build_transitions(instance.model, grid);
  const DpOptions dp = dp_of(sc);

  std::vector<ValueTable> values;
  std::vector<CheckReport> reports;
  bool feasibility_alarm = false;
  std::string alarm;

  if (sc.algo == "pi") {
    PiRunOptions opts;
    opts.iterations = sc.iterations;
    opts.select = rule_of(sc.select);
    opts.seed = sc.seed;
    opts.dp = dp;
    if (sc.model_id == "counterexample") {
      opts.lsc_probes = {{counterexample::kXBar + 1.0}};
      opts.probe_ladder.base_points_per_dim = 101;
    }
    const PiRun run = run_pi(instance, grid, t, opts);
    feasibility_alarm = run.feasibility_alarm;
    alarm = run.alarm;
    for (std::size_t i = 0; i < run.trace.size(); ++i) {
      std::ofstream os(fs::path(args.out_dir) / ("trace_" + std::to_string(i) + ".csv"));
      write_pi_trace_csv(os, instance, grid, run.trace[i]);
      values.push_back(run.trace[i].value);
      for (const auto& probe : run.trace[i].probes) {
        if (probe.stable) {
          feasibility_alarm = true;
          alarm = "lsc gap " + fmt_double(probe.gap) + " stable at probe state " +
                  fmt_double(probe.state[0]) + " (iteration " + std::to_string(i) + ")";
        }
      }
    }
    // Grid interpolation smears the value jump over one cell, so the ladder
    // diagnostic for the built-in example runs on its analytic branch costs,
    // which reproduce the worst selection at the tie exactly.
    if (!feasibility_alarm && sc.model_id == "counterexample" &&
        rule_of(sc.select) == SelectRule::kAdversarial && sc.iterations >= 2) {
      const double probe_x = counterexample::kXBar + 1.0;
      const LscGapReport probe = lsc_gap(
          instance.model, [](StateRef x) { return counterexample::v1(x[0]); }, {&probe_x, 1});
      if (probe.stable) {
        feasibility_alarm = true;
        alarm = "lsc gap " + fmt_double(probe.gap) + " stable at probe state " +
                fmt_double(probe_x) + " (iteration 2, analytic branch)";
        std::ofstream os(fs::path(args.out_dir) / "lsc_gap_report.json");
        nlohmann::json j;
        j["state"] = probe.state;
        j["objective_at_limit"] = probe.objective_at_limit;
        j["inf_estimate"] = probe.inf_estimates.back();
        j["gap"] = probe.gap;
        j["stable"] = probe.stable;
        os << j.dump(2);
      }
    }
  } else {
    PiPlusRunOptions opts;
    opts.iterations = sc.iterations;
    opts.dp = dp;
    const PiPlusRun run = run_piplus(instance, grid, t, opts);
    for (std::size_t i = 0; i < run.trace.size(); ++i) {
      std::ofstream os(fs::path(args.out_dir) / ("trace_" + std::to_string(i) + ".csv"));
      write_piplus_trace_csv(os, instance, grid, run.trace[i]);
      values.push_back(run.trace[i].value);
    }
  }

  reports.push_back(check_monotone(values, nullptr, sc.eps_check));

  // Certified benchmarks also get the envelope and Lyapunov checks.
  if (sc.model_id != "custom-table") {
    const double s_max = [&] {
      double m = 0;
      std::vector<double> x(grid.dim());
      for (std::size_t s = 0; s < grid.num_states(); ++s) {
        grid.state_at(s, x);
        m = std::max(m, instance.model.measure(x));
      }
      return m;
    }();
    const BoundBundle bundle = build_lyapunov(instance.cert, s_max);
    const KLBound beta = instance.cert.declared_case == Certificate::Case::kExponential
                             ? exp_bound(instance.cert, s_max)
                             : stability_bound(bundle);

    // Rollouts from a spread of nodes under the final policy.
    PolicyTable policy(&grid);
    if (sc.algo == "piplus") {
      PiPlusRunOptions opts;
      opts.iterations = std::min(sc.iterations, 1);
      opts.dp = dp;
      const PiPlusRun run = run_piplus(instance, grid, t, opts);
      policy = run.trace.back().best;
    } else {
      std::vector<std::size_t> infeasible;
      policy = improve(t, values.back(), dp.tie_tol, dp.mode, &infeasible);
      if (!infeasible.empty()) policy = PolicyTable(&grid);
    }
    std::vector<Trajectory> trajectories;
    std::vector<double> x(grid.dim());
    const std::size_t stride = std::max<std::size_t>(1, grid.num_states() / 100);
    for (std::size_t s = 0; s < grid.num_states(); s += stride) {
      grid.state_at(s, x);
      if (instance.model.measure(x) <= grid.sigma_abs()) continue;
      if (policy.size() > 0 && policy.feasible(grid.nearest_node(x))) {
        trajectories.push_back(rollout(instance, grid, policy, x, 50));
      }
    }
    if (!trajectories.empty()) {
      const auto sigma = [&](StateRef xs) { return instance.model.measure(xs); };
      reports.push_back(check_kl_envelope(trajectories, beta, sigma, sc.eps_check));
      std::ofstream os(fs::path(args.out_dir) / "trajectory_sample.csv");
      write_trajectory_csv(os, instance, trajectories.front());
    }
    reports.push_back(
        check_lyapunov_sandwich(instance, grid, bundle, values.back(), sc.eps_check));
  }

  {
    nlohmann::json summary;
    summary["iterations"] = values.empty() ? 0 : values.size() - 1;
    summary["feasibility_alarm"] = feasibility_alarm;
    summary["alarm"] = alarm;
    summary["checks"] = nlohmann::json::parse(reports_json(reports));
    write_file(fs::path(args.out_dir) / "summary.json", summary.dump(2));
  }

  if (feasibility_alarm) {
    std::cerr << "feasibility diagnostic: " << alarm << "\n";
    return kExitFeasibility;
  }
  for (const CheckReport& r : reports) {
    if (!r.pass) {
      std::cerr << "check failed: " << r.check << " (worst violation "
                << fmt_double(r.worst_violation) << ")\n";
      return kExitCheckFailed;
    }
  }
  std::cout << "run complete: " << values.size() - 1 << " iterations, all checks passed\n";
  return kExitOk;
}

// Reproduces the infeasibility example end to end on the analytic path and
// shows the regularized algorithm recovering from it.
int cmd_demo_counterexample(const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Instance instance = counterexample_instance();

  const double x_bar = counterexample::kXBar;
  std::cout << "improvement tie at x = " << fmt_double(x_bar) << ":\n";
  std::cout << "  branch u=1 cost  " << fmt_double(counterexample::v1(x_bar)) << " (= 396/28)\n";
  std::cout << "  branch u=0 cost  " << fmt_double(counterexample::v1_prime(x_bar))
            << " (= 381/28)\n";

  // Objective curve at x-bar + 1 against the worse branch's cost.
  const ValueFn v1 = [](StateRef x) { return counterexample::v1(x[0]); };
  const double probe = x_bar + 1.0;
  LscLadderOptions ladder;
  const LscGapReport bad = lsc_gap(instance.model, v1, {&probe, 1}, ladder);
  std::cout << "objective at x-bar+1 under the u=1 branch:\n";
  std::cout << "  g(0)        = " << fmt_double(bad.objective_at_limit) << " (= 696/28)\n";
  std::cout << "  infimum     ~ " << fmt_double(bad.inf_estimates.back()) << " (-> 681/28)\n";
  std::cout << "  gap         ~ " << fmt_double(bad.gap) << " (-> 15/28)\n";
  std::cout << "  stable across ladder: " << (bad.stable ? "yes (no minimizer)" : "no") << "\n";

  const ValueFn v1p = [](StateRef x) { return counterexample::v1_prime(x[0]); };
  const LscGapReport good = lsc_gap(instance.model, v1p, {&probe, 1}, ladder);
  std::cout << "objective at x-bar+1 under the min-cost branch:\n";
  std::cout << "  minimum     = " << fmt_double(good.inf_estimates.back())
            << " attained at u = " << fmt_double(good.limit_input[0]) << " (gap "
            << fmt_double(good.gap) << ")\n";

  // Fig-1-style curve data.
  {
    std::ofstream os(fs::path(out_dir) / "objective_curve.csv");
    os << "u,objective\n";
    const InputBox box = instance.model.admissible_inputs({&probe, 1});
    std::vector<double> xn(1);
    for (int i = 0; i <= 4000; ++i) {
      const double u = box.lo[0] + (box.hi[0] - box.lo[0]) * i / 4000.0;
      instance.model.dynamics({&probe, 1}, {&u, 1}, xn);
      const double g = instance.model.stage_cost({&probe, 1}, {&u, 1}) +
                       counterexample::v1(xn[0]);
      os << fmt_double(u) << "," << fmt_double(g) << "\n";
    }
  }

  // The regularized algorithm on the grid proceeds past iteration 2.
  const Grid& grid = instance.grid;
  const TransitionTable t = build_transitions(instance.model, grid);
  PiPlusRunOptions opts;
  opts.iterations = 5;
  const PiPlusRun run = run_piplus(instance, grid, t, opts);
  std::cout << "recovery: " << run.trace.size() - 1
            << " grid iterations completed, every improvement set non-empty\n";
  const LscGapReport recovered = lsc_gap(
      instance.model, [](StateRef x) { return counterexample::v1_prime(x[0]); }, {&probe, 1},
      ladder);
  std::cout << "  iteration-2 improvement at x-bar+1 attains its minimum at u = "
            << fmt_double(recovered.limit_input[0]) << "\n";

  nlohmann::json j;
  j["tie_values"] = {counterexample::kV1AtXBar, counterexample::kV1PrimeAtXBar};
  j["objective_at_zero"] = bad.objective_at_limit;
  j["infimum_estimate"] = bad.inf_estimates.back();
  j["gap"] = bad.gap;
  j["gap_stable"] = bad.stable;
  j["recovered_minimum_input"] = good.limit_input[0];
  j["piplus_iterations"] = run.trace.size() - 1;
  write_file(fs::path(out_dir) / "counterexample_report.json", j.dump(2));
  return kExitOk;
}

int cmd_bounds(const CommonArgs& args) {
  const Scenario sc = resolve_scenario(args);
  const Instance instance = make_instance(sc);
  const Grid& grid = instance.grid;
  fs::create_directories(args.out_dir);

  double s_max = 0;
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    s_max = std::max(s_max, instance.model.measure(x));
  }
  const BoundBundle bundle = build_lyapunov(instance.cert, s_max);
  const KLBound beta = instance.cert.declared_case == Certificate::Case::kExponential
                           ? exp_bound(instance.cert, s_max)
                           : stability_bound(bundle);
  const auto near = near_opt_bound(bundle, beta);

  const MonotoneFn eps_target(
      "eps_target", [](double s) { return 0.01 * (1.0 + s); }, s_max,
      MonotoneFn::Kind::kStrictlyIncreasing, false);
  const StoppingResult stop = stopping_iteration(bundle, beta, eps_target, s_max, 1000);

  std::ofstream os(fs::path(args.out_dir) / "bounds.csv");
  os << "# i_star = " << (stop.found ? std::to_string(stop.iteration) : "not-found") << "\n";
  write_bounds_csv(os, beta, near, s_max, 32, 40);
  std::cout << "bounds written; i_star = "
            << (stop.found ? std::to_string(stop.iteration) : "not found") << "\n";
  return kExitOk;
}

int cmd_verify(const CommonArgs& args) {
  const Scenario sc = resolve_scenario(args);
  const Instance instance = make_instance(sc);
  const Grid& grid = instance.grid;
  fs::create_directories(args.out_dir);

  const TransitionTable t = build_transitions(instance.model, grid);
  const DpOptions dp = dp_of(sc);

  // Oracle.
  DpOptions oracle_dp = dp;
  const OracleResult oracle = value_iteration(t, oracle_dp);
  {
    std::ofstream os(fs::path(args.out_dir) / "v_star.csv");
    write_value_policy_csv(os, instance, grid, oracle.v_star, &oracle.h_star);
  }

  PiPlusRunOptions opts;
  opts.iterations = sc.iterations;
  opts.dp = dp;
  const PiPlusRun run = run_piplus(instance, grid, t, opts);

  std::vector<ValueTable> values;
  for (const auto& it : run.trace) values.push_back(it.value);

  double s_max = 0;
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    s_max = std::max(s_max, instance.model.measure(x));
  }
  const BoundBundle bundle = build_lyapunov(instance.cert, s_max);
  const KLBound beta = stability_bound(bundle);
  const auto near = near_opt_bound(bundle, beta);
  const auto sigma = [&](StateRef xs) { return instance.model.measure(xs); };

  std::vector<CheckReport> reports;
  reports.push_back(check_monotone(values, &oracle.v_star, sc.eps_check));
  reports.push_back(check_near_optimality(instance, grid, values, oracle.v_star, near,
                                          sc.eps_check));
  reports.push_back(check_near_optimality_trajectory(instance, grid, values, oracle.v_star,
                                                     oracle.h_star, sc.eps_check));

  std::vector<Trajectory> trajectories;
  std::vector<int> labels;
  const std::size_t stride = std::max<std::size_t>(1, grid.num_states() / 100);
  for (std::size_t i = 0; i < run.trace.size(); ++i) {
    for (std::size_t s = 0; s < grid.num_states(); s += stride) {
      grid.state_at(s, x);
      if (instance.model.measure(x) <= grid.sigma_abs()) continue;
      trajectories.push_back(rollout(instance, grid, run.trace[i].best, x, 50));
      labels.push_back(static_cast<int>(i));
    }
  }
  reports.push_back(check_kl_envelope(trajectories, beta, sigma, sc.eps_check, labels));

  for (std::size_t i = 0; i < run.trace.size(); ++i) {
    reports.push_back(check_lyapunov_sandwich(instance, grid, bundle, run.trace[i].value,
                                              sc.eps_check, static_cast<int>(i)));
    reports.push_back(check_lyapunov_decrease(instance, grid, bundle, run.trace[i].value,
                                              run.trace[i].best, sc.eps_check,
                                              static_cast<int>(i)));
  }

  reports.push_back(
      check_same_cost(t, run.trace.back().best, 3, sc.seed, 10 * grid.cell_diameter(), dp));

  write_file(fs::path(args.out_dir) / "verify_report.json", reports_json(reports));

  bool all_pass = true;
  for (const CheckReport& r : reports) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << "  worst="
              << fmt_double(r.worst_violation) << " samples=" << r.samples << "\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy iteration with recursive feasibility, stability certificates and "
               "verification suites"};
  app.require_subcommand(1);

  CommonArgs args;

  CLI::App* run = app.add_subcommand("run", "run PI or PI+ on a scenario");
  run->add_option("--scenario", args.scenario_path, "scenario file")->required();
  run->add_option("--algo", args.algo, "pi | piplus");
  run->add_option("--iters", args.iterations, "iteration budget");
  run->add_option("--select", args.select, "lowest | adversarial | random");
  run->add_option("--seed", args.seed, "selection seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  run->add_option("--out", args.out_dir, "output directory");

  CLI::App* demo = app.add_subcommand("demo-counterexample",
                                      "reproduce the PI infeasibility example");
  demo->add_option("--out", args.out_dir, "output directory");

  CLI::App* bounds = app.add_subcommand("bounds", "emit the certificate bound tables");
  bounds->add_option("--scenario", args.scenario_path, "scenario file")->required();
  bounds->add_option("--out", args.out_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify", "run the full verification battery");
  verify->add_option("--scenario", args.scenario_path, "scenario file")->required();
  verify->add_option("--algo", args.algo, "pi | piplus");
  verify->add_option("--iters", args.iterations, "iteration budget");
  verify->add_option("--seed", args.seed, "rollout seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  verify->add_option("--out", args.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(args);
    if (demo->parsed()) return cmd_demo_counterexample(args.out_dir);
    if (bounds->parsed()) return cmd_bounds(args);
    if (verify->parsed()) return cmd_verify(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FeasibilityError& e) {
    std::cerr << "feasibility diagnostic: " << e.what() << "\n";
    return kExitFeasibility;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitConfig;
}
