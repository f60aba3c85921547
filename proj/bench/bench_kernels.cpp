// Timing comparison of the OpenMP kernels against the serial reference.
// Builds a large LQ discretization and reports per-kernel wall times.

#include <chrono>
#include <cstdio>

#include "piplus/oracle.hpp"
#include "piplus/piplus.hpp"

using namespace piplus;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& body) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    body();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main() {
  LqOptions opts;
  opts.nodes = 8001;
  opts.input_samples = 2001;
  const Instance inst = lq_instance(opts);
  const Grid& grid = inst.grid;
  std::printf("lq grid: %zu states x %d input samples, %d workers\n", grid.num_states(),
              grid.num_input_samples(), worker_count());

  const double t_build_ser = time_best_of(2, [&] {
    (void)build_transitions(inst.model, grid, ExecMode::kSerial);
  });
  const double t_build_par = time_best_of(2, [&] {
    (void)build_transitions(inst.model, grid, ExecMode::kParallel);
  });
  report("build_transitions", t_build_ser, t_build_par);

  const TransitionTable t = build_transitions(inst.model, grid);
  const ValueTable v0 = evaluate_policy_fn(inst.model, grid, inst.initial_policy, DpOptions{});

  const double t_improve_ser = time_best_of(3, [&] {
    (void)improve(t, v0, 1e-9, ExecMode::kSerial);
  });
  const double t_improve_par = time_best_of(3, [&] {
    (void)improve(t, v0, 1e-9, ExecMode::kParallel);
  });
  report("improve", t_improve_ser, t_improve_par);

  DpOptions ser;
  ser.mode = ExecMode::kSerial;
  DpOptions par;
  par.mode = ExecMode::kParallel;
  const double t_vi_ser = time_best_of(2, [&] { (void)value_iteration(t, ser); });
  const double t_vi_par = time_best_of(2, [&] { (void)value_iteration(t, par); });
  report("value_iteration", t_vi_ser, t_vi_par);

  const PolicyTable h = improve(t, v0, 1e-9, ExecMode::kParallel);
  const double t_eval_ser = time_best_of(3, [&] { (void)evaluate_policy(t, h, ser, &v0); });
  const double t_eval_par = time_best_of(3, [&] { (void)evaluate_policy(t, h, par, &v0); });
  report("evaluate_policy", t_eval_ser, t_eval_par);

  // Cross-check: the two modes agree bit for bit.
  const ValueTable a = evaluate_policy(t, h, ser, &v0);
  const ValueTable b = evaluate_policy(t, h, par, &v0);
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    if (a[s] != b[s]) {
      std::printf("MISMATCH at state %zu\n", s);
      return 1;
    }
  }
  std::printf("serial and parallel results identical\n");
  return 0;
}
