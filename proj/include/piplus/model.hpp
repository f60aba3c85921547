#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "piplus/errors.hpp"
#include "piplus/funcs.hpp"
#include "piplus/parallel.hpp"

namespace piplus {

using StateRef = std::span<const double>;
using InputRef = std::span<const double>;

// Admissible-input box for one state; entries may be infinite for models that
// are never discretized.
struct InputBox {
  std::vector<double> lo;
  std::vector<double> hi;
  bool finite() const;
};

struct SystemModel {
  int state_dim = 1;
  int input_dim = 1;
  std::function<void(StateRef x, InputRef u, std::span<double> out)> dynamics;
  std::function<double(StateRef x, InputRef u)> stage_cost;
  std::function<InputBox(StateRef x)> admissible_inputs;
  std::function<double(StateRef x)> measure;  // sigma
  std::string name;
};

// f(x, u); throws ModelError when a component comes out non-finite.
std::vector<double> step(const SystemModel& model, StateRef x, InputRef u);

// l(x, u); throws ModelError when negative.
double stage_cost(const SystemModel& model, StateRef x, InputRef u);

struct GridAxis {
  double lo = 0;
  double hi = 0;
  int nodes = 2;
  double spacing() const { return (hi - lo) / (nodes - 1); }
};

// Uniform state grid with uniform input sampling of the per-state admissible
// box.  States with sigma <= sigma_abs are absorbing: zero-cost fixed points
// so the undiscounted sums converge on the grid.
class Grid {
 public:
  Grid(std::vector<GridAxis> state_axes, std::vector<int> input_samples, double sigma_abs);

  int dim() const { return static_cast<int>(axes_.size()); }
  int input_dim() const { return static_cast<int>(input_samples_.size()); }
  std::size_t num_states() const { return num_states_; }
  int num_input_samples() const { return num_inputs_; }
  double sigma_abs() const { return sigma_abs_; }
  const std::vector<GridAxis>& axes() const { return axes_; }

  void state_at(std::size_t flat, std::span<double> out) const;
  std::vector<double> state_at(std::size_t flat) const;
  std::size_t flat_index(std::span<const int> coords) const;
  void coords_of(std::size_t flat, std::span<int> out) const;

  // Nearest grid node; sets *clamped when x lies outside the bounds.
  std::size_t nearest_node(StateRef x, bool* clamped = nullptr) const;
  bool in_bounds(StateRef x) const;
  double cell_diameter() const;

  struct CellWeights {
    std::vector<std::size_t> corner;
    std::vector<double> weight;
    bool clamped = false;
  };
  CellWeights interpolation_weights(StateRef x) const;

  // Input sample `flat` of the given admissible box.
  void input_at(int flat, const InputBox& box, std::span<double> out) const;
  std::vector<double> input_at(int flat, const InputBox& box) const;

 private:
  std::vector<GridAxis> axes_;
  std::vector<int> input_samples_;
  std::vector<std::size_t> state_stride_;
  std::vector<int> input_stride_;
  std::size_t num_states_ = 0;
  int num_inputs_ = 0;
  double sigma_abs_ = 0;
};

// Grid-indexed values; +inf marks states without a feasible path to the
// attractor.
class ValueTable {
 public:
  ValueTable() = default;
  explicit ValueTable(const Grid* grid, double init = 0.0);

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  const Grid& grid() const { return *grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  // Multilinear interpolation; exact on nodes.  Returns +inf when every
  // corner carrying weight is infinite; sets *clamped for out-of-bounds x.
  double interpolate(StateRef x, bool* clamped = nullptr) const;

  // Spread (max - min) of the finite corner values of the cell containing x;
  // the "one interpolation cell" slack quantum.
  double cell_spread(StateRef x) const;

  // Spread of values over the node's grid neighbours (+/- one node per axis).
  double neighbor_spread(std::size_t flat) const;

 private:
  const Grid* grid_ = nullptr;
  std::vector<double> values_;
};

// Set-valued policy: per state the admissible input-sample indices that tie
// as minimizers, plus one distinguished selection.
class PolicyTable {
 public:
  PolicyTable() = default;
  explicit PolicyTable(const Grid* grid);

  std::span<const int> set(std::size_t state) const { return sets_[state]; }
  int selection(std::size_t state) const { return selection_[state]; }
  void assign(std::size_t state, std::vector<int> set, int selection);
  bool feasible(std::size_t state) const { return !sets_[state].empty(); }
  std::size_t size() const { return sets_.size(); }
  const Grid& grid() const { return *grid_; }

 private:
  const Grid* grid_ = nullptr;
  std::vector<std::vector<int>> sets_;
  std::vector<int> selection_;
};

// Detectability / initial-policy certificate data.
struct Certificate {
  enum class Case { kGeneral, kChiLeqIdentity, kExponential };
  std::function<double(StateRef)> storage;  // W
  MonotoneFn alpha_w;                       // decrease gain
  MonotoneFn chi_w;                         // cost gain
  MonotoneFn upper_w;                       // bound on W through sigma
  MonotoneFn upper_v;                       // bound on V0 through sigma
  Case declared_case = Case::kGeneral;
  // Linear-envelope constants for the exponential case.
  double c_w = 0, a_w = 0, upper_a_v = 0, upper_a_w = 0;
};

using PolicyFn = std::function<void(StateRef x, std::span<double> u)>;

// A benchmark bundle: model, certificate, initial policy and the default
// discretization.
struct Instance {
  SystemModel model;
  Certificate cert;
  PolicyFn initial_policy;
  Grid grid;
  std::string scenario_id;
};

// ---------------------------------------------------------------------------
// Built-in benchmark: the 1-D recursive-infeasibility example.
// ---------------------------------------------------------------------------

namespace counterexample {

inline constexpr double kXBar = 18.0 / 7.0;
inline constexpr double kV1AtXBar = 396.0 / 28.0;       // cost of the u=1 branch
inline constexpr double kV1PrimeAtXBar = 381.0 / 28.0;  // cost of the u=0 branch
inline constexpr double kObjectiveAtZero = 696.0 / 28.0;
inline constexpr double kInfimum = 681.0 / 28.0;
inline constexpr double kGap = 15.0 / 28.0;

double dynamics(double x, double u);
double stage_cost(double x, double u);

// Cost of the zero policy, piecewise linear with breakpoints at the integers.
double v0(double x);

// Costs of the two iteration-1 policies that differ at x-bar only.
double v1(double x);        // ties resolved to u = 1
double v1_prime(double x);  // ties resolved to u = 0

}  // namespace counterexample

struct CounterexampleOptions {
  double delta = 0.01;       // input box is [-delta, 1]
  double x_max = 4.0;
  int nodes = 2001;
  int input_samples = 201;
  double sigma_abs = -1;     // < 0: half a grid cell
};
Instance counterexample_instance(const CounterexampleOptions& opts = {});

// ---------------------------------------------------------------------------
// Built-in benchmark: scalar linear-quadratic regulation.
// ---------------------------------------------------------------------------

struct LqOptions {
  double a = 0.9;
  double b = 1.0;
  double q = 1.0;
  double r = 1.0;
  double h0_gain = -0.5;
  double u_min = -2.0;
  double u_max = 2.0;
  double x_max = 3.0;
  int nodes = 2001;
  int input_samples = 1001;
  double sigma_abs = 5e-5;  // dominates the input-quantization floor
  bool exponential_constants = true;
};
Instance lq_instance(const LqOptions& opts = {});

// Closed-loop quadratic cost coefficient of the gain policy u = k x.
double lq_policy_cost_coefficient(double a, double b, double q, double r, double k);

// Table-driven model over integer states 0..n-1 and integer inputs 0..m-1.
struct TableEntry {
  int state = 0;
  int input = 0;
  int next_state = 0;
  double cost = 0;
};
Instance table_instance(int n_states, int n_inputs, std::vector<TableEntry> entries,
                        double sigma_abs = 0.25);

// ---------------------------------------------------------------------------
// Precomputed grid transitions: the substrate every sweep kernel runs on.
// ---------------------------------------------------------------------------

struct TransitionTable {
  const Grid* grid = nullptr;
  std::size_t states = 0;
  int actions = 0;
  int corners = 0;  // interpolation corners per (state, action)
  std::vector<double> cost;       // [s * actions + a]
  std::vector<std::int32_t> corner;  // [(s * actions + a) * corners + c]
  std::vector<double> weight;
  std::vector<std::uint8_t> clamped;    // next state left the grid
  std::vector<std::uint8_t> absorbing;  // per state

  std::size_t row(std::size_t s, int a) const { return s * actions + a; }
};

TransitionTable build_transitions(const SystemModel& model, const Grid& grid,
                                  ExecMode mode = ExecMode::kParallel);

// Input value realized by sample index `action` at state x.
std::vector<double> input_value(const SystemModel& model, const Grid& grid, StateRef x,
                                int action);

// ---------------------------------------------------------------------------
// Sampled validation of the standing assumptions.
// ---------------------------------------------------------------------------

struct Violation {
  std::string what;
  std::vector<double> x;
  std::vector<double> u;
  double magnitude = 0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  int checks_run = 0;
  bool ok() const { return violations.empty(); }
};

struct ValidationOptions {
  double eps_cert = 1e-6;
  int max_transition_samples = 200000;  // (state, input) pairs for SA2
  int level_probe_doublings = 20;       // input magnitudes 2^j for level-boundedness
};

// Checks l >= 0, non-empty U, the SA2 inequalities, the SA3 bound on the
// supplied V0 table, level-boundedness of l in u and compactness of sigma
// level sets within the grid.  Report-only.
ValidationReport validate_assumptions(const Instance& instance, const Grid& grid,
                                      const ValueTable& v0,
                                      const ValidationOptions& opts = {});

}  // namespace piplus
