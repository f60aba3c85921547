#include "piplus/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <mutex>
#include <utility>

namespace piplus {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool InputBox::finite() const {
  for (double v : lo) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : hi) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<double> step(const SystemModel& model, StateRef x, InputRef u) {
  std::vector<double> out(model.state_dim);
  model.dynamics(x, u, out);
  for (double v : out) {
    if (!std::isfinite(v)) {
      throw ModelError("dynamics produced a non-finite state component");
    }
  }
  return out;
}

double stage_cost(const SystemModel& model, StateRef x, InputRef u) {
  const double c = model.stage_cost(x, u);
  if (!(c >= 0) || !std::isfinite(c)) {
    throw ModelError("stage cost must be finite and non-negative");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

Grid::Grid(std::vector<GridAxis> state_axes, std::vector<int> input_samples, double sigma_abs)
    : axes_(std::move(state_axes)), input_samples_(std::move(input_samples)),
      sigma_abs_(sigma_abs) {
  if (axes_.empty()) throw ConfigError("Grid: at least one state axis required");
  num_states_ = 1;
  state_stride_.resize(axes_.size());
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const GridAxis& ax = axes_[d];
    if (ax.nodes < 2 || !(ax.hi > ax.lo)) throw ConfigError("Grid: bad state axis");
    state_stride_[d] = num_states_;
    num_states_ *= static_cast<std::size_t>(ax.nodes);
  }
  if (input_samples_.empty()) throw ConfigError("Grid: at least one input dimension required");
  num_inputs_ = 1;
  input_stride_.resize(input_samples_.size());
  for (std::size_t d = 0; d < input_samples_.size(); ++d) {
    if (input_samples_[d] < 1) throw ConfigError("Grid: input sample count must be >= 1");
    input_stride_[d] = num_inputs_;
    num_inputs_ *= input_samples_[d];
  }
  if (sigma_abs_ < 0) throw ConfigError("Grid: negative absorption radius");
}

void Grid::state_at(std::size_t flat, std::span<double> out) const {
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const std::size_t i = (flat / state_stride_[d]) % axes_[d].nodes;
    out[d] = axes_[d].lo + static_cast<double>(i) * axes_[d].spacing();
  }
}

std::vector<double> Grid::state_at(std::size_t flat) const {
  std::vector<double> out(axes_.size());
  state_at(flat, out);
  return out;
}

std::size_t Grid::flat_index(std::span<const int> coords) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    flat += state_stride_[d] * static_cast<std::size_t>(coords[d]);
  }
  return flat;
}

void Grid::coords_of(std::size_t flat, std::span<int> out) const {
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    out[d] = static_cast<int>((flat / state_stride_[d]) % axes_[d].nodes);
  }
}

std::size_t Grid::nearest_node(StateRef x, bool* clamped) const {
  if (clamped) *clamped = false;
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const GridAxis& ax = axes_[d];
    double t = (x[d] - ax.lo) / ax.spacing();
    if (t < 0) {
      t = 0;
      if (clamped) *clamped = true;
    }
    if (t > ax.nodes - 1) {
      t = ax.nodes - 1;
      if (clamped) *clamped = true;
    }
    const auto i = static_cast<std::size_t>(std::llround(t));
    flat += state_stride_[d] * std::min<std::size_t>(i, ax.nodes - 1);
  }
  return flat;
}

bool Grid::in_bounds(StateRef x) const {
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    if (x[d] < axes_[d].lo || x[d] > axes_[d].hi) return false;
  }
  return true;
}

double Grid::cell_diameter() const {
  double sq = 0;
  for (const GridAxis& ax : axes_) sq += ax.spacing() * ax.spacing();
  return std::sqrt(sq);
}

Grid::CellWeights Grid::interpolation_weights(StateRef x) const {
  const int d = dim();
  std::vector<std::size_t> base(d);
  std::vector<double> frac(d);
  CellWeights cw;
  for (int a = 0; a < d; ++a) {
    const GridAxis& ax = axes_[a];
    double t = (x[a] - ax.lo) / ax.spacing();
    if (t < 0) {
      t = 0;
      cw.clamped = true;
    }
    if (t > ax.nodes - 1) {
      t = ax.nodes - 1;
      cw.clamped = true;
    }
    double i0 = std::floor(t);
    double f = t - i0;
    if (i0 >= ax.nodes - 1) {
      i0 = ax.nodes - 2;
      f = 1.0;
    }
    base[a] = static_cast<std::size_t>(i0);
    frac[a] = f;
  }
  const int corners = 1 << d;
  cw.corner.resize(corners);
  cw.weight.resize(corners);
  for (int mask = 0; mask < corners; ++mask) {
    std::size_t flat = 0;
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      const bool hi = (mask >> a) & 1;
      flat += state_stride_[a] * (base[a] + (hi ? 1 : 0));
      w *= hi ? frac[a] : 1.0 - frac[a];
    }
    cw.corner[mask] = flat;
    cw.weight[mask] = w;
  }
  return cw;
}

void Grid::input_at(int flat, const InputBox& box, std::span<double> out) const {
  if (!box.finite()) throw ModelError("Grid::input_at: admissible box must be finite");
  for (std::size_t d = 0; d < input_samples_.size(); ++d) {
    const int m = input_samples_[d];
    const int i = (flat / input_stride_[d]) % m;
    if (m == 1) {
      out[d] = 0.5 * (box.lo[d] + box.hi[d]);
    } else {
      out[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * static_cast<double>(i) / (m - 1);
    }
  }
}

std::vector<double> Grid::input_at(int flat, const InputBox& box) const {
  std::vector<double> out(input_samples_.size());
  input_at(flat, box, out);
  return out;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

ValueTable::ValueTable(const Grid* grid, double init)
    : grid_(grid), values_(grid->num_states(), init) {}

double ValueTable::interpolate(StateRef x, bool* clamped) const {
  const Grid::CellWeights cw = grid_->interpolation_weights(x);
  if (clamped) *clamped = cw.clamped;
  double acc = 0;
  for (std::size_t c = 0; c < cw.corner.size(); ++c) {
    const double w = cw.weight[c];
    if (w == 0) continue;
    const double v = values_[cw.corner[c]];
    if (!std::isfinite(v)) return kInf;
    acc += w * v;
  }
  return acc;
}

double ValueTable::cell_spread(StateRef x) const {
  const Grid::CellWeights cw = grid_->interpolation_weights(x);
  double lo = kInf, hi = -kInf;
  for (std::size_t c = 0; c < cw.corner.size(); ++c) {
    const double v = values_[cw.corner[c]];
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi >= lo)) return 0;
  return hi - lo;
}

double ValueTable::neighbor_spread(std::size_t flat) const {
  const double v = values_[flat];
  if (!std::isfinite(v)) return 0;
  const int d = grid_->dim();
  std::vector<int> coords(d);
  grid_->coords_of(flat, coords);
  double spread = 0;
  for (int a = 0; a < d; ++a) {
    for (int dir : {-1, 1}) {
      const int i = coords[a] + dir;
      if (i < 0 || i >= grid_->axes()[a].nodes) continue;
      std::vector<int> c = coords;
      c[a] = i;
      const double w = values_[grid_->flat_index(c)];
      if (std::isfinite(w)) spread = std::max(spread, std::abs(w - v));
    }
  }
  return spread;
}

PolicyTable::PolicyTable(const Grid* grid)
    : grid_(grid), sets_(grid->num_states()), selection_(grid->num_states(), -1) {}

void PolicyTable::assign(std::size_t state, std::vector<int> set, int selection) {
  sets_[state] = std::move(set);
  selection_[state] = selection;
}

// ---------------------------------------------------------------------------
// Counterexample benchmark
// ---------------------------------------------------------------------------

namespace counterexample {

double dynamics(double x, double u) { return (1.0 - u) * std::max(0.0, std::abs(x) - 1.0); }

double stage_cost(double x, double u) {
  const double g1 = std::max(std::min(2.0 * (1.0 - u), 1.0), 0.0);
  const double g2 = std::max(std::min(2.0 * u, 1.0), 0.0);
  const double ax = std::abs(x);
  return 3.0 * ax * g1 + (ax + 1.75 * ax * ax) * g2;
}

double v0(double x) {
  const double s = std::abs(x);
  const double n = std::floor(s);
  return 3.0 * ((n + 1.0) * s - 0.5 * n * (n + 1.0));
}

namespace {
// One-step cost of taking u = 1 from state s (ends at the origin).
double jump_cost(double s) { return s + 1.75 * s * s; }
}  // namespace

double v1(double x) {
  double s = std::abs(x);
  if (s == 0) return 0;
  double acc = 0;
  while (s > kXBar) {
    acc += 3.0 * s;  // u = 0 branch above the tie point
    s -= 1.0;
    if (s <= 0) return acc;
  }
  return acc + jump_cost(s);
}

double v1_prime(double x) {
  double s = std::abs(x);
  if (s == 0) return 0;
  double acc = 0;
  while (s >= kXBar) {  // the tie at x-bar is resolved to u = 0 here
    acc += 3.0 * s;
    s -= 1.0;
    if (s <= 0) return acc;
  }
  return acc + jump_cost(s);
}

}  // namespace counterexample

Instance counterexample_instance(const CounterexampleOptions& opts) {
  SystemModel model;
  model.state_dim = 1;
  model.input_dim = 1;
  model.name = "counterexample";
  model.dynamics = [](StateRef x, InputRef u, std::span<double> out) {
    out[0] = counterexample::dynamics(x[0], u[0]);
  };
  model.stage_cost = [](StateRef x, InputRef u) {
    return counterexample::stage_cost(x[0], u[0]);
  };
  const double delta = opts.delta;
  model.admissible_inputs = [delta](StateRef) { return InputBox{{-delta}, {1.0}}; };
  model.measure = [](StateRef x) { return std::abs(x[0]); };

  const GridAxis axis{-opts.x_max, opts.x_max, opts.nodes};
  const double sigma_abs = opts.sigma_abs >= 0 ? opts.sigma_abs : 0.5 * axis.spacing();
  Grid grid({axis}, {opts.input_samples}, sigma_abs);

  Certificate cert;
  cert.storage = [](StateRef) { return 0.0; };
  const double s_max = opts.x_max;
  cert.alpha_w = MonotoneFn::identity(s_max);
  cert.chi_w = MonotoneFn::identity(s_max);
  cert.upper_w = MonotoneFn::zero(s_max);
  cert.upper_v = MonotoneFn("v0_envelope", [](double s) { return counterexample::v0(s); },
                            s_max, MonotoneFn::Kind::kStrictlyIncreasing, true);
  cert.declared_case = Certificate::Case::kChiLeqIdentity;

  Instance inst{std::move(model), std::move(cert),
                [](StateRef, std::span<double> u) { u[0] = 0.0; }, std::move(grid),
                "counterexample"};
  return inst;
}

// ---------------------------------------------------------------------------
// Scalar LQ benchmark
// ---------------------------------------------------------------------------

double lq_policy_cost_coefficient(double a, double b, double q, double r, double k) {
  const double cl = a + b * k;
  if (!(std::abs(cl) < 1.0)) {
    throw ConfigError("lq: the gain " + std::to_string(k) + " is not stabilizing");
  }
  return (q + r * k * k) / (1.0 - cl * cl);
}

Instance lq_instance(const LqOptions& opts) {
  if (!(opts.q > 0) || !(opts.r >= 0)) throw ConfigError("lq: require q > 0 and r >= 0");
  const double p0 = lq_policy_cost_coefficient(opts.a, opts.b, opts.q, opts.r, opts.h0_gain);

  SystemModel model;
  model.state_dim = 1;
  model.input_dim = 1;
  model.name = "lq";
  const double a = opts.a, b = opts.b, q = opts.q, r = opts.r;
  model.dynamics = [a, b](StateRef x, InputRef u, std::span<double> out) {
    out[0] = a * x[0] + b * u[0];
  };
  model.stage_cost = [q, r](StateRef x, InputRef u) {
    return q * x[0] * x[0] + r * u[0] * u[0];
  };
  const double u_min = opts.u_min, u_max = opts.u_max;
  model.admissible_inputs = [u_min, u_max](StateRef) { return InputBox{{u_min}, {u_max}}; };
  model.measure = [](StateRef x) { return x[0] * x[0]; };

  const GridAxis axis{-opts.x_max, opts.x_max, opts.nodes};
  Grid grid({axis}, {opts.input_samples}, opts.sigma_abs);

  Certificate cert;
  cert.storage = [](StateRef) { return 0.0; };
  const double s_max = opts.x_max * opts.x_max;
  cert.alpha_w = MonotoneFn::identity(s_max);
  cert.chi_w = MonotoneFn::linear("chi_w", 1.0 / q, s_max);
  cert.upper_w = MonotoneFn::zero(s_max);
  cert.upper_v = MonotoneFn::linear("upper_v", p0, s_max);
  cert.declared_case = q >= 1.0 ? Certificate::Case::kChiLeqIdentity : Certificate::Case::kGeneral;
  if (opts.exponential_constants) {
    cert.c_w = 1.0 / q;
    cert.a_w = 1.0;
    cert.upper_a_v = p0;
    cert.upper_a_w = 0.0;
  }

  const double k0 = opts.h0_gain;
  Instance inst{std::move(model), std::move(cert),
                [k0](StateRef x, std::span<double> u) { u[0] = k0 * x[0]; }, std::move(grid),
                "lq"};
  return inst;
}

// ---------------------------------------------------------------------------
// Table-driven model
// ---------------------------------------------------------------------------

Instance table_instance(int n_states, int n_inputs, std::vector<TableEntry> entries,
                        double sigma_abs) {
  if (n_states < 2 || n_inputs < 1) throw ConfigError("table model: need >= 2 states");
  std::vector<int> next(static_cast<std::size_t>(n_states) * n_inputs, -1);
  std::vector<double> cost(static_cast<std::size_t>(n_states) * n_inputs, 0.0);
  for (const TableEntry& e : entries) {
    if (e.state < 0 || e.state >= n_states || e.input < 0 || e.input >= n_inputs ||
        e.next_state < 0 || e.next_state >= n_states) {
      throw ConfigError("table model: entry out of range");
    }
    if (e.cost < 0) throw ConfigError("table model: negative cost entry");
    next[static_cast<std::size_t>(e.state) * n_inputs + e.input] = e.next_state;
    cost[static_cast<std::size_t>(e.state) * n_inputs + e.input] = e.cost;
  }
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (next[i] < 0) {
      throw ConfigError("table model: missing entry for state " +
                        std::to_string(i / n_inputs) + ", input " +
                        std::to_string(i % n_inputs));
    }
  }

  SystemModel model;
  model.state_dim = 1;
  model.input_dim = 1;
  model.name = "custom-table";
  auto shared_next = std::make_shared<std::vector<int>>(std::move(next));
  auto shared_cost = std::make_shared<std::vector<double>>(std::move(cost));
  model.dynamics = [shared_next, n_inputs](StateRef x, InputRef u, std::span<double> out) {
    const int s = static_cast<int>(std::llround(x[0]));
    const int a = static_cast<int>(std::llround(u[0]));
    out[0] = static_cast<double>((*shared_next)[static_cast<std::size_t>(s) * n_inputs + a]);
  };
  model.stage_cost = [shared_cost, n_inputs](StateRef x, InputRef u) {
    const int s = static_cast<int>(std::llround(x[0]));
    const int a = static_cast<int>(std::llround(u[0]));
    return (*shared_cost)[static_cast<std::size_t>(s) * n_inputs + a];
  };
  const double u_hi = static_cast<double>(n_inputs - 1);
  model.admissible_inputs = [u_hi](StateRef) { return InputBox{{0.0}, {u_hi}}; };
  model.measure = [](StateRef x) { return std::abs(x[0]); };

  Grid grid({GridAxis{0.0, static_cast<double>(n_states - 1), n_states}}, {n_inputs}, sigma_abs);

  Certificate cert;  // table models carry no certificate by default
  cert.storage = [](StateRef) { return 0.0; };
  const double s_max = static_cast<double>(n_states - 1);
  cert.alpha_w = MonotoneFn::identity(s_max);
  cert.chi_w = MonotoneFn::identity(s_max);
  cert.upper_w = MonotoneFn::zero(s_max);
  cert.upper_v = MonotoneFn::identity(s_max);

  Instance inst{std::move(model), std::move(cert),
                [](StateRef, std::span<double> u) { u[0] = 0.0; }, std::move(grid),
                "custom-table"};
  return inst;
}

// ---------------------------------------------------------------------------
// Transition precomputation
// ---------------------------------------------------------------------------

TransitionTable build_transitions(const SystemModel& model, const Grid& grid, ExecMode mode) {
  TransitionTable t;
  t.grid = &grid;
  t.states = grid.num_states();
  t.actions = grid.num_input_samples();
  t.corners = 1 << grid.dim();
  t.cost.assign(t.states * t.actions, 0.0);
  t.corner.assign(t.states * t.actions * t.corners, 0);
  t.weight.assign(t.states * t.actions * t.corners, 0.0);
  t.clamped.assign(t.states * t.actions, 0);
  t.absorbing.assign(t.states, 0);

  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string error;

  parallel_for(t.states, mode, [&](std::size_t s) {
    if (failed.load(std::memory_order_relaxed)) return;
    try {
      std::vector<double> x(grid.dim());
      std::vector<double> u(grid.input_dim());
      std::vector<double> xn(grid.dim());
      grid.state_at(s, x);
      t.absorbing[s] = model.measure(x) <= grid.sigma_abs() ? 1 : 0;
      const InputBox box = model.admissible_inputs(x);
      for (int a = 0; a < t.actions; ++a) {
        grid.input_at(a, box, u);
        const std::size_t row = t.row(s, a);
        t.cost[row] = stage_cost(model, x, u);
        model.dynamics(x, u, xn);
        for (double v : xn) {
          if (!std::isfinite(v)) throw ModelError("dynamics produced a non-finite next state");
        }
        const Grid::CellWeights cw = grid.interpolation_weights(xn);
        t.clamped[row] = cw.clamped ? 1 : 0;
        for (int c = 0; c < t.corners; ++c) {
          t.corner[row * t.corners + c] = static_cast<std::int32_t>(cw.corner[c]);
          t.weight[row * t.corners + c] = cw.weight[c];
        }
      }
    } catch (const std::exception& e) {
      bool expected = false;
      if (failed.compare_exchange_strong(expected, true)) {
        std::lock_guard<std::mutex> lock(error_mutex);
        error = e.what();
      }
    }
  });
  if (failed.load()) throw ModelError("build_transitions: " + error);
  return t;
}

std::vector<double> input_value(const SystemModel& model, const Grid& grid, StateRef x,
                                int action) {
  const InputBox box = model.admissible_inputs(x);
  return grid.input_at(action, box);
}

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

namespace {

void record(ValidationReport& report, std::string what, std::vector<double> x,
            std::vector<double> u, double magnitude) {
  report.violations.push_back({std::move(what), std::move(x), std::move(u), magnitude});
}

}  // namespace

ValidationReport validate_assumptions(const Instance& instance, const Grid& grid,
                                      const ValueTable& v0, const ValidationOptions& opts) {
  ValidationReport report;
  const SystemModel& model = instance.model;
  const Certificate& cert = instance.cert;

  const std::size_t n_states = grid.num_states();
  const int n_actions = grid.num_input_samples();
  const std::size_t total = n_states * static_cast<std::size_t>(n_actions);
  const std::size_t stride =
      std::max<std::size_t>(1, total / std::max(1, opts.max_transition_samples));

  std::vector<double> x(grid.dim());
  std::vector<double> u(grid.input_dim());
  std::vector<double> xn(grid.dim());

  double sigma_max = 0;
  for (std::size_t s = 0; s < n_states; ++s) {
    grid.state_at(s, x);
    sigma_max = std::max(sigma_max, model.measure(x));
  }

  for (std::size_t idx = 0; idx < total; idx += stride) {
    const std::size_t s = idx / n_actions;
    const int a = static_cast<int>(idx % n_actions);
    grid.state_at(s, x);
    const InputBox box = model.admissible_inputs(x);
    ++report.checks_run;
    if (box.lo.size() != static_cast<std::size_t>(model.input_dim) ||
        box.hi.size() != box.lo.size()) {
      record(report, "admissible-input box has wrong dimension", x, {}, 0);
      continue;
    }
    bool empty = false;
    for (std::size_t d = 0; d < box.lo.size(); ++d) {
      if (!(box.lo[d] <= box.hi[d])) empty = true;
    }
    if (empty) {
      record(report, "empty admissible-input set", x, {}, 0);
      continue;
    }
    if (!box.finite()) continue;  // level-boundedness probe below handles this
    grid.input_at(a, box, u);
    const double cost = model.stage_cost(x, u);
    if (!(cost >= 0) || !std::isfinite(cost)) {
      record(report, "negative or non-finite stage cost", x, u,
             std::isfinite(cost) ? -cost : kInf);
      continue;
    }
    model.dynamics(x, u, xn);
    bool finite_next = true;
    for (double v : xn) finite_next = finite_next && std::isfinite(v);
    if (!finite_next) {
      record(report, "non-finite next state", x, u, kInf);
      continue;
    }
    // SA2 decrease.
    const double w_x = cert.storage(x);
    const double w_n = cert.storage(xn);
    const double sigma = model.measure(x);
    const double rhs = -cert.alpha_w(sigma) + cert.chi_w(cost);
    const double slack = opts.eps_cert * (1.0 + std::abs(w_x) + cert.chi_w(cost));
    if (w_n - w_x > rhs + slack) {
      record(report, "SA2 decrease violated", x, u, w_n - w_x - rhs);
    }
    // SA2 upper bound on W.
    const double w_bound = cert.upper_w(sigma);
    if (w_x > w_bound + opts.eps_cert * (1.0 + w_bound)) {
      record(report, "SA2 storage bound violated", x, {}, w_x - w_bound);
    }
  }

  // SA3: V0 <= upper_v(sigma).
  for (std::size_t s = 0; s < n_states; ++s) {
    grid.state_at(s, x);
    const double sigma = model.measure(x);
    const double bound = cert.upper_v(sigma);
    ++report.checks_run;
    if (std::isfinite(v0[s]) && v0[s] > bound + opts.eps_cert * (1.0 + bound)) {
      record(report, "SA3 initial-cost bound violated", x, {}, v0[s] - bound);
    }
  }

  // Level-boundedness of the stage cost in u (probe along each input axis).
  {
    grid.state_at(n_states / 2, x);
    const InputBox box = model.admissible_inputs(x);
    ++report.checks_run;
    if (!box.finite()) {
      std::vector<double> probe(grid.input_dim(), 0.0);
      const double ref = model.stage_cost(x, probe) + 1.0;
      bool bounded = false;
      for (int d = 0; d < grid.input_dim() && !bounded; ++d) {
        double mag = 1.0;
        for (int j = 0; j < opts.level_probe_doublings; ++j) {
          probe.assign(grid.input_dim(), 0.0);
          probe[d] = mag;
          if (model.stage_cost(x, probe) > ref) {
            bounded = true;
            break;
          }
          mag *= 2.0;
        }
      }
      if (!bounded) {
        record(report, "stage cost is not level-bounded in u", x, {}, 0);
      }
    }
  }

  // Level sets of sigma must stay inside the grid: boundary nodes must sit
  // above the probe level.
  {
    const double level = 0.5 * sigma_max;
    std::vector<int> coords(grid.dim());
    for (std::size_t s = 0; s < n_states; ++s) {
      grid.coords_of(s, coords);
      bool boundary = false;
      for (int d = 0; d < grid.dim(); ++d) {
        if (coords[d] == 0 || coords[d] == grid.axes()[d].nodes - 1) boundary = true;
      }
      if (!boundary) continue;
      grid.state_at(s, x);
      ++report.checks_run;
      if (model.measure(x) <= level) {
        record(report, "sigma level set reaches the grid boundary", x, {},
               level - model.measure(x));
        break;
      }
    }
  }

  return report;
}

}  // namespace piplus
