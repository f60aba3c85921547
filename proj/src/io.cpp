#include "piplus/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace piplus {

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_header(std::ostream& os, const Grid& grid, const char* extra) {
  for (int d = 0; d < grid.dim(); ++d) os << "state_" << d << ",";
  os << extra << "\n";
}

void write_state(std::ostream& os, std::span<const double> x) {
  for (double c : x) os << fmt_double(c) << ",";
}

void write_selected_input(std::ostream& os, const Instance& instance, const Grid& grid,
                          StateRef x, int action) {
  std::vector<double> u = input_value(instance.model, grid, x, action);
  for (std::size_t d = 0; d < u.size(); ++d) {
    os << fmt_double(u[d]);
    if (d + 1 < u.size()) os << ",";
  }
}

}  // namespace

void write_pi_trace_csv(std::ostream& os, const Instance& instance, const Grid& grid,
                        const PiIterate& it) {
  write_header(os, grid, "v,u,set_size");
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    write_state(os, x);
    os << fmt_double(it.value[s]) << ",";
    const int a = it.policy.selection(s);
    if (a >= 0) {
      write_selected_input(os, instance, grid, x, a);
    } else {
      os << "nan";
    }
    os << "," << it.policy.set(s).size() << "\n";
  }
}

void write_piplus_trace_csv(std::ostream& os, const Instance& instance, const Grid& grid,
                            const PiPlusIterate& it) {
  write_header(os, grid, "v,u,set_size,set_size_r,set_size_rstar");
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    write_state(os, x);
    os << fmt_double(it.value[s]) << ",";
    const int a = it.best.selection(s);
    if (a >= 0) {
      write_selected_input(os, instance, grid, x, a);
    } else {
      os << "nan";
    }
    os << "," << it.improved.set(s).size() << "," << it.regularized.set(s).size() << ","
       << it.best.set(s).size() << "\n";
  }
}

void write_value_policy_csv(std::ostream& os, const Instance& instance, const Grid& grid,
                            const ValueTable& v, const PolicyTable* policy) {
  write_header(os, grid, "v,u,set_size");
  std::vector<double> x(grid.dim());
  for (std::size_t s = 0; s < grid.num_states(); ++s) {
    grid.state_at(s, x);
    write_state(os, x);
    os << fmt_double(v[s]) << ",";
    if (policy && policy->selection(s) >= 0) {
      write_selected_input(os, instance, grid, x, policy->selection(s));
      os << "," << policy->set(s).size();
    } else {
      os << "nan,0";
    }
    os << "\n";
  }
}

void write_bounds_csv(std::ostream& os, const KLBound& beta,
                      const std::function<double(double, int)>& near_opt, double s_max,
                      int s_points, int k_max) {
  os << "s,k,beta,near_opt\n";
  for (int i = 0; i <= s_points; ++i) {
    const double s = s_max * static_cast<double>(i) / s_points;
    for (int k = 0; k <= k_max; ++k) {
      os << fmt_double(s) << "," << k << "," << fmt_double(beta(s, k)) << ","
         << fmt_double(near_opt(s, k)) << "\n";
    }
  }
}

void write_trajectory_csv(std::ostream& os, const Instance& instance, const Trajectory& traj) {
  const std::size_t dims = traj.states.empty() ? 0 : traj.states.front().size();
  os << "k,";
  for (std::size_t d = 0; d < dims; ++d) os << "state_" << d << ",";
  const std::size_t udims = traj.inputs.empty() ? 1 : traj.inputs.front().size();
  for (std::size_t d = 0; d < udims; ++d) os << "u_" << d << ",";
  os << "cost,sigma\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << k << ",";
    write_state(os, traj.states[k]);
    for (std::size_t d = 0; d < udims; ++d) {
      if (k < traj.inputs.size()) {
        os << fmt_double(traj.inputs[k][d]) << ",";
      } else {
        os << "nan,";
      }
    }
    os << (k < traj.costs.size() ? fmt_double(traj.costs[k]) : "nan") << ","
       << fmt_double(instance.model.measure(traj.states[k])) << "\n";
  }
}

namespace {

nlohmann::json report_to_json(const CheckReport& report) {
  nlohmann::json j;
  j["check"] = report.check;
  j["pass"] = report.pass;
  j["worst_violation"] = report.worst_violation;
  j["witness"] = {{"state", report.witness.state},
                  {"i", report.witness.iteration},
                  {"k", report.witness.k}};
  j["n_samples"] = report.samples;
  return j;
}

}  // namespace

std::string report_json(const CheckReport& report) { return report_to_json(report).dump(2); }

std::string reports_json(std::span<const CheckReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CheckReport& r : reports) arr.push_back(report_to_json(r));
  return arr.dump(2);
}

}  // namespace piplus
