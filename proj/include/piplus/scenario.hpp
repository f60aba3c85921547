#pragma once

#include <iosfwd>
#include <string>

#include "piplus/model.hpp"

namespace piplus {

// A fully resolved run configuration.  Loaded from a key/value scenario file
// (sections [model], [grid], [certificate], [tolerances], [run]); unknown
// sections or keys are rejected with the offending line.
struct Scenario {
  std::string model_id = "lq";  // counterexample | lq | custom-table

  // lq parameters
  double a = 0.9, b = 1.0, q = 1.0, r = 1.0;
  double h0_gain = -0.5;
  double u_min = -2.0, u_max = 2.0;

  // counterexample parameters
  double delta = 0.01;

  // custom-table parameters
  std::string table_path;

  // grid
  double x_min = 0, x_max = 0;  // 0/0: use the model default
  int nodes = 0;
  int input_samples = 0;
  double sigma_abs = -1;

  // certificate
  std::string cert_case;  // "", "general", "chi_leq_identity", "exponential"

  // tolerances
  double tie_tol = 1e-9;
  double eval_tol = 1e-9;
  double eps_check = 1e-6;

  // run defaults (CLI flags override)
  std::string algo = "piplus";
  int iterations = 10;
  std::string select = "lowest";
  std::uint64_t seed = 0;
};

Scenario load_scenario(const std::string& path);

// Builds the model/certificate/grid bundle the scenario describes.
Instance make_instance(const Scenario& sc);

// Writes the resolved configuration back out in scenario syntax.
void echo_scenario(const Scenario& sc, std::ostream& os);

// CSV table model: columns state,input,next_state,cost over integer states.
std::vector<TableEntry> load_table_csv(const std::string& path, int* n_states, int* n_inputs);

}  // namespace piplus
