#pragma once

#include <iosfwd>
#include <string>

#include "piplus/piplus.hpp"
#include "piplus/verify.hpp"

namespace piplus {

// Deterministic float formatting shared by every artifact writer, so
// identical runs produce byte-identical files.
std::string fmt_double(double v);

// Per-iteration trace row: state coords, value, selected input, set sizes.
void write_pi_trace_csv(std::ostream& os, const Instance& instance, const Grid& grid,
                        const PiIterate& it);
void write_piplus_trace_csv(std::ostream& os, const Instance& instance, const Grid& grid,
                            const PiPlusIterate& it);

// Value/policy export in the same schema (used for the oracle tables too).
void write_value_policy_csv(std::ostream& os, const Instance& instance, const Grid& grid,
                            const ValueTable& v, const PolicyTable* policy);

// (s, k, beta, near-opt envelope) lattice.
void write_bounds_csv(std::ostream& os, const KLBound& beta,
                      const std::function<double(double, int)>& near_opt, double s_max,
                      int s_points, int k_max);

// (k, state..., u..., cost, sigma) rows.
void write_trajectory_csv(std::ostream& os, const Instance& instance, const Trajectory& traj);

// {check, pass, worst_violation, witness:{state, i, k}, n_samples}
std::string report_json(const CheckReport& report);
std::string reports_json(std::span<const CheckReport> reports);

}  // namespace piplus
