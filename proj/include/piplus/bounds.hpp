#pragma once

#include "piplus/model.hpp"

namespace piplus {

// The explicit certificate package built from a detectability certificate:
// the Lyapunov shaping functions, the comparison functions sandwiching
// Y = rho_v(V) + rho_w(W), and the near-optimality envelope.
struct BoundBundle {
  Certificate::Case used_case = Certificate::Case::kGeneral;
  MonotoneFn rho_v;
  MonotoneFn rho_w;
  MonotoneFn alpha_y;      // strict decrease gain
  MonotoneFn upper_y;      // upper sandwich
  MonotoneFn lower_y;      // lower sandwich
  MonotoneFn tilde_y;      // alpha_y o upper_y^{-1}
  MonotoneFn alpha_hat_env;  // nondecreasing envelope of the clamped near-opt gap bound
  bool chi_inverse_clamped = false;  // chi_w^{-1} was evaluated above its range
  bool case_fallback = false;        // declared chi<=I was refuted by sampling
  double case_fallback_witness = 0;
  double s_max = 0;
};

struct BoundBuildOptions {
  int envelope_grid = kEnvelopeGrid;
  int verify_samples = 256;  // samples used to vet a declared chi <= identity
  double quad_tol = kTolQuad;
};

// Builds rho_v, rho_w, alpha_y, upper_y, lower_y and the near-optimality
// envelope for the given certificate on measures in [0, s_max].  A declared
// chi<=identity case is verified by sampling and silently downgraded to the
// general construction when refuted (flagged in the bundle).
BoundBundle build_lyapunov(const Certificate& cert, double s_max,
                           const BoundBuildOptions& opts = {});

// The iteration-independent stability bound
//   beta(s, k) = lower_y^{-1}((I - tilde_y)^(k)(upper_y(s))).
KLBound stability_bound(const BoundBundle& bundle, int envelope_grid = kEnvelopeGrid);

// Exponential form (requires the linear-envelope constants):
//   beta(s, k) = (a_y_bar / a_y_lower) (1 - a_y_tilde)^k s.
KLBound exp_bound(const Certificate& cert, double s_max);

// (s, i) -> alpha_tilde(beta(s, i)): the computable near-optimality envelope.
std::function<double(double, int)> near_opt_bound(const BoundBundle& bundle,
                                                  const KLBound& beta);

struct StoppingResult {
  bool found = false;
  int iteration = 0;
  double worst_s = 0;  // measure at which the target was hardest to meet
};

// Smallest i <= i_max with alpha_tilde(beta(s, i)) <= eps_target(s) for every
// s on a dense grid of (0, delta_max].
StoppingResult stopping_iteration(const BoundBundle& bundle, const KLBound& beta,
                                  const MonotoneFn& eps_target, double delta_max, int i_max,
                                  int s_grid = kEnvelopeGrid);

// Y(x) = rho_v(V(x)) + rho_w(W(x)).
double lyapunov_value(const BoundBundle& bundle, double v_at_x, double w_at_x);

}  // namespace piplus
