#include "piplus/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace piplus {
namespace {

// Nondecreasing envelope s -> max_{s' in [0, s]} f(s'), sampled on a grid.
MonotoneFn nondecreasing_envelope(std::string name, const MonotoneFn& f, int grid) {
  return MonotoneFn(
      std::move(name),
      [f, grid](double s) {
        double best = f(s);
        for (int i = 1; i < grid; ++i) {
          best = std::max(best, f(s * static_cast<double>(i) / grid));
        }
        return best;
      },
      f.s_max(), MonotoneFn::Kind::kNondecreasing, f.zero_at_zero());
}

bool verify_chi_leq_identity(const MonotoneFn& chi, double s_max, int samples, double* witness) {
  for (int i = 1; i <= samples; ++i) {
    const double s = s_max * static_cast<double>(i) / samples;
    if (chi(s) > s * (1.0 + 1e-9)) {
      *witness = s;
      return false;
    }
  }
  return true;
}

}  // namespace

BoundBundle build_lyapunov(const Certificate& cert, double s_max, const BoundBuildOptions& opts) {
  BoundBundle bundle;
  bundle.s_max = s_max;
  bundle.used_case = cert.declared_case;

  if (bundle.used_case == Certificate::Case::kChiLeqIdentity ||
      bundle.used_case == Certificate::Case::kExponential) {
    double witness = 0;
    // The chi bound is what the simple construction rests on; refute it and we
    // must fall back to the general column.
    const double probe_max = std::max(s_max, cert.chi_w.s_max());
    if (!verify_chi_leq_identity(cert.chi_w, probe_max, opts.verify_samples, &witness)) {
      bundle.used_case = Certificate::Case::kGeneral;
      bundle.case_fallback = true;
      bundle.case_fallback_witness = witness;
    }
  }

  const MonotoneFn& alpha_w = cert.alpha_w;
  const MonotoneFn& chi_w = cert.chi_w;
  const MonotoneFn& upper_w = cert.upper_w;
  const MonotoneFn& upper_v = cert.upper_v;

  if (bundle.used_case != Certificate::Case::kGeneral) {
    const double y_max = upper_v(s_max) + upper_w(s_max) + 1.0;
    bundle.rho_v = MonotoneFn::identity(y_max);
    bundle.rho_w = MonotoneFn::identity(y_max);
    bundle.alpha_y = alpha_w;
    bundle.lower_y = alpha_w;
    bundle.upper_y = add(upper_v, upper_w);
    MonotoneFn upper_y = bundle.upper_y;
    MonotoneFn alpha_y = bundle.alpha_y;
    bundle.tilde_y = MonotoneFn(
        "tilde_y", [alpha_y, upper_y](double s) { return alpha_y(upper_y.inverse(s)); },
        upper_y(s_max), MonotoneFn::Kind::kStrictlyIncreasing, true);
    // Near-optimality gap bound: min{upper_v, upper_y - lower_y}, clamped.
    MonotoneFn lower_y = bundle.lower_y;
    MonotoneFn alpha_hat(
        "alpha_hat",
        [upper_v, upper_y, lower_y](double s) {
          return std::max(0.0, std::min(upper_v(s), upper_y(s) - lower_y(s)));
        },
        s_max, MonotoneFn::Kind::kNondecreasing, true);
    bundle.alpha_hat_env =
        nondecreasing_envelope("alpha_tilde", alpha_hat, opts.envelope_grid);
    return bundle;
  }

  // General column.
  MonotoneFn q_v("q_v", [chi_w](double s) { return 2.0 * chi_w(2.0 * s); }, s_max,
                 MonotoneFn::Kind::kStrictlyIncreasing, true);
  const double quad_tol = opts.quad_tol;
  MonotoneFn rho_v("rho_v", [q_v, quad_tol](double s) { return integrate_rho(q_v, s, quad_tol); },
                   std::max(s_max, upper_v(s_max)) + 1.0,
                   MonotoneFn::Kind::kStrictlyIncreasing, true);

  MonotoneFn gauge(
      "chi_w+(upper_w+I)∘alpha_w^{-1}(2chi_w)",
      [chi_w, upper_w, alpha_w](double s) {
        const double c = chi_w(s);
        const double t = alpha_w.inverse(2.0 * c);
        return c + upper_w(t) + t;
      },
      s_max, MonotoneFn::Kind::kStrictlyIncreasing, true);
  MonotoneFn q_w("q_w", [gauge](double y) { return 0.5 * gauge.inverse(y); },
                 gauge(s_max), MonotoneFn::Kind::kStrictlyIncreasing, true);
  MonotoneFn rho_w("rho_w", [q_w, quad_tol](double s) { return integrate_rho(q_w, s, quad_tol); },
                   std::max(q_w.s_max(), upper_w(s_max) + 1.0),
                   MonotoneFn::Kind::kStrictlyIncreasing, true);

  bundle.rho_v = rho_v;
  bundle.rho_w = rho_w;
  bundle.alpha_y = MonotoneFn(
      "alpha_y",
      [q_w, alpha_w](double s) {
        const double a = 0.25 * alpha_w(s);
        return q_w(a) * a;
      },
      s_max, MonotoneFn::Kind::kStrictlyIncreasing, true);
  bundle.upper_y = MonotoneFn(
      "upper_y",
      [rho_v, rho_w, upper_v, upper_w](double s) {
        return rho_v(upper_v(s)) + rho_w(upper_w(s));
      },
      s_max, MonotoneFn::Kind::kStrictlyIncreasing, true);

  bool clamped_any = false;
  bundle.lower_y = MonotoneFn(
      "lower_y",
      [rho_v, rho_w, chi_w, alpha_w, &clamped_any](double s) {
        const double half = 0.5 * alpha_w(s);
        bool clamped = false;
        const double via_v = rho_v(chi_w.inverse_clamped(half, &clamped));
        if (clamped) clamped_any = true;
        const double via_w = rho_w(half);
        return std::min(via_v, via_w);
      },
      s_max, MonotoneFn::Kind::kStrictlyIncreasing, true);
  // Touch the evaluator across the bracket so the clamp flag is meaningful.
  for (int i = 1; i <= 8; ++i) {
    (void)bundle.lower_y(s_max * static_cast<double>(i) / 8.0);
  }
  bundle.chi_inverse_clamped = clamped_any;

  MonotoneFn upper_y = bundle.upper_y;
  MonotoneFn alpha_y = bundle.alpha_y;
  bundle.tilde_y = MonotoneFn(
      "tilde_y", [alpha_y, upper_y](double s) { return alpha_y(upper_y.inverse(s)); },
      upper_y(s_max), MonotoneFn::Kind::kStrictlyIncreasing, true);

  MonotoneFn alpha_hat(
      "alpha_hat",
      [upper_v, chi_w, alpha_w, upper_w](double s) {
        const double head = std::max(0.0, alpha_w(s) - upper_w(s));
        bool clamped = false;
        const double sub = chi_w.inverse_clamped(head, &clamped);
        return std::max(0.0, upper_v(s) - sub);
      },
      s_max, MonotoneFn::Kind::kNondecreasing, true);
  bundle.alpha_hat_env = nondecreasing_envelope("alpha_tilde", alpha_hat, opts.envelope_grid);
  return bundle;
}

KLBound stability_bound(const BoundBundle& bundle, int envelope_grid) {
  return build_kl(bundle.lower_y, bundle.upper_y, bundle.tilde_y, envelope_grid);
}

KLBound exp_bound(const Certificate& cert, double s_max) {
  if (!(cert.a_w > 0) || !(cert.upper_a_v > 0) || cert.upper_a_w < 0) {
    throw CertificateError("exp_bound: missing or invalid exponential constants", 0);
  }
  const double a_y = cert.a_w;
  const double upper_a_y = cert.upper_a_v + cert.upper_a_w;
  const double lower_a_y = cert.a_w;
  if (!(a_y <= upper_a_y)) {
    throw CertificateError("exp_bound: a_w exceeds upper_a_v + upper_a_w", a_y);
  }
  const double tilde_a_y = a_y / upper_a_y;
  if (!(tilde_a_y > 0) || tilde_a_y > 1.0) {
    throw CertificateError("exp_bound: contraction rate outside (0, 1]", tilde_a_y);
  }
  const double gain = upper_a_y / lower_a_y;
  const double rate = 1.0 - tilde_a_y;
  return KLBound(
      "beta_exp",
      [gain, rate](double s, int k) { return gain * std::pow(rate, k) * s; }, s_max);
}

std::function<double(double, int)> near_opt_bound(const BoundBundle& bundle,
                                                  const KLBound& beta) {
  MonotoneFn env = bundle.alpha_hat_env;
  KLBound b = beta;
  return [env, b](double s, int i) {
    const double decayed = b(s, i);
    if (decayed <= 0) return 0.0;
    return env(decayed);
  };
}

StoppingResult stopping_iteration(const BoundBundle& bundle, const KLBound& beta,
                                  const MonotoneFn& eps_target, double delta_max, int i_max,
                                  int s_grid) {
  StoppingResult result;
  if (delta_max <= 0) {
    result.found = true;
    result.iteration = 0;
    return result;
  }
  const auto bound = near_opt_bound(bundle, beta);
  for (int i = 0; i <= i_max; ++i) {
    bool ok = true;
    double worst_s = 0;
    double worst_excess = 0;
    for (int j = 1; j <= s_grid; ++j) {
      const double s = delta_max * static_cast<double>(j) / s_grid;
      const double target = eps_target(s);
      if (!(target > 0)) {
        throw CertificateError("stopping_iteration: eps_target vanishes away from zero", s);
      }
      const double value = bound(s, i);
      if (value > target * (1.0 + 1e-12)) {
        ok = false;
        if (value - target > worst_excess) {
          worst_excess = value - target;
          worst_s = s;
        }
      }
    }
    if (ok) {
      result.found = true;
      result.iteration = i;
      return result;
    }
    result.worst_s = worst_s;
  }
  result.found = false;
  result.iteration = i_max;
  return result;
}

double lyapunov_value(const BoundBundle& bundle, double v_at_x, double w_at_x) {
  return bundle.rho_v(v_at_x) + bundle.rho_w(w_at_x);
}

}  // namespace piplus
