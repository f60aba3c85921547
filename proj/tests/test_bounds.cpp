#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "piplus/bounds.hpp"
#include "piplus/oracle.hpp"
#include "piplus/pi.hpp"

using namespace piplus;

namespace {
const double kP0 = lq_policy_cost_coefficient(0.9, 1.0, 1.0, 1.0, -0.5);
}

TEST_CASE("build_lyapunov middle column for the normalized lq certificate") {
  const Instance inst = lq_instance();
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  CHECK(bundle.used_case == Certificate::Case::kChiLeqIdentity);
  CHECK_FALSE(bundle.case_fallback);

  for (double s : {0.5, 1.0, 4.0, 9.0}) {
    CHECK(bundle.alpha_y(s) == doctest::Approx(s).epsilon(1e-12));
    CHECK(bundle.lower_y(s) == doctest::Approx(s).epsilon(1e-12));
    CHECK(bundle.upper_y(s) == doctest::Approx(kP0 * s).epsilon(1e-12));
    CHECK(bundle.tilde_y(s) == doctest::Approx(s / kP0).epsilon(1e-9));
    // alpha_hat = min{p0 s, (p0 - 1) s} = (p0 - 1) s.
    CHECK(bundle.alpha_hat_env(s) == doctest::Approx((kP0 - 1.0) * s).epsilon(1e-9));
  }
  CHECK(bundle.rho_v(0.0) == 0.0);
}

TEST_CASE("build_lyapunov general column matches hand substitution") {
  // q = 0.5 makes chi(s) = 2s exceed the identity.
  const Instance inst = lq_instance(LqOptions{.q = 0.5});
  CHECK(inst.cert.declared_case == Certificate::Case::kGeneral);
  const double p0 = lq_policy_cost_coefficient(0.9, 1.0, 0.5, 1.0, -0.5);
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  CHECK(bundle.used_case == Certificate::Case::kGeneral);

  // q_v = 2 chi(2s) = 8s so rho_v = 4 s^2; the gauge is
  // chi + (upper_w + I)(alpha_w^{-1}(2 chi)) = 2s + 4s = 6s, so q_w = y / 12
  // and rho_w = y^2 / 24.
  for (double s : {0.25, 1.0, 3.0}) {
    CHECK(bundle.rho_v(s) == doctest::Approx(4.0 * s * s).epsilon(1e-7));
    CHECK(bundle.rho_w(s) == doctest::Approx(s * s / 24.0).epsilon(1e-7));
    // alpha_y = q_w(s / 4) s / 4 = s^2 / 192.
    CHECK(bundle.alpha_y(s) == doctest::Approx(s * s / 192.0).epsilon(1e-7));
    // upper_y = rho_v(p0 s) = 4 p0^2 s^2 (upper_w = 0).
    CHECK(bundle.upper_y(s) == doctest::Approx(4.0 * p0 * p0 * s * s).epsilon(1e-7));
    // lower_y = min{rho_v(s / 4), rho_w(s / 2)} = min{s^2 / 4, s^2 / 96}.
    CHECK(bundle.lower_y(s) == doctest::Approx(s * s / 96.0).epsilon(1e-7));
    // alpha_hat = p0 s - chi^{-1}(s) = (p0 - 1/2) s.
    CHECK(bundle.alpha_hat_env(s) == doctest::Approx((p0 - 0.5) * s).epsilon(1e-7));
  }
}

TEST_CASE("a misdeclared chi case falls back to the general column") {
  Instance inst = lq_instance(LqOptions{.q = 0.5});
  inst.cert.declared_case = Certificate::Case::kChiLeqIdentity;
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  CHECK(bundle.used_case == Certificate::Case::kGeneral);
  CHECK(bundle.case_fallback);
  CHECK(bundle.case_fallback_witness > 0);
}

TEST_CASE("stability_bound closed form on the lq certificate") {
  const Instance inst = lq_instance();
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  const KLBound beta = stability_bound(bundle);
  for (int k : {0, 1, 5, 20}) CHECK(beta(0.0, k) == 0.0);
  const double rate = 1.0 - 1.0 / kP0;
  CHECK(beta(1.0, 3) == doctest::Approx(kP0 * std::pow(rate, 3)).epsilon(1e-7));
  for (double s : {0.3, 2.0, 9.0}) {
    CHECK(beta(s, 0) >= s);  // the envelope starts above the identity
    for (int k = 1; k <= 12; ++k) {
      CHECK(beta(s, k) == doctest::Approx(kP0 * std::pow(rate, k) * s).epsilon(1e-6));
    }
  }
}

TEST_CASE("exp_bound matches the linear-envelope closed form") {
  const Instance inst = lq_instance();
  const KLBound beta = exp_bound(inst.cert, 9.0);
  const double rate = 1.0 - 1.0 / kP0;
  for (int k : {0, 1, 7}) {
    CHECK(beta(0.0, k) == 0.0);
    CHECK(beta(2.0, k) == doctest::Approx(kP0 * std::pow(rate, k) * 2.0).epsilon(1e-12));
  }
  // Geometric decay ratio is exact.
  for (int k = 0; k < 10; ++k) {
    CHECK(beta(1.5, k + 1) / beta(1.5, k) == doctest::Approx(rate).epsilon(1e-12));
  }
  // Agreement with the general construction on this instance.
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  const KLBound general = stability_bound(bundle);
  for (double s : {0.5, 3.0, 9.0}) {
    for (int k = 0; k <= 10; ++k) {
      CHECK(general(s, k) == doctest::Approx(beta(s, k)).epsilon(0.1));
    }
  }
}

TEST_CASE("exp_bound validates its constants") {
  Certificate cert = lq_instance().cert;
  cert.a_w = 0;
  CHECK_THROWS_AS((void)exp_bound(cert, 9.0), CertificateError);
  cert = lq_instance().cert;
  cert.a_w = 10.0;  // exceeds upper_a_v + upper_a_w
  CHECK_THROWS_AS((void)exp_bound(cert, 9.0), CertificateError);
}

TEST_CASE("near_opt_bound is zero at zero and nondecreasing") {
  const Instance inst = lq_instance();
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  const KLBound beta = stability_bound(bundle);
  const auto bound = near_opt_bound(bundle, beta);
  CHECK(bound(0.0, 0) == 0.0);
  CHECK(bound(0.0, 5) == 0.0);
  // (p0 - 1) beta(s, i) in closed form.
  const double rate = 1.0 - 1.0 / kP0;
  for (double s : {0.5, 4.0}) {
    for (int i : {0, 2, 6}) {
      CHECK(bound(s, i) ==
            doctest::Approx((kP0 - 1.0) * kP0 * std::pow(rate, i) * s).epsilon(1e-6));
    }
  }
  // Envelope nondecreasing on a dense sweep against a brute-force max.
  const MonotoneFn& env = bundle.alpha_hat_env;
  double prev = 0;
  for (int j = 1; j <= 500; ++j) {
    const double s = 9.0 * j / 500.0;
    const double cur = env(s);
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }
}

TEST_CASE("counterexample envelope bound uses the piecewise certificate") {
  const Instance inst = counterexample_instance();
  const BoundBundle bundle = build_lyapunov(inst.cert, 4.0);
  CHECK(bundle.used_case == Certificate::Case::kChiLeqIdentity);
  // alpha_hat = min{v0, v0 - s} = v0(s) - s.
  for (double s : {0.5, 1.5, 3.0}) {
    CHECK(bundle.alpha_hat_env(s) ==
          doctest::Approx(counterexample::v0(s) - s).epsilon(1e-9));
  }
  const KLBound beta = stability_bound(bundle);
  CHECK(beta(0.0, 3) == 0.0);
  // One decay step from the top: v0(4) = 30 maps to 30 - v0^{-1}(30) = 26.
  CHECK(beta(4.0, 1) == doctest::Approx(26.0).epsilon(1e-7));
}

TEST_CASE("stopping_iteration matches the geometric closed form") {
  const Instance inst = lq_instance();
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  const KLBound beta = stability_bound(bundle);

  const MonotoneFn eps_rel = MonotoneFn::linear("eps", 0.01, 9.0);
  const StoppingResult res = stopping_iteration(bundle, beta, eps_rel, 9.0, 200);
  REQUIRE(res.found);
  const double rate = 1.0 - 1.0 / kP0;
  const int expected =
      static_cast<int>(std::ceil(std::log(0.01 / ((kP0 - 1.0) * kP0)) / std::log(rate)));
  CHECK(res.iteration == expected);

  // Self-referential target: eps = bound at i = 5 is met by i <= 5.
  const auto bound = near_opt_bound(bundle, beta);
  const MonotoneFn self("self", [bound](double s) { return bound(s, 5); }, 9.0,
                        MonotoneFn::Kind::kNondecreasing, true);
  const StoppingResult self_res = stopping_iteration(bundle, beta, self, 9.0, 200);
  REQUIRE(self_res.found);
  CHECK(self_res.iteration <= 5);

  // Empty domain.
  const StoppingResult empty = stopping_iteration(bundle, beta, eps_rel, 0.0, 10);
  CHECK(empty.found);
  CHECK(empty.iteration == 0);

  // A target that vanishes away from zero is unreachable.
  const MonotoneFn dead = MonotoneFn::zero(9.0);
  CHECK_THROWS_AS((void)stopping_iteration(bundle, beta, dead, 9.0, 10), CertificateError);
}

TEST_CASE("lyapunov_value and the sampled sandwich on the lq grid") {
  const Instance inst = lq_instance();
  const Grid& grid = inst.grid;
  const BoundBundle bundle = build_lyapunov(inst.cert, 9.0);
  CHECK(lyapunov_value(bundle, 3.0, 0.0) == doctest::Approx(3.0));  // rho_v = I, W = 0

  const ValueTable v0 = evaluate_policy_fn(inst.model, grid, inst.initial_policy, DpOptions{});
  for (std::size_t s = 0; s < grid.num_states(); s += 23) {
    const double x = grid.state_at(s)[0];
    const double sigma = inst.model.measure({&x, 1});
    if (sigma <= grid.sigma_abs()) {
      CHECK(lyapunov_value(bundle, v0[s], 0.0) == 0.0);
      continue;
    }
    const double y = lyapunov_value(bundle, v0[s], inst.cert.storage({&x, 1}));
    CHECK(y >= bundle.lower_y(sigma) - 1e-6 * (1.0 + y));
    CHECK(y <= bundle.upper_y(sigma) + 1e-6 * (1.0 + y) + 2.0 * v0.neighbor_spread(s));
  }
}
