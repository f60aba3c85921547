#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "piplus/funcs.hpp"

using namespace piplus;

namespace {

// Fixed-grid composite Simpson, independent of the adaptive routine.
double simpson_oracle(const std::function<double(double)>& f, double a, double b, int panels) {
  double acc = 0;
  const double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    const double x0 = a + i * h;
    acc += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
  }
  return acc;
}

}  // namespace

TEST_CASE("compose identity and analytic cases") {
  const MonotoneFn id = MonotoneFn::identity(100.0);
  const MonotoneFn comp = compose(id, id);
  for (double s : {0.0, 1.0, 7.5}) CHECK(comp(s) == doctest::Approx(s).epsilon(1e-15));

  const MonotoneFn twice("2s", [](double s) { return 2.0 * s; }, 100.0,
                         MonotoneFn::Kind::kStrictlyIncreasing, true);
  const MonotoneFn square("s^2", [](double s) { return s * s; }, 10.0,
                          MonotoneFn::Kind::kStrictlyIncreasing, true);
  CHECK(compose(twice, square)(3.0) == doctest::Approx(18.0).epsilon(1e-15));
  CHECK(compose(twice, square).zero_at_zero());
}

TEST_CASE("compose reports the offending input on bracket overflow") {
  const MonotoneFn narrow("narrow", [](double s) { return s; }, 1.0,
                          MonotoneFn::Kind::kStrictlyIncreasing, true);
  const MonotoneFn wide("wide", [](double s) { return 10.0 * s; }, 5.0,
                        MonotoneFn::Kind::kStrictlyIncreasing, true);
  const MonotoneFn comp = compose(narrow, wide);
  CHECK_THROWS_AS((void)comp(2.0), DomainError);
  try {
    (void)comp(2.0);
  } catch (const DomainError& e) {
    CHECK(e.offending_input == doctest::Approx(2.0));
  }
}

TEST_CASE("compose matches a quadrature oracle for rho_v after upper_v") {
  // A general-case cost gain with curvature, and a linear initial bound.
  const MonotoneFn chi("chi", [](double s) { return 2.0 * s + s * s; }, 50.0,
                       MonotoneFn::Kind::kStrictlyIncreasing, true);
  const MonotoneFn q_v("q_v", [chi](double s) { return 2.0 * chi(2.0 * s); }, 50.0,
                       MonotoneFn::Kind::kStrictlyIncreasing, true);
  const MonotoneFn rho_v = integral_of(q_v);
  const MonotoneFn upper_v = MonotoneFn::linear("upper_v", 1.5, 9.0);
  const MonotoneFn chained = compose(rho_v, upper_v);
  for (int i = 1; i <= 10; ++i) {
    const double s = 0.9 * i;
    const double expected =
        simpson_oracle([&](double t) { return q_v(t); }, 0.0, upper_v(s), 20000);
    CHECK(chained(s) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("inverse: identity, cube root, and the certificate closed form") {
  const MonotoneFn id = MonotoneFn::identity(10.0);
  CHECK(id.inverse(4.2) == doctest::Approx(4.2).epsilon(1e-10));

  const MonotoneFn cube("s^3", [](double s) { return s * s * s; }, 10.0,
                        MonotoneFn::Kind::kStrictlyIncreasing, true);
  CHECK(cube.inverse(27.0) == doctest::Approx(3.0).epsilon(1e-10));

  // chi(s) = s / q with q = 2: chi^{-1}(alpha(1) / 2) = q / 2 = 1.
  const MonotoneFn chi = MonotoneFn::linear("chi", 0.5, 10.0);
  const MonotoneFn alpha = MonotoneFn::identity(10.0);
  CHECK(chi.inverse(alpha(1.0) / 2.0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("inverse: out-of-range targets throw with bracket data") {
  const MonotoneFn id = MonotoneFn::identity(1.0);
  CHECK_THROWS_AS((void)id.inverse(-1.0), BracketError);
  // Expansion handles targets above f(s_max) up to the ceiling.
  CHECK(id.inverse(3.0) == doctest::Approx(3.0).epsilon(1e-10));
  bool clamped = false;
  const double big = 1.0 * (1 << 20) * 4.0;
  CHECK(id.inverse_clamped(big, &clamped) <= 1.0 * (1 << 20) + 1);
  CHECK(clamped);
}

TEST_CASE("inverse round trip on random strictly increasing functions") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = 0.1 + 3.0 * ((rng() >> 11) * 0x1.0p-53);
    const double b = 0.5 + 2.0 * ((rng() >> 11) * 0x1.0p-53);
    const MonotoneFn f("rand", [a, b](double s) { return a * s + b * s * s * s; }, 8.0,
                       MonotoneFn::Kind::kStrictlyIncreasing, true);
    for (int i = 1; i <= 10; ++i) {
      const double y = f(8.0 * i / 10.0);
      const double s = f.inverse(y);
      CHECK(std::abs(f(s) - y) <= 1e-10 * (1.0 + y));
    }
  }
}

TEST_CASE("integrate_rho analytic cases") {
  const MonotoneFn id = MonotoneFn::identity(10.0);
  CHECK(integrate_rho(id, 1.0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(integrate_rho(id, 2.0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(integrate_rho(MonotoneFn::zero(10.0), 5.0) == doctest::Approx(0.0));
  // q_v = 2 chi(2 I) with chi = I gives 4s, whose integral at 1 is 2.
  const MonotoneFn chi = MonotoneFn::identity(10.0);
  const MonotoneFn q_v("q_v", [chi](double s) { return 2.0 * chi(2.0 * s); }, 10.0,
                       MonotoneFn::Kind::kStrictlyIncreasing, true);
  CHECK(integrate_rho(q_v, 1.0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(integral_of(q_v).zero_at_zero());
}

TEST_CASE("iterate_decay basics and clamping") {
  const MonotoneFn any = MonotoneFn::linear("any", 0.3, 100.0);
  for (double s : {0.0, 1.0, 42.0}) CHECK(iterate_decay(any, 0, s) == s);

  const MonotoneFn half = MonotoneFn::linear("half", 0.5, 100.0);
  CHECK(iterate_decay(half, 3, 8.0) == doctest::Approx(1.0).epsilon(1e-12));

  // A contraction that nearly stalls still never goes negative.
  const MonotoneFn steep("steep", [](double s) { return std::min(s, 0.9 * s + 0.05 * s * s); },
                         10.0, MonotoneFn::Kind::kStrictlyIncreasing, true);
  for (int k : {1, 5, 20}) {
    for (int i = 0; i <= 20; ++i) {
      CHECK(iterate_decay(steep, k, 10.0 * i / 20.0) >= 0.0);
    }
  }
}

TEST_CASE("iterate_decay validates the contraction premise") {
  const MonotoneFn bad = MonotoneFn::linear("bad", 1.5, 10.0);
  CHECK_THROWS_AS((void)iterate_decay(bad, 1, 1.0), CertificateError);
}

TEST_CASE("iterate_decay envelope is nondecreasing in s") {
  // Non-monotone step: alpha close to identity in the middle of the range.
  const MonotoneFn bump("bump",
                        [](double s) {
                          const double hump = std::exp(-8.0 * (s - 2.0) * (s - 2.0));
                          return s * (0.2 + 0.75 * hump);
                        },
                        5.0, MonotoneFn::Kind::kNondecreasing, true);
  DecayIterator iter(bump);
  CHECK_FALSE(iter.step_nondecreasing());
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const double s1 = 5.0 * ((rng() >> 11) * 0x1.0p-53);
    const double s2 = 5.0 * ((rng() >> 11) * 0x1.0p-53);
    const int k = static_cast<int>(rng() % 8);
    const double lo = std::min(s1, s2), hi = std::max(s1, s2);
    CHECK(iter(k, lo) <= iter(k, hi) + 1e-9);
    // Brute-force envelope over a dense grid confirms the value.
    double brute = 0;
    for (int j = 0; j <= 4096; ++j) {
      double v = hi * j / 4096.0;
      for (int step = 0; step < k; ++step) v = std::max(v - bump(v), 0.0);
      brute = std::max(brute, v);
    }
    CHECK(iter(k, hi) >= brute - 1e-6);
  }
}

TEST_CASE("build_kl analytic decay and KL axioms") {
  const MonotoneFn id = MonotoneFn::identity(50.0);
  const MonotoneFn half = MonotoneFn::linear("half", 0.5, 100.0);
  const KLBound beta = build_kl(id, id, half);

  for (int k : {0, 1, 10}) CHECK(beta(0.0, k) == 0.0);
  for (int k : {0, 1, 3, 7}) {
    CHECK(beta(8.0, k) == doctest::Approx(8.0 * std::pow(0.5, k)).epsilon(1e-9));
  }

  // Monotone in s, nonincreasing in k on a sweep of 200 samples.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double s = 50.0 * ((rng() >> 11) * 0x1.0p-53);
    const int k = 1 + static_cast<int>(rng() % 30);
    CHECK(beta(s, k) <= beta(s, k - 1) + 1e-9 * (1.0 + beta(s, k - 1)));
    const double s2 = s * 0.5;
    CHECK(beta(s2, k) <= beta(s, k) + 1e-9);
  }

  // Decay to (numerical) zero within a bounded horizon.
  const double start = beta(50.0, 0);
  int k = 0;
  while (beta(50.0, k) > 1e-6 * start && k < 200) ++k;
  CHECK(k < 200);
}

TEST_CASE("zero_at_zero propagates through the algebra") {
  const MonotoneFn id = MonotoneFn::identity(10.0);
  const MonotoneFn shifted("shifted", [](double s) { return s + 1.0; }, 10.0,
                           MonotoneFn::Kind::kStrictlyIncreasing, false);
  CHECK(compose(id, id).zero_at_zero());
  CHECK_FALSE(compose(shifted, id).zero_at_zero());
  CHECK_FALSE(add(id, shifted).zero_at_zero());
  CHECK(min_of(id, shifted).zero_at_zero());
}
