#include "piplus/funcs.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace piplus {
namespace {

using Kind = MonotoneFn::Kind;

constexpr int kMaxBracketDoublings = 20;
constexpr int kMaxBisectIters = 200;

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const MonotoneFn::Eval& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

MonotoneFn::MonotoneFn(std::string name, Eval eval, double s_max, Kind kind, bool zero_at_zero)
    : name_(std::move(name)),
      eval_(std::move(eval)),
      s_max_(s_max),
      kind_(kind),
      zero_at_zero_(zero_at_zero) {
  if (!(s_max_ > 0)) throw Error("MonotoneFn '" + name_ + "': bracket must be positive");
}

MonotoneFn MonotoneFn::identity(double s_max) {
  return MonotoneFn("identity", [](double s) { return s; }, s_max,
                    Kind::kStrictlyIncreasing, true);
}

MonotoneFn MonotoneFn::zero(double s_max) {
  return MonotoneFn("zero", [](double) { return 0.0; }, s_max, Kind::kNondecreasing, true);
}

MonotoneFn MonotoneFn::linear(std::string name, double slope, double s_max) {
  if (!(slope >= 0)) throw Error("MonotoneFn::linear: negative slope");
  const Kind kind = slope > 0 ? Kind::kStrictlyIncreasing : Kind::kNondecreasing;
  return MonotoneFn(std::move(name), [slope](double s) { return slope * s; }, s_max, kind, true);
}

double MonotoneFn::operator()(double s) const {
  if (!eval_) throw Error("MonotoneFn: evaluating an empty function");
  if (s < 0) throw DomainError("MonotoneFn '" + name_ + "': negative argument", s);
  if (s == 0 && zero_at_zero_) return 0.0;
  const double v = eval_(s);
  if (!std::isfinite(v)) throw DomainError("MonotoneFn '" + name_ + "': non-finite value", s);
  return v;
}

double MonotoneFn::invert_impl(double y, bool allow_clamp, bool* clamped) const {
  if (clamped) *clamped = false;
  if (kind_ != Kind::kStrictlyIncreasing) {
    throw Error("MonotoneFn '" + name_ + "': inverse requires a strictly increasing function");
  }
  const double f0 = (*this)(0.0);
  if (y <= f0) {
    if (y < f0 - kTolInv * (1 + std::abs(f0))) {
      throw BracketError("MonotoneFn '" + name_ + "': inverse target below range", 0.0, s_max_, y);
    }
    return 0.0;
  }
  double lo = 0.0;
  double hi = s_max_;
  double fhi = (*this)(hi);
  int doublings = 0;
  while (fhi < y && doublings < kMaxBracketDoublings) {
    lo = hi;
    hi *= 2.0;
    fhi = (*this)(hi);
    ++doublings;
  }
  if (fhi < y) {
    if (allow_clamp) {
      if (clamped) *clamped = true;
      return hi;
    }
    throw BracketError("MonotoneFn '" + name_ + "': inverse target above range", 0.0, hi, y);
  }
  const double tol = kTolInv * (1.0 + std::abs(y));
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < kMaxBisectIters; ++i) {
    mid = 0.5 * (lo + hi);
    const double fm = (*this)(mid);
    const double err = fm - y;
    if (std::abs(err) <= tol) return mid;
    if (err > 0) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= std::abs(mid) * 1e-16) break;
  }
  return mid;
}

double MonotoneFn::inverse(double y) const { return invert_impl(y, false, nullptr); }

double MonotoneFn::inverse_clamped(double y, bool* clamped) const {
  return invert_impl(y, true, clamped);
}

MonotoneFn compose(const MonotoneFn& f, const MonotoneFn& g) {
  const Kind kind = (f.kind() == MonotoneFn::Kind::kStrictlyIncreasing &&
                     g.kind() == MonotoneFn::Kind::kStrictlyIncreasing)
                        ? MonotoneFn::Kind::kStrictlyIncreasing
                        : MonotoneFn::Kind::kNondecreasing;
  const double inner_ceiling = f.s_max() * (1.0 + 1e-9);
  const std::string name = f.name() + "∘" + g.name();
  return MonotoneFn(
      name,
      [f, g, inner_ceiling, name](double s) {
        const double inner = g(s);
        if (inner > inner_ceiling) {
          throw DomainError("compose '" + name + "': inner value exceeds outer bracket", s);
        }
        return f(inner);
      },
      g.s_max(), kind, f.zero_at_zero() && g.zero_at_zero());
}

MonotoneFn add(const MonotoneFn& f, const MonotoneFn& g) {
  const Kind kind = (f.kind() == MonotoneFn::Kind::kStrictlyIncreasing ||
                     g.kind() == MonotoneFn::Kind::kStrictlyIncreasing)
                        ? MonotoneFn::Kind::kStrictlyIncreasing
                        : MonotoneFn::Kind::kNondecreasing;
  return MonotoneFn(f.name() + "+" + g.name(), [f, g](double s) { return f(s) + g(s); },
                    std::min(f.s_max(), g.s_max()), kind, f.zero_at_zero() && g.zero_at_zero());
}

MonotoneFn scale(double factor, const MonotoneFn& f) {
  if (!(factor >= 0)) throw Error("scale: negative factor");
  const Kind kind = factor > 0 ? f.kind() : MonotoneFn::Kind::kNondecreasing;
  return MonotoneFn(std::to_string(factor) + "*" + f.name(),
                    [factor, f](double s) { return factor * f(s); }, f.s_max(), kind,
                    f.zero_at_zero());
}

MonotoneFn min_of(const MonotoneFn& f, const MonotoneFn& g) {
  const Kind kind = (f.kind() == MonotoneFn::Kind::kStrictlyIncreasing &&
                     g.kind() == MonotoneFn::Kind::kStrictlyIncreasing)
                        ? MonotoneFn::Kind::kStrictlyIncreasing
                        : MonotoneFn::Kind::kNondecreasing;
  return MonotoneFn("min{" + f.name() + "," + g.name() + "}",
                    [f, g](double s) { return std::min(f(s), g(s)); },
                    std::min(f.s_max(), g.s_max()), kind,
                    f.zero_at_zero() || g.zero_at_zero());
}

MonotoneFn inverse_fn(const MonotoneFn& f) {
  return MonotoneFn(f.name() + "^{-1}", [f](double y) { return f.inverse(y); }, f(f.s_max()),
                    MonotoneFn::Kind::kStrictlyIncreasing, f.zero_at_zero());
}

double integrate_rho(const MonotoneFn& q, double s, double tol) {
  if (s < 0) throw DomainError("integrate_rho: negative upper limit", s);
  if (s == 0) return 0.0;
  const MonotoneFn::Eval f = [&q](double t) {
    const double v = q(t);
    if (v < 0) throw DomainError("integrate_rho: negative integrand", t);
    return v;
  };
  const double fa = f(0.0);
  const double fb = f(s);
  const double fm = f(0.5 * s);
  const double whole = simpson(0.0, s, fa, fm, fb);
  const double abs_tol = tol * std::max(std::abs(whole), 1e-300);
  return adaptive_simpson(f, 0.0, s, fa, fm, fb, whole, abs_tol, 40);
}

MonotoneFn integral_of(const MonotoneFn& q, double tol) {
  const Kind kind = q.zero_at_zero() && q.kind() == MonotoneFn::Kind::kNondecreasing
                        ? MonotoneFn::Kind::kStrictlyIncreasing
                        : MonotoneFn::Kind::kStrictlyIncreasing;
  (void)kind;  // integral of a positive-a.e. class-K integrand is strictly increasing
  return MonotoneFn("∫" + q.name(), [q, tol](double s) { return integrate_rho(q, s, tol); },
                    q.s_max(), MonotoneFn::Kind::kStrictlyIncreasing, true);
}

DecayIterator::DecayIterator(MonotoneFn alpha_tilde, int envelope_grid)
    : alpha_tilde_(std::move(alpha_tilde)), envelope_grid_(std::max(envelope_grid, 8)) {
  const double s_max = alpha_tilde_.s_max();
  double prev = 0.0;
  for (int i = 0; i <= envelope_grid_; ++i) {
    const double s = s_max * static_cast<double>(i) / envelope_grid_;
    const double a = alpha_tilde_(s);
    if (a > s * (1.0 + 1e-9) + 1e-12) {
      throw CertificateError("DecayIterator: alpha_tilde(s) > s", s);
    }
    const double d = step(s);
    if (d < prev - 1e-12 * (1.0 + prev)) step_nondecreasing_ = false;
    prev = std::max(prev, d);
  }
}

double DecayIterator::step(double s) const {
  if (s <= 0) return 0.0;
  return std::max(s - alpha_tilde_(s), 0.0);
}

double DecayIterator::iterate_exact(int k, double s) const {
  double v = s;
  for (int i = 0; i < k && v > 0; ++i) v = step(v);
  return v;
}

double DecayIterator::operator()(int k, double s) const {
  if (s < 0) throw DomainError("DecayIterator: negative argument", s);
  if (k < 0) throw Error("DecayIterator: negative iteration count");
  if (k == 0 || s == 0) return s;
  if (step_nondecreasing_) return iterate_exact(k, s);
  double best = iterate_exact(k, s);
  for (int i = 1; i < envelope_grid_; ++i) {
    const double sh = s * static_cast<double>(i) / envelope_grid_;
    best = std::max(best, iterate_exact(k, sh));
  }
  return best;
}

double iterate_decay(const MonotoneFn& alpha_tilde, int k, double s, int envelope_grid) {
  return DecayIterator(alpha_tilde, envelope_grid)(k, s);
}

KLBound::KLBound(std::string name, std::function<double(double, int)> eval, double s_max)
    : name_(std::move(name)), eval_(std::move(eval)), s_max_(s_max) {}

double KLBound::operator()(double s, int k) const {
  if (!eval_) throw Error("KLBound: evaluating an empty bound");
  if (s < 0) throw DomainError("KLBound '" + name_ + "': negative argument", s);
  if (k < 0) throw Error("KLBound '" + name_ + "': negative step count");
  if (s == 0) return 0.0;
  const double v = eval_(s, k);
  if (!std::isfinite(v)) throw DomainError("KLBound '" + name_ + "': non-finite value", s);
  return v;
}

KLBound build_kl(const MonotoneFn& alpha_lower, const MonotoneFn& alpha_upper,
                 const MonotoneFn& alpha_tilde, int envelope_grid) {
  if (alpha_lower.kind() != MonotoneFn::Kind::kStrictlyIncreasing) {
    throw Error("build_kl: alpha_lower must be strictly increasing");
  }
  DecayIterator decay(alpha_tilde, envelope_grid);
  return KLBound(
      "beta[" + alpha_lower.name() + "," + alpha_upper.name() + "]",
      [lo = alpha_lower, up = alpha_upper, decay](double s, int k) {
        const double y = up(s);
        const double d = decay(k, y);
        if (d <= 0) return 0.0;
        return lo.inverse(d);
      },
      alpha_upper.s_max());
}

}  // namespace piplus
