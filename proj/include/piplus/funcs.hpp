#pragma once

#include <functional>
#include <string>
#include <vector>

#include "piplus/errors.hpp"

namespace piplus {

inline constexpr double kTolInv = 1e-10;   // relative inversion tolerance
inline constexpr double kTolQuad = 1e-8;   // relative quadrature tolerance
inline constexpr int kEnvelopeGrid = 512;  // samples for nondecreasing envelopes

// A scalar comparison function on [0, s_max]: an evaluator plus the metadata
// needed to invert, compose and integrate it numerically.  Instances are
// immutable and safe to evaluate concurrently.
class MonotoneFn {
 public:
  using Eval = std::function<double(double)>;
  enum class Kind { kStrictlyIncreasing, kNondecreasing };

  MonotoneFn() = default;
  MonotoneFn(std::string name, Eval eval, double s_max, Kind kind, bool zero_at_zero);

  static MonotoneFn identity(double s_max);
  static MonotoneFn zero(double s_max);
  static MonotoneFn linear(std::string name, double slope, double s_max);

  // Evaluates at s >= 0.  Throws DomainError on negative input or a
  // non-finite result.
  double operator()(double s) const;

  // Solves f(s) = y by bisection on [0, s_max], expanding the bracket up to
  // s_max * 2^20 when y exceeds f(s_max).  Requires a strictly increasing
  // instance.  The result satisfies |f(s) - y| <= kTolInv * (1 + y).
  double inverse(double y) const;

  // Like inverse, but targets above the expanded range return the bracket
  // ceiling and set *clamped instead of throwing.
  double inverse_clamped(double y, bool* clamped = nullptr) const;

  const std::string& name() const { return name_; }
  double s_max() const { return s_max_; }
  Kind kind() const { return kind_; }
  bool zero_at_zero() const { return zero_at_zero_; }
  bool valid() const { return static_cast<bool>(eval_); }

 private:
  double invert_impl(double y, bool allow_clamp, bool* clamped) const;

  std::string name_;
  Eval eval_;
  double s_max_ = 0;
  Kind kind_ = Kind::kNondecreasing;
  bool zero_at_zero_ = true;
};

// f after g: s -> f(g(s)).  Fails with DomainError when g(s) leaves f's
// declared bracket.  zero_at_zero propagates as a conjunction.
MonotoneFn compose(const MonotoneFn& f, const MonotoneFn& g);

MonotoneFn add(const MonotoneFn& f, const MonotoneFn& g);
MonotoneFn scale(double factor, const MonotoneFn& f);
MonotoneFn min_of(const MonotoneFn& f, const MonotoneFn& g);

// Functional inverse of a strictly increasing f, as a MonotoneFn on
// [0, f(s_max)].
MonotoneFn inverse_fn(const MonotoneFn& f);

// Adaptive-Simpson value of the integral of q over [0, s].
double integrate_rho(const MonotoneFn& q, double s, double tol = kTolQuad);

// s -> integral of q over [0, s], bracketed on [0, q.s_max()].
MonotoneFn integral_of(const MonotoneFn& q, double tol = kTolQuad);

// Iterates the contraction s -> max{s - alpha_tilde(s), 0} and exposes the
// nondecreasing envelope of the k-fold composition.  Construction validates
// alpha_tilde(s) <= s on a sample grid and detects whether the contraction
// step is already nondecreasing (in which case no envelope grid is needed).
class DecayIterator {
 public:
  explicit DecayIterator(MonotoneFn alpha_tilde, int envelope_grid = kEnvelopeGrid);

  // Envelope value max_{s' in [0, s]} (I - alpha_tilde)^(k)(s').
  double operator()(int k, double s) const;

  bool step_nondecreasing() const { return step_nondecreasing_; }

 private:
  double step(double s) const;
  double iterate_exact(int k, double s) const;

  MonotoneFn alpha_tilde_;
  int envelope_grid_ = kEnvelopeGrid;
  bool step_nondecreasing_ = true;
};

double iterate_decay(const MonotoneFn& alpha_tilde, int k, double s,
                     int envelope_grid = kEnvelopeGrid);

// A class-KL bound: nondecreasing in s, decaying in the step count.
class KLBound {
 public:
  KLBound() = default;
  KLBound(std::string name, std::function<double(double, int)> eval, double s_max);

  double operator()(double s, int k) const;

  const std::string& name() const { return name_; }
  double s_max() const { return s_max_; }
  bool valid() const { return static_cast<bool>(eval_); }

 private:
  std::string name_;
  std::function<double(double, int)> eval_;
  double s_max_ = 0;
};

// beta(s, k) = alpha_lower^{-1}((I - alpha_tilde)^(k)(alpha_upper(s))),
// with the k-fold composition replaced by its nondecreasing envelope.
KLBound build_kl(const MonotoneFn& alpha_lower, const MonotoneFn& alpha_upper,
                 const MonotoneFn& alpha_tilde, int envelope_grid = kEnvelopeGrid);

}  // namespace piplus
