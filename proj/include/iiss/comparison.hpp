#pragma once

// Comparison functions (class K / K-infinity), KL decay bounds and positive
// nondecreasing envelopes. All three are immutable values backed by shared,
// never-mutated expression nodes, so copies are cheap and thread safe.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace iiss {

enum class FunctionClass { K, KInfinity };

namespace detail {
struct ComparisonNode;
struct EnvelopeNode;
}  // namespace detail

class ComparisonFunction {
public:
  /// The identity map r -> r.
  static ComparisonFunction identity();
  /// r -> a * r^p with a > 0, p > 0.
  static ComparisonFunction power(double a, double p);
  /// r -> a * (exp(b r) - 1) with a > 0, b > 0.
  static ComparisonFunction affine_exp(double a, double b);
  /// r -> a * r * exp(b r) with a > 0, b >= 0.
  static ComparisonFunction linear_exp(double a, double b);
  /// Linear interpolation through knots (r_i, y_i); the first knot must be
  /// (0, 0), both coordinates strictly increasing. Extrapolated past the last
  /// knot with the last slope.
  static ComparisonFunction piecewise_linear(std::vector<std::pair<double, double>> knots);
  /// r -> outer(inner(r)).
  static ComparisonFunction compose(ComparisonFunction outer, ComparisonFunction inner);
  /// Pointwise sum of at least one term.
  static ComparisonFunction sum(std::vector<ComparisonFunction> terms);
  /// Functional inverse f^{-1}.
  static ComparisonFunction inverse(ComparisonFunction f);

  /// c * f, c > 0.
  ComparisonFunction scaled(double c) const;
  /// Same function with a finite evaluation cap.
  ComparisonFunction with_cap(double cap) const;

  double operator()(double r) const;

  FunctionClass function_class() const noexcept { return class_; }
  const std::optional<double>& domain_cap() const noexcept { return cap_; }
  const detail::ComparisonNode& node() const noexcept { return *node_; }

private:
  ComparisonFunction(std::shared_ptr<const detail::ComparisonNode> node, FunctionClass cls,
                     std::optional<double> cap);

  std::shared_ptr<const detail::ComparisonNode> node_;
  FunctionClass class_;
  std::optional<double> cap_;
};

/// Evaluates f at r. Throws NegativeArgument for r < 0 and DomainExceeded
/// past the cap.
double eval(const ComparisonFunction& f, double r);

/// Returns r with |f(r) - y| <= tol * max(1, y). Closed forms are used where
/// the family has one; otherwise bracketing bisection.
double invert(const ComparisonFunction& f, double y, double tol = 1e-10);

struct ClassCheck {
  bool zero_at_origin = false;
  bool strictly_increasing = false;
  bool unbounded = true;  // only meaningful for KInfinity
  double first_violation = -1.0;
  bool ok() const noexcept { return zero_at_origin && strictly_increasing && unbounded; }
};

/// Sampled class membership check on [0, r_max] with log spacing.
ClassCheck verify_class(const ComparisonFunction& f, double r_max,
                        int samples_per_decade = 256, double unbounded_threshold = 1e6);

/// beta(r, t) = alpha2(scale * alpha1(r) * exp(-t)).
class KLFunction {
public:
  KLFunction(ComparisonFunction alpha1, ComparisonFunction alpha2, double scale = 1.0);

  double operator()(double r, double t) const;

  const ComparisonFunction& alpha1() const noexcept { return alpha1_; }
  const ComparisonFunction& alpha2() const noexcept { return alpha2_; }
  double scale() const noexcept { return scale_; }

  /// r -> beta(r, 0), itself a K-infinity function.
  ComparisonFunction at_time_zero() const;

private:
  ComparisonFunction alpha1_;
  ComparisonFunction alpha2_;
  double scale_;
};

double kl_eval(const KLFunction& beta, double r, double t);

/// alpha2(e^tau * scale * alpha1(r) * e^{-t}); majorizes beta pointwise and
/// bounds beta(r, t - tau) for t >= tau.
KLFunction kl_delay_shift(const KLFunction& beta, double tau);

struct KLSample {
  double r;
  double t;
  double value;
};

/// Majorizing fit in the family beta(r, t) = C * r^q * exp(-k t).
struct KLFit {
  KLFunction beta;
  double max_slack;   // max over samples of beta(r,t) - value (>= 0)
  double coefficient; // C
  double state_exponent;  // q
  double decay_rate;  // k
};

KLFit fit_kl(std::span<const KLSample> samples);

/// Strictly positive nondecreasing map R>=0 -> R>0.
class NondecreasingEnvelope {
public:
  static NondecreasingEnvelope constant(double c);
  /// c0 + c1 * r, c0 > 0, c1 >= 0.
  static NondecreasingEnvelope affine(double c0, double c1);
  /// c0 + c1 * r^p, c0 > 0, c1 >= 0, p > 0.
  static NondecreasingEnvelope power_plus_constant(double c0, double c1, double p);
  /// r -> N(r) + N(r)^2 / 2.
  static NondecreasingEnvelope lifted(NondecreasingEnvelope n);
  /// r -> max(N(r), N(r) / N(0)).
  static NondecreasingEnvelope normalized(NondecreasingEnvelope n);

  double operator()(double r) const;
  const detail::EnvelopeNode& node() const noexcept { return *node_; }

private:
  explicit NondecreasingEnvelope(std::shared_ptr<const detail::EnvelopeNode> node);
  std::shared_ptr<const detail::EnvelopeNode> node_;
};

namespace detail {

struct IdentityForm {};
struct PowerForm {
  double a;
  double p;
};
struct AffineExpForm {
  double a;
  double b;
};
struct LinearExpForm {
  double a;
  double b;
};
struct PiecewiseLinearForm {
  std::vector<std::pair<double, double>> knots;
};
struct ComposeForm {
  ComparisonFunction outer;
  ComparisonFunction inner;
};
struct SumForm {
  std::vector<ComparisonFunction> terms;
};
struct InverseForm {
  ComparisonFunction f;
};

}  // namespace detail
}  // namespace iiss

#include <variant>

namespace iiss::detail {

struct ComparisonNode {
  std::variant<IdentityForm, PowerForm, AffineExpForm, LinearExpForm, PiecewiseLinearForm,
               ComposeForm, SumForm, InverseForm>
      form;
};

struct ConstantEnvelope {
  double c;
};
struct PowerPlusConstantEnvelope {
  double c0;
  double c1;
  double p;  // 1 for the affine family
};
struct LiftedEnvelope {
  NondecreasingEnvelope inner;
};
struct NormalizedEnvelope {
  NondecreasingEnvelope inner;
};

struct EnvelopeNode {
  std::variant<ConstantEnvelope, PowerPlusConstantEnvelope, LiftedEnvelope, NormalizedEnvelope>
      form;
};

}  // namespace iiss::detail
