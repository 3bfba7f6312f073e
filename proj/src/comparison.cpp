#include "iiss/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

using detail::ComparisonNode;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

double eval_unchecked(const ComparisonFunction& f, double r);

double eval_form(const ComparisonNode& node, double r) {
  return std::visit(
      Overloaded{
          [&](const detail::IdentityForm&) { return r; },
          [&](const detail::PowerForm& p) { return p.a * std::pow(r, p.p); },
          [&](const detail::AffineExpForm& e) { return e.a * std::expm1(e.b * r); },
          [&](const detail::LinearExpForm& e) { return e.a * r * std::exp(e.b * r); },
          [&](const detail::PiecewiseLinearForm& pl) {
            const auto& k = pl.knots;
            auto it = std::upper_bound(k.begin(), k.end(), r,
                                       [](double x, const auto& knot) { return x < knot.first; });
            std::size_t hi = static_cast<std::size_t>(it - k.begin());
            if (hi == 0) return 0.0;
            if (hi >= k.size()) hi = k.size() - 1;
            const auto& a = k[hi - 1];
            const auto& b = k[hi];
            const double slope = (b.second - a.second) / (b.first - a.first);
            return a.second + slope * (r - a.first);
          },
          [&](const detail::ComposeForm& c) { return eval(c.outer, eval(c.inner, r)); },
          [&](const detail::SumForm& s) {
            double acc = 0.0;
            for (const auto& term : s.terms) acc += eval(term, r);
            return acc;
          },
          [&](const detail::InverseForm& inv) { return invert(inv.f, r); },
      },
      node.form);
}

double eval_unchecked(const ComparisonFunction& f, double r) { return eval_form(f.node(), r); }

double bisect_inverse(const ComparisonFunction& f, double y, double tol_abs) {
  double lo = 0.0;
  double hi = std::max(1.0, y);
  const double cap = f.domain_cap().value_or(std::numeric_limits<double>::infinity());
  hi = std::min(hi, cap);
  while (eval_unchecked(f, hi) < y) {
    if (hi >= cap) {
      throw Error(ErrorCode::NotReachable, "value is not reachable within the domain cap");
    }
    lo = hi;
    hi = std::min(hi * 2.0, cap);
    if (!std::isfinite(hi) || hi > 1e300) {
      throw Error(ErrorCode::NotReachable, "value is not reachable");
    }
  }
  // Width and residual must both be small; whichever stalls first on the
  // floating point grid ends the loop.
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = eval_unchecked(f, mid);
    if (fm < y) {
      lo = mid;
    } else {
      hi = mid;
    }
    const bool narrow = (hi - lo) <= tol_abs * std::max(1.0, hi);
    if (narrow && std::abs(eval_unchecked(f, 0.5 * (lo + hi)) - y) <= tol_abs) break;
  }
  return 0.5 * (lo + hi);
}

FunctionClass class_of_terms(const std::vector<ComparisonFunction>& terms) {
  for (const auto& t : terms) {
    if (t.function_class() == FunctionClass::KInfinity && !t.domain_cap()) {
      return FunctionClass::KInfinity;
    }
  }
  return FunctionClass::K;
}

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativeArgument: return "NegativeArgument";
    case ErrorCode::DomainExceeded: return "DomainExceeded";
    case ErrorCode::NotReachable: return "NotReachable";
    case ErrorCode::NoMajorant: return "NoMajorant";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::ZeroGain: return "ZeroGain";
    case ErrorCode::HorizonUnbounded: return "HorizonUnbounded";
    case ErrorCode::NoRoute: return "NoRoute";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ComparisonFunction::ComparisonFunction(std::shared_ptr<const ComparisonNode> node,
                                       FunctionClass cls, std::optional<double> cap)
    : node_(std::move(node)), class_(cls), cap_(cap) {}

ComparisonFunction ComparisonFunction::identity() {
  return {std::make_shared<ComparisonNode>(ComparisonNode{detail::IdentityForm{}}),
          FunctionClass::KInfinity, std::nullopt};
}

ComparisonFunction ComparisonFunction::power(double a, double p) {
  if (!positive_finite(a) || !positive_finite(p)) invalid("power: a and p must be positive");
  return {std::make_shared<ComparisonNode>(ComparisonNode{detail::PowerForm{a, p}}),
          FunctionClass::KInfinity, std::nullopt};
}

ComparisonFunction ComparisonFunction::affine_exp(double a, double b) {
  if (!positive_finite(a) || !positive_finite(b)) invalid("affine_exp: a and b must be positive");
  return {std::make_shared<ComparisonNode>(ComparisonNode{detail::AffineExpForm{a, b}}),
          FunctionClass::KInfinity, std::nullopt};
}

ComparisonFunction ComparisonFunction::linear_exp(double a, double b) {
  if (!positive_finite(a) || !std::isfinite(b) || b < 0.0) {
    invalid("linear_exp: a must be positive and b nonnegative");
  }
  return {std::make_shared<ComparisonNode>(ComparisonNode{detail::LinearExpForm{a, b}}),
          FunctionClass::KInfinity, std::nullopt};
}

ComparisonFunction ComparisonFunction::piecewise_linear(
    std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) invalid("piecewise_linear: need at least two knots");
  if (knots.front().first != 0.0 || knots.front().second != 0.0) {
    invalid("piecewise_linear: first knot must be (0, 0)");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first) || !(knots[i].second > knots[i - 1].second) ||
        !std::isfinite(knots[i].first) || !std::isfinite(knots[i].second)) {
      invalid("piecewise_linear: knots must be strictly increasing in both coordinates");
    }
  }
  return {std::make_shared<ComparisonNode>(
              ComparisonNode{detail::PiecewiseLinearForm{std::move(knots)}}),
          FunctionClass::KInfinity, std::nullopt};
}

ComparisonFunction ComparisonFunction::compose(ComparisonFunction outer, ComparisonFunction inner) {
  const FunctionClass cls = (outer.function_class() == FunctionClass::KInfinity &&
                             inner.function_class() == FunctionClass::KInfinity && !outer.cap_)
                                ? FunctionClass::KInfinity
                                : FunctionClass::K;
  auto cap = inner.cap_;
  return {std::make_shared<ComparisonNode>(
              ComparisonNode{detail::ComposeForm{std::move(outer), std::move(inner)}}),
          cls, cap};
}

ComparisonFunction ComparisonFunction::sum(std::vector<ComparisonFunction> terms) {
  if (terms.empty()) invalid("sum: needs at least one term");
  std::optional<double> cap;
  for (const auto& t : terms) {
    if (t.cap_) cap = cap ? std::min(*cap, *t.cap_) : *t.cap_;
  }
  const FunctionClass cls = class_of_terms(terms);
  return {std::make_shared<ComparisonNode>(ComparisonNode{detail::SumForm{std::move(terms)}}), cls,
          cap};
}

ComparisonFunction ComparisonFunction::inverse(ComparisonFunction f) {
  std::optional<double> cap;
  if (f.cap_) cap = eval(f, *f.cap_);
  const FunctionClass cls = f.class_;
  return {std::make_shared<ComparisonNode>(ComparisonNode{detail::InverseForm{std::move(f)}}), cls,
          cap};
}

ComparisonFunction ComparisonFunction::scaled(double c) const {
  return compose(power(c, 1.0), *this);
}

ComparisonFunction ComparisonFunction::with_cap(double cap) const {
  if (!positive_finite(cap)) invalid("domain cap must be positive and finite");
  return {node_, FunctionClass::K, cap};
}

double ComparisonFunction::operator()(double r) const { return eval(*this, r); }

double eval(const ComparisonFunction& f, double r) {
  if (std::isnan(r)) invalid("comparison function evaluated at NaN");
  if (r < 0.0) throw Error(ErrorCode::NegativeArgument, "comparison function argument is negative");
  if (f.domain_cap() && r > *f.domain_cap()) {
    std::ostringstream os;
    os << "argument " << r << " exceeds domain cap " << *f.domain_cap();
    throw Error(ErrorCode::DomainExceeded, os.str());
  }
  if (r == 0.0) return 0.0;
  return eval_unchecked(f, r);
}

double invert(const ComparisonFunction& f, double y, double tol) {
  if (std::isnan(y) || y < 0.0) throw Error(ErrorCode::NegativeArgument, "invert: y is negative");
  if (!positive_finite(tol)) invalid("invert: tolerance must be positive");
  if (y == 0.0) return 0.0;
  if (std::isinf(y)) return y;
  if (f.domain_cap() && eval(f, *f.domain_cap()) < y) {
    throw Error(ErrorCode::NotReachable, "value is not reachable within the domain cap");
  }
  const double tol_abs = tol * std::max(1.0, y);
  return std::visit(
      Overloaded{
          [&](const detail::IdentityForm&) { return y; },
          [&](const detail::PowerForm& p) { return std::pow(y / p.a, 1.0 / p.p); },
          [&](const detail::AffineExpForm& e) { return std::log1p(y / e.a) / e.b; },
          [&](const detail::PiecewiseLinearForm& pl) {
            const auto& k = pl.knots;
            auto it = std::upper_bound(k.begin(), k.end(), y,
                                       [](double v, const auto& knot) { return v < knot.second; });
            std::size_t hi = static_cast<std::size_t>(it - k.begin());
            if (hi >= k.size()) hi = k.size() - 1;
            const auto& a = k[hi - 1];
            const auto& b = k[hi];
            const double slope = (b.second - a.second) / (b.first - a.first);
            return a.first + (y - a.second) / slope;
          },
          [&](const detail::ComposeForm& c) {
            return invert(c.inner, invert(c.outer, y, tol), tol);
          },
          [&](const detail::InverseForm& inv) { return eval(inv.f, y); },
          [&](const auto&) { return bisect_inverse(f, y, tol_abs); },
      },
      f.node().form);
}

ClassCheck verify_class(const ComparisonFunction& f, double r_max, int samples_per_decade,
                        double unbounded_threshold) {
  ClassCheck out;
  if (!positive_finite(r_max) || samples_per_decade < 1) invalid("verify_class: bad sampling");
  if (f.domain_cap()) r_max = std::min(r_max, *f.domain_cap());
  out.zero_at_origin = eval(f, 0.0) == 0.0;
  out.strictly_increasing = true;
  constexpr int kDecades = 8;
  const double r_min = r_max * std::pow(10.0, -kDecades);
  const int n = samples_per_decade * kDecades;
  double prev = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = r_min * std::pow(10.0, static_cast<double>(i) / samples_per_decade);
    const double v = eval(f, std::min(r, r_max));
    if (!(v > prev)) {
      out.strictly_increasing = false;
      out.first_violation = r;
      break;
    }
    prev = v;
  }
  if (f.function_class() == FunctionClass::KInfinity && !f.domain_cap()) {
    out.unbounded = false;
    for (double big = std::max(1.0, r_max); big < 1e300; big *= 4.0) {
      const double v = eval(f, big);
      if (v > unbounded_threshold) {
        out.unbounded = true;
        break;
      }
    }
  }
  return out;
}

KLFunction::KLFunction(ComparisonFunction alpha1, ComparisonFunction alpha2, double scale)
    : alpha1_(std::move(alpha1)), alpha2_(std::move(alpha2)), scale_(scale) {
  if (!positive_finite(scale_)) invalid("KL scale must be positive");
  if (alpha1_.function_class() != FunctionClass::KInfinity ||
      alpha2_.function_class() != FunctionClass::KInfinity) {
    invalid("KL factors must be class K-infinity");
  }
}

double KLFunction::operator()(double r, double t) const {
  if (t < 0.0 || std::isnan(t)) throw Error(ErrorCode::NegativeArgument, "KL time is negative");
  return eval(alpha2_, scale_ * eval(alpha1_, r) * std::exp(-t));
}

ComparisonFunction KLFunction::at_time_zero() const {
  return ComparisonFunction::compose(alpha2_, alpha1_.scaled(scale_));
}

double kl_eval(const KLFunction& beta, double r, double t) { return beta(r, t); }

KLFunction kl_delay_shift(const KLFunction& beta, double tau) {
  if (std::isnan(tau) || tau < 0.0) throw Error(ErrorCode::NegativeArgument, "delay is negative");
  return KLFunction(beta.alpha1(), beta.alpha2(), beta.scale() * std::exp(tau));
}

namespace {

struct LogSample {
  double log_r;
  double t;
  double log_v;
};

// Range of residuals b - q a + k t; convex in (q, k).
double residual_range(std::span<const LogSample> s, double q, double k) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& x : s) {
    const double e = x.log_v - q * x.log_r + k * x.t;
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  return hi - lo;
}

template <class F>
double golden_min(F&& f, double lo, double hi, int iters) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace

KLFit fit_kl(std::span<const KLSample> samples) {
  if (samples.empty()) invalid("fit_kl: no samples");
  std::vector<LogSample> pos;
  for (const auto& s : samples) {
    if (!std::isfinite(s.r) || !std::isfinite(s.t) || !std::isfinite(s.value) || s.r < 0.0 ||
        s.t < 0.0 || s.value < 0.0) {
      invalid("fit_kl: samples must be finite and nonnegative");
    }
    if (s.value > 0.0) {
      if (s.r == 0.0) {
        throw Error(ErrorCode::NoMajorant, "fit_kl: positive value at r = 0 cannot be majorized");
      }
      pos.push_back({std::log(s.r), s.t, std::log(s.value)});
    }
  }

  constexpr double kQMin = 1e-3, kQMax = 20.0, kKMin = 1e-6, kKMax = 50.0;
  constexpr int kIters = 90;
  double q = 1.0;
  double k = 1.0;
  double log_c = 0.0;
  if (!pos.empty()) {
    auto best_k_for = [&](double qq) {
      return golden_min([&](double kk) { return residual_range(pos, qq, kk); }, kKMin, kKMax,
                        kIters);
    };
    q = golden_min([&](double qq) { return residual_range(pos, qq, best_k_for(qq)); }, kQMin, kQMax,
                   kIters);
    k = best_k_for(q);
    log_c = -std::numeric_limits<double>::infinity();
    for (const auto& x : pos) log_c = std::max(log_c, x.log_v - q * x.log_r + k * x.t);
  }
  // Rounding headroom so the majorization survives the alpha-factored path.
  const double coefficient = std::exp(log_c) * (1.0 + 1e-12);
  if (!positive_finite(coefficient)) {
    throw Error(ErrorCode::NoMajorant, "fit_kl: coefficient overflow within parameter bounds");
  }
  // C r^q e^{-k t} = alpha2(s alpha1(r) e^{-t}) with alpha1 = r^{q/k},
  // alpha2 = y^k, s = C^{1/k}.
  KLFunction beta(ComparisonFunction::power(1.0, q / k), ComparisonFunction::power(1.0, k),
                  std::pow(coefficient, 1.0 / k));
  double slack = 0.0;
  for (const auto& s : samples) {
    const double direct = coefficient * std::pow(s.r, q) * std::exp(-k * s.t);
    const double b = std::max(direct, beta(s.r, s.t));
    if (b < s.value * (1.0 - 1e-13)) {
      throw Error(ErrorCode::NoMajorant, "fit_kl: fitted function fails to majorize a sample");
    }
    slack = std::max(slack, b - s.value);
  }
  return KLFit{std::move(beta), slack, coefficient, q, k};
}

NondecreasingEnvelope::NondecreasingEnvelope(std::shared_ptr<const detail::EnvelopeNode> node)
    : node_(std::move(node)) {}

NondecreasingEnvelope NondecreasingEnvelope::constant(double c) {
  if (!positive_finite(c)) invalid("constant envelope must be positive");
  return NondecreasingEnvelope(
      std::make_shared<detail::EnvelopeNode>(detail::EnvelopeNode{detail::ConstantEnvelope{c}}));
}

NondecreasingEnvelope NondecreasingEnvelope::affine(double c0, double c1) {
  return power_plus_constant(c0, c1, 1.0);
}

NondecreasingEnvelope NondecreasingEnvelope::power_plus_constant(double c0, double c1, double p) {
  if (!positive_finite(c0) || !std::isfinite(c1) || c1 < 0.0 || !positive_finite(p)) {
    invalid("envelope requires c0 > 0, c1 >= 0, p > 0");
  }
  return NondecreasingEnvelope(std::make_shared<detail::EnvelopeNode>(
      detail::EnvelopeNode{detail::PowerPlusConstantEnvelope{c0, c1, p}}));
}

NondecreasingEnvelope NondecreasingEnvelope::lifted(NondecreasingEnvelope n) {
  return NondecreasingEnvelope(std::make_shared<detail::EnvelopeNode>(
      detail::EnvelopeNode{detail::LiftedEnvelope{std::move(n)}}));
}

NondecreasingEnvelope NondecreasingEnvelope::normalized(NondecreasingEnvelope n) {
  return NondecreasingEnvelope(std::make_shared<detail::EnvelopeNode>(
      detail::EnvelopeNode{detail::NormalizedEnvelope{std::move(n)}}));
}

double NondecreasingEnvelope::operator()(double r) const {
  if (std::isnan(r) || r < 0.0) throw Error(ErrorCode::NegativeArgument, "envelope argument < 0");
  return std::visit(Overloaded{
                        [](const detail::ConstantEnvelope& c) { return c.c; },
                        [&](const detail::PowerPlusConstantEnvelope& p) {
                          return p.c0 + p.c1 * std::pow(r, p.p);
                        },
                        [&](const detail::LiftedEnvelope& l) {
                          const double v = l.inner(r);
                          return v + 0.5 * v * v;
                        },
                        [&](const detail::NormalizedEnvelope& n) {
                          const double v = n.inner(r);
                          return std::max(v, v / n.inner(0.0));
                        },
                    },
                    node_->form);
}

}  // namespace iiss
