#include "iiss/signals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool same(const Vec& a, const Vec& b) { return a.size() == b.size() && (a.array() == b.array()).all(); }

// Index of the segment holding u(t) under the left-value convention.
std::size_t segment_index(const std::vector<double>& bps, double t) {
  return static_cast<std::size_t>(std::lower_bound(bps.begin(), bps.end(), t) - bps.begin());
}

void check_time(double t, const char* what) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be >= 0");
}

const std::vector<double>* sequence_of(const MeasureSpec& spec) {
  if (auto* s = std::get_if<SupSeqMeasure>(&spec.variant())) return &s->seq;
  if (auto* s = std::get_if<IntegralSeqMeasure>(&spec.variant())) return &s->seq;
  return nullptr;
}

void validate_sequence(const std::vector<double>& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!(seq[i] > 0.0) || !std::isfinite(seq[i]) || (i > 0 && !(seq[i] > seq[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument,
                  "measure sequence must be positive and strictly increasing");
    }
  }
}

// Integral of kappa(|u|) over (a, b], a <= b, both finite.
double integral_between(const Signal& u, const ComparisonFunction& kappa, double a, double b) {
  if (!(b > a)) return 0.0;
  const auto& bps = u.breakpoints();
  double acc = 0.0;
  double left = 0.0;
  for (std::size_t i = 0; i <= bps.size(); ++i) {
    const double right = i < bps.size() ? bps[i] : kInfinity;
    const double lo = std::max(left, a);
    const double hi = std::min(right, b);
    if (hi > lo) {
      const Vec& v = i < bps.size() ? u.values()[i] : u.tail();
      const double k = eval(kappa, v.norm());
      if (k != 0.0) acc += k * (hi - lo);
    }
    if (right >= b) break;
    left = right;
  }
  return acc;
}

double integral_measure(const Signal& u, const ComparisonFunction& kappa) {
  if (!u.tail_is_zero()) return kInfinity;
  return integral_between(u, kappa, 0.0, u.last_breakpoint());
}

double sup_measure(const Signal& u) {
  double m = u.tail().norm();
  for (const auto& v : u.values()) m = std::max(m, v.norm());
  return m;
}

double windowed_measure(const Signal& u, const ComparisonFunction& kappa, double window) {
  const auto& bps = u.breakpoints();
  double best = 0.0;
  if (!u.tail_is_zero()) best = eval(kappa, u.tail().norm()) * window;
  // The windowed integral is piecewise linear in the window start with kinks
  // where either end crosses a breakpoint; its maximum sits at one of them.
  std::vector<double> starts{0.0};
  for (double b : bps) {
    starts.push_back(b);
    if (b - window > 0.0) starts.push_back(b - window);
  }
  for (double s : starts) best = std::max(best, integral_between(u, kappa, s, s + window));
  return best;
}

double seq_point_sup(const Signal& u, const std::vector<double>& seq) {
  double m = 0.0;
  const double last = u.last_breakpoint();
  for (double tau : seq) {
    if (tau > last) break;
    m = std::max(m, u(tau).norm());
  }
  // An unbounded sequence eventually samples the tail.
  return std::max(m, u.tail().norm());
}

double seq_point_sum(const Signal& u, const ComparisonFunction& kappa,
                     const std::vector<double>& seq) {
  if (!u.tail_is_zero()) return kInfinity;
  double acc = 0.0;
  const double last = u.last_breakpoint();
  for (double tau : seq) {
    if (tau > last) break;
    acc += eval(kappa, u(tau).norm());
  }
  return acc;
}

}  // namespace

Signal::Signal(std::size_t dim, std::vector<double> breakpoints, std::vector<Vec> values, Vec tail)
    : dim_(dim), breakpoints_(std::move(breakpoints)), values_(std::move(values)),
      tail_(std::move(tail)) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "signal dimension must be positive");
  if (breakpoints_.size() != values_.size()) {
    throw Error(ErrorCode::InvalidArgument, "signal needs one value per breakpoint");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i]) || !(breakpoints_[i] > 0.0) ||
        (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument,
                  "signal breakpoints must be positive and strictly increasing");
    }
    if (static_cast<std::size_t>(values_[i].size()) != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "signal value has wrong dimension");
    }
    if (!values_[i].allFinite()) throw Error(ErrorCode::InvalidArgument, "signal value not finite");
  }
  if (static_cast<std::size_t>(tail_.size()) != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "signal tail has wrong dimension");
  }
  if (!tail_.allFinite()) throw Error(ErrorCode::InvalidArgument, "signal tail not finite");
  normalize();
}

Signal Signal::zero(std::size_t dim) { return Signal(dim, {}, {}, Vec::Zero(dim)); }

Signal Signal::constant(Vec value) {
  const auto dim = static_cast<std::size_t>(value.size());
  return Signal(dim, {}, {}, std::move(value));
}

Signal Signal::pulse(Vec value, double t_end) {
  const auto dim = static_cast<std::size_t>(value.size());
  return Signal(dim, {t_end}, {std::move(value)}, Vec::Zero(dim));
}

void Signal::normalize() {
  std::vector<double> bps;
  std::vector<Vec> vals;
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!vals.empty() && same(vals.back(), values_[i])) {
      bps.back() = breakpoints_[i];
    } else {
      bps.push_back(breakpoints_[i]);
      vals.push_back(values_[i]);
    }
  }
  while (!vals.empty() && same(vals.back(), tail_)) {
    vals.pop_back();
    bps.pop_back();
  }
  breakpoints_ = std::move(bps);
  values_ = std::move(vals);
}

Vec Signal::operator()(double t) const {
  check_time(t, "signal time");
  const std::size_t i = segment_index(breakpoints_, t);
  return i < values_.size() ? values_[i] : tail_;
}

Vec Signal::right_limit(double t) const {
  check_time(t, "signal time");
  const auto i = static_cast<std::size_t>(
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin());
  return i < values_.size() ? values_[i] : tail_;
}

double Signal::last_breakpoint() const noexcept {
  return breakpoints_.empty() ? 0.0 : breakpoints_.back();
}

bool Signal::tail_is_zero() const noexcept { return (tail_.array() == 0.0).all(); }

bool Signal::is_zero() const noexcept { return breakpoints_.empty() && tail_is_zero(); }

Signal Signal::shifted(double t0) const {
  check_time(t0, "shift");
  if (t0 == 0.0) return *this;
  std::vector<double> bps{t0};
  std::vector<Vec> vals{Vec::Zero(dim_)};
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const double b = breakpoints_[i] + t0;
    if (b > bps.back()) {
      bps.push_back(b);
      vals.push_back(values_[i]);
    }
  }
  return Signal(dim_, std::move(bps), std::move(vals), tail_);
}

Signal Signal::scaled(double c) const {
  if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "scale must be finite");
  std::vector<Vec> vals;
  vals.reserve(values_.size());
  for (const auto& v : values_) vals.push_back(c * v);
  return Signal(dim_, breakpoints_, std::move(vals), c * tail_);
}

std::vector<Vec> Signal::sample(std::span<const double> times) const {
  std::vector<Vec> out;
  out.reserve(times.size());
  for (double t : times) out.push_back((*this)(t));
  return out;
}

bool operator==(const Signal& a, const Signal& b) {
  if (a.dim_ != b.dim_ || a.breakpoints_ != b.breakpoints_ || !same(a.tail_, b.tail_)) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (!same(a.values_[i], b.values_[i])) return false;
  }
  return true;
}

Signal concat(const Signal& u, const Signal& v, double t) {
  if (u.dim() != v.dim()) throw Error(ErrorCode::DimensionMismatch, "concat: dimension mismatch");
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::InvalidArgument, "concat: time must be positive and finite");
  }
  std::vector<double> bps;
  std::vector<Vec> vals;
  for (double b : u.breakpoints()) {
    if (b >= t) break;
    bps.push_back(b);
    vals.push_back(u(b));
  }
  bps.push_back(t);
  vals.push_back(u(t));
  for (double b : v.breakpoints()) {
    if (b <= t) continue;
    bps.push_back(b);
    vals.push_back(v(b));
  }
  return Signal(u.dim(), std::move(bps), std::move(vals), v.tail());
}

Signal truncate(const Signal& u, double s, double t) {
  if (!(s >= 0.0) || !(t > s)) throw Error(ErrorCode::InvalidInterval, "truncate: need 0 <= s < t");
  const Vec zero = Vec::Zero(u.dim());
  std::vector<double> bps;
  std::vector<Vec> vals;
  if (s > 0.0) {
    bps.push_back(s);
    vals.push_back(zero);
  }
  for (double b : u.breakpoints()) {
    if (b <= s) continue;
    if (b >= t) break;
    bps.push_back(b);
    vals.push_back(u(b));
  }
  if (std::isinf(t)) return Signal(u.dim(), std::move(bps), std::move(vals), u.tail());
  bps.push_back(t);
  vals.push_back(u(t));
  return Signal(u.dim(), std::move(bps), std::move(vals), zero);
}

MeasureSpec MeasureSpec::sup() { return MeasureSpec(SupMeasure{}); }

MeasureSpec MeasureSpec::sup_seq(std::vector<double> seq) {
  validate_sequence(seq);
  return MeasureSpec(SupSeqMeasure{std::move(seq)});
}

MeasureSpec MeasureSpec::integral(ComparisonFunction kappa) {
  return MeasureSpec(IntegralMeasure{std::move(kappa)});
}

MeasureSpec MeasureSpec::integral_seq(ComparisonFunction kappa, std::vector<double> seq) {
  validate_sequence(seq);
  return MeasureSpec(IntegralSeqMeasure{std::move(kappa), std::move(seq)});
}

MeasureSpec MeasureSpec::windowed_integral(ComparisonFunction kappa, double window) {
  if (!(window > 0.0) || !std::isfinite(window)) {
    throw Error(ErrorCode::InvalidArgument, "window length must be positive");
  }
  return MeasureSpec(WindowedIntegralMeasure{std::move(kappa), window});
}

bool MeasureSpec::satisfies_condition_e() const noexcept {
  return std::holds_alternative<IntegralMeasure>(v_) ||
         std::holds_alternative<IntegralSeqMeasure>(v_);
}

std::string MeasureSpec::name() const {
  return std::visit(Overloaded{
                        [](const SupMeasure&) -> std::string { return "sup"; },
                        [](const SupSeqMeasure&) -> std::string { return "sup_seq"; },
                        [](const IntegralMeasure&) -> std::string { return "integral"; },
                        [](const IntegralSeqMeasure&) -> std::string { return "integral_seq"; },
                        [](const WindowedIntegralMeasure&) -> std::string { return "windowed"; },
                    },
                    v_);
}

double input_measure(const Signal& u, const MeasureSpec& spec, std::optional<double> horizon) {
  if (horizon && *horizon < u.last_breakpoint()) {
    throw Error(ErrorCode::InvalidArgument, "measure horizon must cover the last breakpoint");
  }
  return std::visit(
      Overloaded{
          [&](const SupMeasure&) { return sup_measure(u); },
          [&](const SupSeqMeasure& m) { return sup_measure(u) + seq_point_sup(u, m.seq); },
          [&](const IntegralMeasure& m) { return integral_measure(u, m.kappa); },
          [&](const IntegralSeqMeasure& m) {
            const double base = integral_measure(u, m.kappa);
            if (std::isinf(base)) return base;
            return base + seq_point_sum(u, m.kappa, m.seq);
          },
          [&](const WindowedIntegralMeasure& m) { return windowed_measure(u, m.kappa, m.window); },
      },
      spec.variant());
}

std::vector<double> truncated_measure_profile(const Signal& u, const MeasureSpec& spec, double t0,
                                              std::span<const double> times) {
  std::vector<double> out(times.size(), 0.0);
  const auto& bps = u.breakpoints();
  auto value_norm = [&](std::size_t seg) {
    return (seg < bps.size() ? u.values()[seg] : u.tail()).norm();
  };

  // Integral variants: cumulative integral from t0 plus point terms.
  const ComparisonFunction* kappa = nullptr;
  if (auto* m = std::get_if<IntegralMeasure>(&spec.variant())) kappa = &m->kappa;
  if (auto* m = std::get_if<IntegralSeqMeasure>(&spec.variant())) kappa = &m->kappa;
  const bool is_sup = std::holds_alternative<SupMeasure>(spec.variant()) ||
                      std::holds_alternative<SupSeqMeasure>(spec.variant());
  const std::vector<double>* seq = sequence_of(spec);

  if (kappa == nullptr && !is_sup) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      out[i] = times[i] > t0 ? input_measure(truncate(u, t0, times[i]), spec) : 0.0;
    }
    return out;
  }

  double acc = 0.0;     // integral or running sup of |u| over (t0, cursor]
  double seq_acc = 0.0; // point terms over (t0, cursor]
  double cursor = t0;
  std::size_t seg = segment_index(bps, std::nextafter(t0, kInfinity));
  std::size_t seq_pos = 0;
  if (seq) {
    seq_pos = static_cast<std::size_t>(std::upper_bound(seq->begin(), seq->end(), t0) - seq->begin());
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < cursor) {
      throw Error(ErrorCode::InvalidArgument, "measure profile times must be nondecreasing");
    }
    while (cursor < t) {
      const double seg_end = seg < bps.size() ? bps[seg] : kInfinity;
      const double step_end = std::min(seg_end, t);
      const double n = value_norm(seg);
      if (kappa) {
        const double k = eval(*kappa, n);
        if (k != 0.0) acc += k * (step_end - cursor);
      } else {
        acc = std::max(acc, n);
      }
      cursor = step_end;
      if (cursor >= seg_end) ++seg;
    }
    if (seq) {
      while (seq_pos < seq->size() && (*seq)[seq_pos] <= t) {
        const double n = u((*seq)[seq_pos]).norm();
        if (kappa) {
          seq_acc += eval(*kappa, n);
        } else {
          seq_acc = std::max(seq_acc, n);
        }
        ++seq_pos;
      }
    }
    out[i] = t > t0 ? acc + seq_acc : 0.0;
  }
  return out;
}

AdmissibilityReport check_admissibility(const MeasureSpec& spec, const Signal& u, double s,
                                        double t) {
  if (!(s >= 0.0) || !(t > s)) {
    throw Error(ErrorCode::InvalidInterval, "admissibility: need 0 <= s < t");
  }
  AdmissibilityReport r;
  r.truncated = input_measure(truncate(u, s, t), spec);
  r.tail = input_measure(truncate(u, s), spec);
  r.full = input_measure(u, spec);
  // Floating evaluation of the windowed sup at different kink sets can differ
  // by a few ulps, so the orderings allow a relative rounding slack.
  auto le = [](double a, double b) {
    return a <= b || a - b <= kConditionEEqualityTol * std::max(std::abs(a), std::abs(b));
  };
  r.truncated_finite = std::isfinite(r.truncated);
  r.truncated_le_tail = le(r.truncated, r.tail);
  r.tail_le_full = le(r.tail, r.full);
  return r;
}

ConditionEReport check_condition_e(const MeasureSpec& spec, const Signal& u, double t1, double t2,
                                   double t3) {
  if (!(t1 >= 0.0) || !(t2 > t1) || !(t3 > t2)) {
    throw Error(ErrorCode::InvalidInterval, "condition (E): need 0 <= t1 < t2 < t3");
  }
  ConditionEReport r;
  r.whole = input_measure(truncate(u, t1, t3), spec);
  r.first = input_measure(truncate(u, t1, t2), spec);
  r.second = input_measure(truncate(u, t2, t3), spec);
  const double parts = r.first + r.second;
  r.superadditive = r.whole + kConditionEEqualityTol >= parts;
  r.equality = std::abs(r.whole - parts) <= kConditionEEqualityTol;
  r.equality_required = spec.satisfies_condition_e();
  return r;
}

Signal scale_to_measure(const Signal& u, const MeasureSpec& spec, double target) {
  if (!(target >= 0.0)) throw Error(ErrorCode::InvalidArgument, "target measure must be >= 0");
  if (u.is_zero()) return u;
  if (target == 0.0) return Signal::zero(u.dim());
  const double base = input_measure(u, spec);
  if (std::isinf(base)) {
    throw Error(ErrorCode::InvalidArgument, "cannot scale a signal with infinite measure");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (input_measure(u.scaled(hi), spec) <= target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return u.scaled(lo);
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (input_measure(u.scaled(mid), spec) <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return u.scaled(lo);
}

}  // namespace iiss
