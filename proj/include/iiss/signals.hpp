#pragma once

// Piecewise-constant inputs u : R>=0 -> R^m and the admissible input
// functionals evaluated on them.
//
// Segment convention: with breakpoints b_0 < b_1 < ... < b_{k-1} (all > 0),
// value v_i holds on (b_{i-1}, b_i] where b_{-1} = 0, and the tail value holds
// for t > b_{k-1}. Evaluating at a breakpoint returns the left segment. All
// functionals are computed exactly; nothing here uses quadrature.

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iiss/comparison.hpp"

namespace iiss {

using Vec = Eigen::VectorXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class Signal {
public:
  static Signal zero(std::size_t dim);
  /// value for every t >= 0.
  static Signal constant(Vec value);
  /// value on (0, t_end], zero afterwards.
  static Signal pulse(Vec value, double t_end);

  Signal(std::size_t dim, std::vector<double> breakpoints, std::vector<Vec> values, Vec tail);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<Vec>& values() const noexcept { return values_; }
  const Vec& tail() const noexcept { return tail_; }

  /// u(t); at a breakpoint the left segment's value. u(0) is the first
  /// segment's value.
  Vec operator()(double t) const;
  /// u(t+), the value on the segment starting at t.
  Vec right_limit(double t) const;

  double last_breakpoint() const noexcept;
  bool is_zero() const noexcept;
  bool tail_is_zero() const noexcept;

  /// 0 on [0, t0] and u(t - t0) for t > t0.
  Signal shifted(double t0) const;
  Signal scaled(double c) const;

  std::vector<Vec> sample(std::span<const double> times) const;

  friend bool operator==(const Signal& a, const Signal& b);

private:
  void normalize();

  std::size_t dim_;
  std::vector<double> breakpoints_;
  std::vector<Vec> values_;
  Vec tail_;
};

/// u on [0, t] and v on (t, infinity).
Signal concat(const Signal& u, const Signal& v, double t);

/// u on (s, t] and zero elsewhere; t may be infinite.
Signal truncate(const Signal& u, double s, double t = kInfinity);

struct SupMeasure {};
struct SupSeqMeasure {
  std::vector<double> seq;
};
struct IntegralMeasure {
  ComparisonFunction kappa;
};
struct IntegralSeqMeasure {
  ComparisonFunction kappa;
  std::vector<double> seq;
};
struct WindowedIntegralMeasure {
  ComparisonFunction kappa;
  double window;
};

class MeasureSpec {
public:
  using Variant = std::variant<SupMeasure, SupSeqMeasure, IntegralMeasure, IntegralSeqMeasure,
                               WindowedIntegralMeasure>;

  static MeasureSpec sup();
  static MeasureSpec sup_seq(std::vector<double> seq);
  static MeasureSpec integral(ComparisonFunction kappa);
  static MeasureSpec integral_seq(ComparisonFunction kappa, std::vector<double> seq);
  static MeasureSpec windowed_integral(ComparisonFunction kappa, double window);

  const Variant& variant() const noexcept { return v_; }
  /// True for the integral variants, whose superadditivity holds with
  /// equality.
  bool satisfies_condition_e() const noexcept;
  std::string name() const;

private:
  explicit MeasureSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Exact value of the functional; +infinity for an integral variant with a
/// nonzero tail. `horizon`, when given, must cover the last breakpoint.
double input_measure(const Signal& u, const MeasureSpec& spec,
                     std::optional<double> horizon = std::nullopt);

/// ||u_{(t0, t]}|| for every t in `times` (each >= t0).
std::vector<double> truncated_measure_profile(const Signal& u, const MeasureSpec& spec, double t0,
                                              std::span<const double> times);

struct AdmissibilityReport {
  double truncated = 0.0;  // ||u_(s,t]||
  double tail = 0.0;       // ||u_(s,inf)||
  double full = 0.0;       // ||u||
  bool truncated_finite = true;
  bool truncated_le_tail = true;
  bool tail_le_full = true;
  bool pass() const noexcept { return truncated_finite && truncated_le_tail && tail_le_full; }
};

AdmissibilityReport check_admissibility(const MeasureSpec& spec, const Signal& u, double s,
                                        double t);

struct ConditionEReport {
  double whole = 0.0;   // ||u_(t1,t3]||
  double first = 0.0;   // ||u_(t1,t2]||
  double second = 0.0;  // ||u_(t2,t3]||
  bool superadditive = false;
  bool equality = false;
  bool equality_required = false;
  bool pass() const noexcept { return superadditive && (!equality_required || equality); }
};

inline constexpr double kConditionEEqualityTol = 1e-12;

ConditionEReport check_condition_e(const MeasureSpec& spec, const Signal& u, double t1, double t2,
                                   double t3);

/// Returns c*u with the largest amplitude factor c > 0 whose measure does not
/// exceed `target` (bisection on c). The zero signal is returned unchanged.
Signal scale_to_measure(const Signal& u, const MeasureSpec& spec, double target);

}  // namespace iiss
