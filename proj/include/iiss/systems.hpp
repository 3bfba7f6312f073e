#pragma once

// Transition maps phi(t, t0, x0, u) for three classes of dynamics: ordinary
// differential equations, retarded functional equations and semilinear
// equations x' = A x + f. Each integrator forces step boundaries at the
// breakpoints of u, so the input is constant inside every step.

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "iiss/comparison.hpp"
#include "iiss/linalg.hpp"
#include "iiss/signals.hpp"

namespace iiss {

inline constexpr double kEscapeBound = 1e12;

struct BoundsMeta {
  std::optional<NondecreasingEnvelope> envelope_N;
  std::optional<ComparisonFunction> gain_gamma;
  std::optional<NondecreasingEnvelope> lipschitz_L;
  /// ||f(t, x, mu)|| <= (K ||x|| + d) gamma(||mu||) is declared.
  bool bilinear_form = false;
  double bilinear_K = 0.0;
  double bilinear_d = 0.0;
  double semigroup_M = 1.0;
  /// Decay rate lambda > 0 when positive, growth rate -w when negative.
  double semigroup_rate = 0.0;
  /// f(t, 0, 0) = 0 is declared.
  bool zero_equilibrium = true;

  void validate() const;
};

using OdeRhs = std::function<Vec(double t, const Vec& x, const Vec& u)>;

struct OdeSystem {
  std::size_t dim = 1;
  std::size_t input_dim = 1;
  OdeRhs rhs;
  std::optional<BoundsMeta> meta;
};

/// x on [-span, 0] as a piecewise cubic Hermite interpolant. Without
/// explicit slopes each interval uses its secant at both ends, which makes
/// the interpolant piecewise linear.
class HistorySegment {
public:
  /// n >= 2 uniform samples of fn on [-span, 0].
  static HistorySegment uniform(double span, std::size_t n,
                                const std::function<Vec(double)>& fn);
  static HistorySegment constant(double span, const Vec& value, std::size_t n = 64);

  /// Increasing grid from -span to 0 (a single node {0} when span = 0).
  HistorySegment(double span, std::vector<double> grid, std::vector<Vec> samples);
  /// slope_out[i] is the right derivative at node i, slope_in[i] the left one.
  HistorySegment(double span, std::vector<double> grid, std::vector<Vec> samples,
                 std::vector<Vec> slope_out, std::vector<Vec> slope_in);

  double span() const noexcept { return span_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(samples_.front().size()); }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<Vec>& samples() const noexcept { return samples_; }
  const std::vector<Vec>& slope_out() const noexcept { return slope_out_; }
  const std::vector<Vec>& slope_in() const noexcept { return slope_in_; }

  /// x(s) for s in [-span, 0].
  Vec operator()(double s) const;
  /// Sup norm over the grid nodes.
  double sup_norm() const;

private:
  void validate() const;

  double span_;
  std::vector<double> grid_;
  std::vector<Vec> samples_;
  std::vector<Vec> slope_out_;
  std::vector<Vec> slope_in_;
};

namespace detail {
class DenseStore;
}

/// Read-only access to x_t while a delay right-hand side is evaluated.
class HistoryView {
public:
  HistoryView(const detail::DenseStore& store, double t, double span, const Vec& current);

  double span() const noexcept { return span_; }
  double time() const noexcept { return t_; }
  /// x(t + s) for s in [-span, 0].
  Vec operator()(double s) const;
  const Vec& current() const noexcept { return current_; }

private:
  const detail::DenseStore& store_;
  double t_;
  double span_;
  const Vec& current_;
};

using DelayRhs = std::function<Vec(double t, const HistoryView& history, const Vec& u)>;

struct DelaySystem {
  std::size_t dim = 1;
  std::size_t input_dim = 1;
  double tau = 0.0;
  DelayRhs rhs;
  std::optional<BoundsMeta> meta;
};

struct SemilinearSystem {
  std::size_t dim = 1;
  std::size_t input_dim = 1;
  Mat a_matrix;
  OdeRhs nonlinearity;
  std::optional<BoundsMeta> meta;
};

using SystemDef = std::variant<OdeSystem, DelaySystem, SemilinearSystem>;

std::size_t state_dim(const SystemDef& sys);
std::size_t input_dim(const SystemDef& sys);
const std::optional<BoundsMeta>& bounds_meta(const SystemDef& sys);
/// Maximal delay; 0 for the delay-free classes.
double delay_span(const SystemDef& sys);

struct StepStats {
  double step = 0.0;
  std::size_t steps_taken = 0;
  /// Step-doubling error estimate; NaN unless requested.
  double error_estimate = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Nodes with one-sided derivatives and piecewise cubic Hermite
/// interpolation between them.
class DenseStore {
public:
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> slope_out;  // derivative from the right at each node
  std::vector<Vec> slope_in;   // derivative from the left at each node

  Vec at(double t) const;
  /// One-sided derivative of the interpolant; `from_left` picks the interval
  /// ending at t when t is a node.
  Vec derivative_at(double t, bool from_left) const;
  void push(double t, Vec x, Vec in, Vec out);
};

}  // namespace detail

class Trajectory {
public:
  double t0() const noexcept { return t0_; }
  double t_end() const noexcept { return store_.times.back(); }
  std::size_t dim() const noexcept { return dim_; }
  /// Grid from t0 on; the first entry is t0.
  std::span<const double> grid() const noexcept;
  std::span<const Vec> states() const noexcept;
  /// Prepended initial history, empty for delay-free systems.
  double history_span() const noexcept { return span_; }

  bool escaped() const noexcept { return escaped_; }
  double escape_time() const noexcept { return escape_time_; }
  const StepStats& step_stats() const noexcept { return stats_; }
  StepStats& step_stats() noexcept { return stats_; }

  /// Dense value x(t) for t in [t0 - span, t_end].
  Vec state_at(double t) const;
  /// x_t as a segment sharing the stored nodes, so restarting from it
  /// reproduces the original interpolant.
  HistorySegment history_at(double t) const;
  /// max |x(s)| over the grid nodes in [t - span, t] (plus both ends).
  double history_norm(double t) const;
  /// max |x(t)| over the grid nodes (history excluded).
  double sup_norm() const;

  /// Throws NonFinite when the escape guard fired.
  const Trajectory& require_finite() const;

  const detail::DenseStore& store() const noexcept { return store_; }

private:
  friend class TrajectoryBuilder;
  double t0_ = 0.0;
  std::size_t dim_ = 0;
  double span_ = 0.0;
  std::size_t first_ = 0;  // index of t0 in the store
  bool escaped_ = false;
  double escape_time_ = std::numeric_limits<double>::quiet_NaN();
  StepStats stats_;
  detail::DenseStore store_;
};

struct IntegrateOptions {
  double escape_bound = kEscapeBound;
  /// Throw NonFinite on escape instead of returning a truncated trajectory.
  bool throw_on_escape = true;
  /// Extra step boundaries besides the breakpoints of u.
  std::vector<double> forced_nodes;
};

Trajectory integrate_ode(const OdeSystem& sys, double t0, const Vec& x0, const Signal& u,
                         double t_end, double step, const IntegrateOptions& opts = {});

Trajectory integrate_delay(const DelaySystem& sys, double t0, const HistorySegment& psi,
                           const Signal& u, double t_end, double step,
                           const IntegrateOptions& opts = {});

Trajectory integrate_semilinear(const SemilinearSystem& sys, double t0, const Vec& x0,
                                const Signal& u, double t_end, double step,
                                const IntegrateOptions& opts = {});

/// Dispatch on the system class. For delay systems x0 becomes a constant
/// history.
Trajectory simulate(const SystemDef& sys, double t0, const Vec& x0, const Signal& u,
                    double t_end, double step, const IntegrateOptions& opts = {});

/// Global error estimate of the endpoint by step doubling (Richardson with
/// the integrator's order). Returned in the trajectory's step stats.
Trajectory simulate_with_error(const SystemDef& sys, double t0, const Vec& x0, const Signal& u,
                               double t_end, double step, const IntegrateOptions& opts = {});

/// Convergence order of the integrator used for this class.
int integrator_order(const SystemDef& sys);

struct SemigroupBound {
  double M = 1.0;
  /// Decay rate when `decaying`, growth rate otherwise; always >= 0.
  double rate = 0.0;
  bool decaying = true;

  double envelope(double t) const;
};

/// Sampled envelope ||e^{At}|| <= M e^{-rate t} (or M e^{rate t}) on
/// grid_n uniform points of [0, horizon].
SemigroupBound semigroup_bound(const Mat& a, double horizon, std::size_t grid_n);

/// Embeddings between the classes: x' = f as a delay system with tau = 0 or
/// a semilinear one with A = 0, and x' = A x + f as an ODE.
DelaySystem as_delay(const OdeSystem& sys);
SemilinearSystem as_semilinear(const OdeSystem& sys);
OdeSystem as_ode(const SemilinearSystem& sys);

}  // namespace iiss
