#include "iiss/systems.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

Vec hermite(double a, double b, const Vec& xa, const Vec& xb, const Vec& ma, const Vec& mb,
            double t) {
  const double len = b - a;
  const double th = (t - a) / len;
  const double th2 = th * th;
  const double th3 = th2 * th;
  return (2 * th3 - 3 * th2 + 1) * xa + ((th3 - 2 * th2 + th) * len) * ma +
         (-2 * th3 + 3 * th2) * xb + ((th3 - th2) * len) * mb;
}

Vec hermite_derivative(double a, double b, const Vec& xa, const Vec& xb, const Vec& ma,
                       const Vec& mb, double t) {
  const double len = b - a;
  const double th = (t - a) / len;
  const double th2 = th * th;
  return ((6 * th2 - 6 * th) / len) * xa + (3 * th2 - 4 * th + 1) * ma +
         ((-6 * th2 + 6 * th) / len) * xb + (3 * th2 - 2 * th) * mb;
}

std::vector<Vec> secants(const std::vector<double>& grid, const std::vector<Vec>& x, bool out) {
  std::vector<Vec> m(x.size(), Vec::Zero(x.front().size()));
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const Vec s = (x[i + 1] - x[i]) / (grid[i + 1] - grid[i]);
    if (out) {
      m[i] = s;
    } else {
      m[i + 1] = s;
    }
  }
  if (x.size() > 1) {
    if (out) m.back() = m[m.size() - 2];
    if (!out) m.front() = m[1];
  }
  return m;
}

bool escaped_state(const Vec& x, double bound) {
  return !x.allFinite() || x.cwiseAbs().maxCoeff() > bound;
}

void check_input(const Signal& u, std::size_t input_dim) {
  if (u.dim() != input_dim) throw Error(ErrorCode::DimensionMismatch, "input dimension mismatch");
}

void check_state(const Vec& x, std::size_t dim) {
  if (static_cast<std::size_t>(x.size()) != dim) {
    throw Error(ErrorCode::DimensionMismatch, "state dimension mismatch");
  }
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "initial state not finite");
}

void check_horizon(double t0, double t_end, double step) {
  if (!(t0 >= 0.0) || !std::isfinite(t0)) {
    throw Error(ErrorCode::InvalidArgument, "initial time must be finite and >= 0");
  }
  if (!(t_end >= t0) || !std::isfinite(t_end)) {
    throw Error(ErrorCode::InvalidInterval, "need t_end >= t0");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(ErrorCode::InvalidArgument, "step must be positive");
  }
}

// Segment boundaries in (t0, t_end]: breakpoints of u, forced nodes and t_end.
std::vector<double> boundaries(const Signal& u, double t0, double t_end,
                               const std::vector<double>& forced) {
  std::vector<double> b;
  for (double x : u.breakpoints()) {
    if (x > t0 && x < t_end) b.push_back(x);
  }
  for (double x : forced) {
    if (x > t0 && x < t_end) b.push_back(x);
  }
  b.push_back(t_end);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

std::size_t substeps(double a, double b, double h) {
  const double n = std::ceil((b - a) / h * (1.0 - 1e-12));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

bool is_breakpoint(const Signal& u, double t) {
  return std::binary_search(u.breakpoints().begin(), u.breakpoints().end(), t);
}

[[noreturn]] void throw_escape(double t) {
  throw Error(ErrorCode::NonFinite, "state left the escape bound " + std::to_string(kEscapeBound) +
                                        " near t = " + std::to_string(t));
}

}  // namespace

void BoundsMeta::validate() const {
  if (!(semigroup_M >= 1.0)) throw Error(ErrorCode::InvalidArgument, "semigroup M must be >= 1");
  if (!(bilinear_K >= 0.0) || !(bilinear_d >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "bilinear constants must be >= 0");
  }
  if (!std::isfinite(semigroup_rate)) {
    throw Error(ErrorCode::InvalidArgument, "semigroup rate must be finite");
  }
}

HistorySegment HistorySegment::uniform(double span, std::size_t n,
                                       const std::function<Vec(double)>& fn) {
  if (span == 0.0) return HistorySegment(0.0, {0.0}, {fn(0.0)});
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "history needs at least two samples");
  std::vector<double> grid(n);
  std::vector<Vec> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = i + 1 == n ? 0.0 : -span + span * static_cast<double>(i) / static_cast<double>(n - 1);
    samples[i] = fn(grid[i]);
  }
  return HistorySegment(span, std::move(grid), std::move(samples));
}

HistorySegment HistorySegment::constant(double span, const Vec& value, std::size_t n) {
  return uniform(span, n, [&](double) { return value; });
}

HistorySegment::HistorySegment(double span, std::vector<double> grid, std::vector<Vec> samples)
    : span_(span), grid_(std::move(grid)), samples_(std::move(samples)) {
  if (samples_.empty()) throw Error(ErrorCode::InvalidArgument, "history has no samples");
  slope_out_ = secants(grid_, samples_, true);
  slope_in_ = secants(grid_, samples_, false);
  validate();
}

HistorySegment::HistorySegment(double span, std::vector<double> grid, std::vector<Vec> samples,
                               std::vector<Vec> slope_out, std::vector<Vec> slope_in)
    : span_(span), grid_(std::move(grid)), samples_(std::move(samples)),
      slope_out_(std::move(slope_out)), slope_in_(std::move(slope_in)) {
  validate();
}

void HistorySegment::validate() const {
  if (!(span_ >= 0.0) || !std::isfinite(span_)) {
    throw Error(ErrorCode::InvalidArgument, "history span must be finite and >= 0");
  }
  const std::size_t n = grid_.size();
  if (n == 0 || samples_.size() != n || slope_out_.size() != n || slope_in_.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "history grid, samples and slopes differ in length");
  }
  if (grid_.back() != 0.0 || grid_.front() != -span_) {
    throw Error(ErrorCode::InvalidArgument, "history grid must cover exactly [-span, 0]");
  }
  if (span_ > 0.0 && n < 2) throw Error(ErrorCode::InvalidArgument, "history needs two nodes");
  const auto dim = samples_.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && !(grid_[i] > grid_[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "history grid must be strictly increasing");
    }
    if (samples_[i].size() != dim || slope_out_[i].size() != dim || slope_in_[i].size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "history sample dimension mismatch");
    }
    if (!samples_[i].allFinite()) throw Error(ErrorCode::NonFinite, "history sample not finite");
  }
}

Vec HistorySegment::operator()(double s) const {
  if (s > 0.0 || s < -span_ * (1.0 + 1e-12) - 1e-15) {
    throw Error(ErrorCode::InvalidArgument, "history evaluated outside [-span, 0]");
  }
  if (grid_.size() == 1 || s <= grid_.front()) return samples_.front();
  const auto j = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), s) -
                                          grid_.begin());
  if (j == grid_.size()) return samples_.back();
  if (grid_[j - 1] == s) return samples_[j - 1];
  return hermite(grid_[j - 1], grid_[j], samples_[j - 1], samples_[j], slope_out_[j - 1],
                 slope_in_[j], s);
}

double HistorySegment::sup_norm() const {
  double m = 0.0;
  for (const auto& x : samples_) m = std::max(m, x.norm());
  return m;
}

namespace detail {

void DenseStore::push(double t, Vec x, Vec in, Vec out) {
  times.push_back(t);
  states.push_back(std::move(x));
  slope_in.push_back(std::move(in));
  slope_out.push_back(std::move(out));
}

Vec DenseStore::at(double t) const {
  const double lo = times.front();
  const double hi = times.back();
  const double slack = 1e-9 * std::max(1.0, std::abs(t));
  if (t < lo - slack || t > hi + slack) {
    throw Error(ErrorCode::InvalidArgument,
                "dense output requested at t = " + std::to_string(t) + " outside the trajectory");
  }
  if (t <= lo) return states.front();
  if (t >= hi) return states.back();
  const auto j = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) -
                                          times.begin());
  if (times[j - 1] == t) return states[j - 1];
  return hermite(times[j - 1], times[j], states[j - 1], states[j], slope_out[j - 1], slope_in[j],
                 t);
}

Vec DenseStore::derivative_at(double t, bool from_left) const {
  const auto lb = std::lower_bound(times.begin(), times.end(), t);
  if (lb != times.end() && *lb == t) {
    const auto i = static_cast<std::size_t>(lb - times.begin());
    return from_left ? slope_in[i] : slope_out[i];
  }
  if (lb == times.begin() || lb == times.end()) {
    throw Error(ErrorCode::InvalidArgument, "derivative requested outside the trajectory");
  }
  const auto j = static_cast<std::size_t>(lb - times.begin());
  return hermite_derivative(times[j - 1], times[j], states[j - 1], states[j], slope_out[j - 1],
                            slope_in[j], t);
}

}  // namespace detail

HistoryView::HistoryView(const detail::DenseStore& store, double t, double span,
                         const Vec& current)
    : store_(store), t_(t), span_(span), current_(current) {}

Vec HistoryView::operator()(double s) const {
  if (s == 0.0) return current_;
  if (s > 0.0 || s < -span_ * (1.0 + 1e-12) - 1e-15) {
    throw Error(ErrorCode::InvalidArgument, "history view evaluated outside [-span, 0]");
  }
  const double t = t_ + s;
  const double last = store_.times.back();
  if (t <= last) return store_.at(t);
  // Inside the step being taken: bridge the last node and the stage value.
  const double w = (t - last) / (t_ - last);
  return (1.0 - w) * store_.states.back() + w * current_;
}

// Assembles trajectories for the integrators below.
class TrajectoryBuilder {
public:
  TrajectoryBuilder(double t0, std::size_t dim, double span, double step) {
    traj_.t0_ = t0;
    traj_.dim_ = dim;
    traj_.span_ = span;
    traj_.stats_.step = step;
  }

  detail::DenseStore& store() { return traj_.store_; }
  void mark_start() { traj_.first_ = traj_.store_.times.size() - 1; }
  void count_step() { ++traj_.stats_.steps_taken; }
  void escape(double t) {
    traj_.escaped_ = true;
    traj_.escape_time_ = t;
  }
  Trajectory finish() { return std::move(traj_); }

private:
  Trajectory traj_;
};

std::span<const double> Trajectory::grid() const noexcept {
  return std::span<const double>(store_.times).subspan(first_);
}

std::span<const Vec> Trajectory::states() const noexcept {
  return std::span<const Vec>(store_.states).subspan(first_);
}

Vec Trajectory::state_at(double t) const { return store_.at(t); }

HistorySegment Trajectory::history_at(double t) const {
  const double a = t - span_;
  if (t < t0_ - 1e-12 * std::max(1.0, t0_) || t > t_end()) {
    throw Error(ErrorCode::InvalidArgument, "history requested outside [t0, t_end]");
  }
  if (span_ == 0.0) {
    return HistorySegment(0.0, {0.0}, {store_.at(t)}, {store_.derivative_at(t, true)},
                          {store_.derivative_at(t, true)});
  }
  std::vector<double> grid{-span_};
  std::vector<Vec> x{store_.at(a)};
  std::vector<Vec> out{store_.derivative_at(a, false)};
  std::vector<Vec> in{out.back()};
  const auto& ts = store_.times;
  for (auto it = std::upper_bound(ts.begin(), ts.end(), a); it != ts.end() && *it < t; ++it) {
    const auto i = static_cast<std::size_t>(it - ts.begin());
    grid.push_back(ts[i] - t);
    x.push_back(store_.states[i]);
    out.push_back(store_.slope_out[i]);
    in.push_back(store_.slope_in[i]);
  }
  // Nodes within rounding of the endpoints would produce degenerate intervals.
  while (grid.size() > 1 && grid.back() > -1e-12 * span_) {
    grid.pop_back();
    x.pop_back();
    out.pop_back();
    in.pop_back();
  }
  if (grid.size() > 1 && grid[1] - grid[0] < 1e-12 * span_) {
    grid.erase(grid.begin() + 1);
    x.erase(x.begin() + 1);
    out.erase(out.begin() + 1);
    in.erase(in.begin() + 1);
  }
  grid.push_back(0.0);
  x.push_back(store_.at(t));
  in.push_back(store_.derivative_at(t, true));
  out.push_back(in.back());
  return HistorySegment(span_, std::move(grid), std::move(x), std::move(out), std::move(in));
}

double Trajectory::history_norm(double t) const {
  const double a = std::max(t - span_, store_.times.front());
  double m = std::max(store_.at(a).norm(), store_.at(t).norm());
  const auto& ts = store_.times;
  for (auto it = std::lower_bound(ts.begin(), ts.end(), a); it != ts.end() && *it <= t; ++it) {
    m = std::max(m, store_.states[static_cast<std::size_t>(it - ts.begin())].norm());
  }
  return m;
}

double Trajectory::sup_norm() const {
  double m = 0.0;
  for (const auto& x : states()) m = std::max(m, x.norm());
  return m;
}

const Trajectory& Trajectory::require_finite() const {
  if (escaped_) throw_escape(escape_time_);
  return *this;
}

Trajectory integrate_ode(const OdeSystem& sys, double t0, const Vec& x0, const Signal& u,
                         double t_end, double step, const IntegrateOptions& opts) {
  check_horizon(t0, t_end, step);
  check_state(x0, sys.dim);
  check_input(u, sys.input_dim);
  if (!sys.rhs) throw Error(ErrorCode::InvalidArgument, "ODE system has no right-hand side");

  TrajectoryBuilder tb(t0, sys.dim, 0.0, step);
  auto& st = tb.store();
  Vec k1 = sys.rhs(t0, x0, u.right_limit(t0));
  st.push(t0, x0, k1, k1);
  tb.mark_start();
  Vec x = x0;
  double a = t0;
  for (double b : boundaries(u, t0, t_end, opts.forced_nodes)) {
    if (b <= a) continue;
    const std::size_t n = substeps(a, b, step);
    const double h = (b - a) / static_cast<double>(n);
    const Vec uv = u.right_limit(a);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = a + h * static_cast<double>(k);
      const double tn = k + 1 == n ? b : a + h * static_cast<double>(k + 1);
      const double hk = tn - t;
      const Vec k2 = sys.rhs(t + 0.5 * hk, x + (0.5 * hk) * k1, uv);
      const Vec k3 = sys.rhs(t + 0.5 * hk, x + (0.5 * hk) * k2, uv);
      const Vec k4 = sys.rhs(tn, x + hk * k3, uv);
      Vec xn = x + (hk / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      tb.count_step();
      if (escaped_state(xn, opts.escape_bound)) {
        if (opts.throw_on_escape) throw_escape(tn);
        tb.escape(tn);
        return tb.finish();
      }
      const bool last = tn >= t_end;
      Vec next = sys.rhs(tn, xn, last ? u(tn) : u.right_limit(tn));
      Vec in = (last || !is_breakpoint(u, tn)) ? next : sys.rhs(tn, xn, u(tn));
      st.push(tn, xn, std::move(in), next);
      x = std::move(xn);
      k1 = std::move(next);
    }
    a = b;
  }
  return tb.finish();
}

Trajectory integrate_delay(const DelaySystem& sys, double t0, const HistorySegment& psi,
                           const Signal& u, double t_end, double step,
                           const IntegrateOptions& opts) {
  check_horizon(t0, t_end, step);
  check_input(u, sys.input_dim);
  if (!sys.rhs) throw Error(ErrorCode::InvalidArgument, "delay system has no right-hand side");
  if (!(sys.tau >= 0.0) || !std::isfinite(sys.tau)) {
    throw Error(ErrorCode::InvalidArgument, "delay must be finite and >= 0");
  }
  if (psi.span() != sys.tau) {
    throw Error(ErrorCode::InvalidArgument, "history span differs from the system delay");
  }
  if (psi.dim() != sys.dim) throw Error(ErrorCode::DimensionMismatch, "history dimension mismatch");
  if (sys.tau > 0.0 && step > sys.tau / 4.0) {
    throw Error(ErrorCode::StepTooLarge, "step must not exceed tau / 4");
  }

  TrajectoryBuilder tb(t0, sys.dim, sys.tau, step);
  auto& st = tb.store();
  const auto& g = psi.grid();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    st.push(t0 + g[i], psi.samples()[i], psi.slope_in()[i], psi.slope_out()[i]);
  }
  const Vec x0 = psi.samples().back();
  auto eval = [&](double t, const Vec& x, const Vec& uv) {
    return sys.rhs(t, HistoryView(st, t, sys.tau, x), uv);
  };
  // The node at t0 must be in the store before the view can reach it.
  st.push(t0, x0, psi.slope_in().back(), psi.slope_in().back());
  Vec k1 = eval(t0, x0, u.right_limit(t0));
  st.slope_out.back() = k1;
  tb.mark_start();

  Vec x = x0;
  double a = t0;
  for (double b : boundaries(u, t0, t_end, opts.forced_nodes)) {
    if (b <= a) continue;
    const std::size_t n = substeps(a, b, step);
    const double h = (b - a) / static_cast<double>(n);
    const Vec uv = u.right_limit(a);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = a + h * static_cast<double>(k);
      const double tn = k + 1 == n ? b : a + h * static_cast<double>(k + 1);
      const double hk = tn - t;
      const Vec k2 = eval(t + 0.5 * hk, x + (0.5 * hk) * k1, uv);
      const Vec k3 = eval(t + 0.5 * hk, x + (0.5 * hk) * k2, uv);
      const Vec k4 = eval(tn, x + hk * k3, uv);
      Vec xn = x + (hk / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      tb.count_step();
      if (escaped_state(xn, opts.escape_bound)) {
        if (opts.throw_on_escape) throw_escape(tn);
        tb.escape(tn);
        return tb.finish();
      }
      // Provisional slopes let the view interpolate up to tn.
      st.push(tn, xn, k4, k4);
      const bool last = tn >= t_end;
      Vec next = eval(tn, xn, last ? u(tn) : u.right_limit(tn));
      st.slope_in.back() = next;
      st.slope_out.back() = next;
      if (!last && is_breakpoint(u, tn)) st.slope_in.back() = eval(tn, xn, u(tn));
      x = std::move(xn);
      k1 = std::move(next);
    }
    a = b;
  }
  return tb.finish();
}

Trajectory integrate_semilinear(const SemilinearSystem& sys, double t0, const Vec& x0,
                                const Signal& u, double t_end, double step,
                                const IntegrateOptions& opts) {
  check_horizon(t0, t_end, step);
  check_state(x0, sys.dim);
  check_input(u, sys.input_dim);
  if (!sys.nonlinearity) throw Error(ErrorCode::InvalidArgument, "semilinear system has no f");
  const auto n_dim = static_cast<Eigen::Index>(sys.dim);
  if (sys.a_matrix.rows() != n_dim || sys.a_matrix.cols() != n_dim) {
    throw Error(ErrorCode::DimensionMismatch, "A must be dim x dim");
  }
  const Mat& a_mat = sys.a_matrix;
  std::map<double, std::pair<Mat, Mat>> cache;
  auto propagators = [&](double h) -> const std::pair<Mat, Mat>& {
    auto it = cache.find(h);
    if (it == cache.end()) it = cache.emplace(h, exp_and_phi(a_mat, h)).first;
    return it->second;
  };
  auto slope = [&](double t, const Vec& x, const Vec& uv) -> Vec {
    return a_mat * x + sys.nonlinearity(t, x, uv);
  };

  TrajectoryBuilder tb(t0, sys.dim, 0.0, step);
  auto& st = tb.store();
  Vec f = sys.nonlinearity(t0, x0, u.right_limit(t0));
  Vec s0 = a_mat * x0 + f;
  st.push(t0, x0, s0, s0);
  tb.mark_start();
  Vec x = x0;
  double a = t0;
  for (double b : boundaries(u, t0, t_end, opts.forced_nodes)) {
    if (b <= a) continue;
    const std::size_t n = substeps(a, b, step);
    const double h = (b - a) / static_cast<double>(n);
    const auto& [e_mat, phi] = propagators(h);
    for (std::size_t k = 0; k < n; ++k) {
      const double tn = k + 1 == n ? b : a + h * static_cast<double>(k + 1);
      Vec xn = e_mat * x + phi * f;
      tb.count_step();
      if (escaped_state(xn, opts.escape_bound)) {
        if (opts.throw_on_escape) throw_escape(tn);
        tb.escape(tn);
        return tb.finish();
      }
      const bool last = tn >= t_end;
      f = sys.nonlinearity(tn, xn, last ? u(tn) : u.right_limit(tn));
      Vec out = a_mat * xn + f;
      Vec in = (last || !is_breakpoint(u, tn)) ? out : slope(tn, xn, u(tn));
      st.push(tn, xn, std::move(in), std::move(out));
      x = std::move(xn);
    }
    a = b;
  }
  return tb.finish();
}

std::size_t state_dim(const SystemDef& sys) {
  return std::visit([](const auto& s) { return s.dim; }, sys);
}

std::size_t input_dim(const SystemDef& sys) {
  return std::visit([](const auto& s) { return s.input_dim; }, sys);
}

const std::optional<BoundsMeta>& bounds_meta(const SystemDef& sys) {
  return std::visit([](const auto& s) -> const std::optional<BoundsMeta>& { return s.meta; }, sys);
}

double delay_span(const SystemDef& sys) {
  if (auto* d = std::get_if<DelaySystem>(&sys)) return d->tau;
  return 0.0;
}

Trajectory simulate(const SystemDef& sys, double t0, const Vec& x0, const Signal& u,
                    double t_end, double step, const IntegrateOptions& opts) {
  if (auto* s = std::get_if<OdeSystem>(&sys)) return integrate_ode(*s, t0, x0, u, t_end, step, opts);
  if (auto* s = std::get_if<SemilinearSystem>(&sys)) {
    return integrate_semilinear(*s, t0, x0, u, t_end, step, opts);
  }
  const auto& d = std::get<DelaySystem>(sys);
  check_state(x0, d.dim);
  return integrate_delay(d, t0, HistorySegment::constant(d.tau, x0), u, t_end, step, opts);
}

int integrator_order(const SystemDef& sys) {
  return std::holds_alternative<SemilinearSystem>(sys) ? 1 : 4;
}

Trajectory simulate_with_error(const SystemDef& sys, double t0, const Vec& x0, const Signal& u,
                               double t_end, double step, const IntegrateOptions& opts) {
  Trajectory coarse = simulate(sys, t0, x0, u, t_end, step, opts);
  const Trajectory fine = simulate(sys, t0, x0, u, t_end, 0.5 * step, opts);
  const double factor = std::ldexp(1.0, integrator_order(sys));
  double diff = 0.0;
  const auto fg = fine.grid();
  const auto fs = fine.states();
  const auto cg = coarse.grid();
  const auto cs = coarse.states();
  for (std::size_t i = 0; i < cg.size(); ++i) {
    auto it = std::lower_bound(fg.begin(), fg.end(), cg[i]);
    if (it == fg.end() || *it != cg[i]) continue;
    diff = std::max(diff, (cs[i] - fs[static_cast<std::size_t>(it - fg.begin())]).norm());
  }
  coarse.step_stats().error_estimate = diff * factor / (factor - 1.0);
  return coarse;
}

double SemigroupBound::envelope(double t) const {
  return decaying ? M * std::exp(-rate * t) : M * std::exp(rate * t);
}

SemigroupBound semigroup_bound(const Mat& a, double horizon, std::size_t grid_n) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "semigroup_bound: A must be square and nonempty");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon) || grid_n < 2) {
    throw Error(ErrorCode::InvalidArgument, "semigroup_bound: need horizon > 0 and grid_n >= 2");
  }
  SemigroupBound out;
  const double abscissa = spectral_abscissa(a);
  out.decaying = abscissa < 0.0;
  out.rate = out.decaying ? -abscissa : std::max(0.0, abscissa);
  const double sign = out.decaying ? 1.0 : -1.0;
  const bool symmetric = is_symmetric(a);
  auto norm = [&](const Mat& m) {
    if (symmetric) {
      Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
      return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    return spectral_norm(m);
  };
  const double dt = horizon / static_cast<double>(grid_n - 1);
  const Mat step = expm(a * dt);
  Mat e = Mat::Identity(a.rows(), a.cols());
  double m = 1.0;
  // Products drift slowly; re-anchor with a fresh exponential periodically.
  constexpr std::size_t kReanchor = 64;
  for (std::size_t k = 1; k < grid_n; ++k) {
    const double t = dt * static_cast<double>(k);
    e = (k % kReanchor == 0) ? expm(a * t) : Mat(e * step);
    m = std::max(m, norm(e) * std::exp(sign * out.rate * t));
  }
  out.M = m;
  return out;
}

DelaySystem as_delay(const OdeSystem& sys) {
  DelaySystem d;
  d.dim = sys.dim;
  d.input_dim = sys.input_dim;
  d.tau = 0.0;
  d.meta = sys.meta;
  d.rhs = [f = sys.rhs](double t, const HistoryView& h, const Vec& u) {
    return f(t, h.current(), u);
  };
  return d;
}

SemilinearSystem as_semilinear(const OdeSystem& sys) {
  SemilinearSystem s;
  s.dim = sys.dim;
  s.input_dim = sys.input_dim;
  s.a_matrix = Mat::Zero(static_cast<Eigen::Index>(sys.dim), static_cast<Eigen::Index>(sys.dim));
  s.nonlinearity = sys.rhs;
  s.meta = sys.meta;
  return s;
}

OdeSystem as_ode(const SemilinearSystem& sys) {
  OdeSystem o;
  o.dim = sys.dim;
  o.input_dim = sys.input_dim;
  o.meta = sys.meta;
  o.rhs = [a = sys.a_matrix, f = sys.nonlinearity](double t, const Vec& x, const Vec& u) -> Vec {
    return a * x + f(t, x, u);
  };
  return o;
}

}  // namespace iiss
