#include "iiss/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

std::atomic<std::size_t> g_default_threads{0};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

double log_uniform(Rng& rng, double a, double b) {
  return std::exp(uniform(rng, std::log(a), std::log(b)));
}

Vec random_direction(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> nd;
  Vec v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

Vec random_in_ball(Rng& rng, std::size_t dim, double r) {
  const double rad = r * std::pow(uniform(rng, 0.0, 1.0), 1.0 / static_cast<double>(dim));
  return rad * random_direction(rng, dim);
}

HistorySegment scale_history(const HistorySegment& h, double c) {
  auto mul = [c](std::vector<Vec> v) {
    for (auto& x : v) x *= c;
    return v;
  };
  return HistorySegment(h.span(), h.grid(), mul(h.samples()), mul(h.slope_out()),
                        mul(h.slope_in()));
}

HistorySegment random_history(Rng& rng, double span, std::size_t dim, double r,
                              std::size_t nodes) {
  if (span == 0.0) return HistorySegment(0.0, {0.0}, {random_in_ball(rng, dim, r)});
  nodes = std::max<std::size_t>(nodes, 2);
  return HistorySegment::uniform(span, nodes, [&](double) { return random_in_ball(rng, dim, r); });
}

void check_level(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be finite and >= 0");
  }
}

struct SweepSetup {
  Property property = Property::ZeroGUAS;
  std::string label;
  bool zero_input_only = false;
  double x_scale = 1.0;
  std::function<Signal(const Signal&)> prepare_input;
  double horizon = 0.0;
  /// Instants with elapsed time below this are not checked.
  double observe_from = 0.0;
  const MeasureSpec* spec = nullptr;
  /// rhs(elapsed, initial norm, truncated measure).
  std::function<double(double, double, double)> rhs;
};

struct CaseResult {
  CaseRow row;
  double margin = kInfinity;
  std::size_t violations = 0;
  bool any = false;
};

bool worse(const CaseRow& a, double ma, const CaseRow& b, double mb) {
  if (ma != mb) return ma < mb;
  const auto& x = a.at;
  const auto& y = b.at;
  return std::tie(x.t0, x.x0_id, x.u_id, x.t) < std::tie(y.t0, y.x0_id, y.u_id, y.t);
}

StabilityReport sweep(const SystemDef& sys, const SampleGrid& grid, const SweepSetup& setup) {
  grid.validate();
  const bool is_delay = std::holds_alternative<DelaySystem>(sys);
  const std::size_t nx = grid.x0_count();
  const std::size_t nu = setup.zero_input_only ? 1 : grid.inputs.size();
  const std::size_t nt = grid.t0_values.size();
  const std::size_t n_cases = nt * nx * nu;
  const Signal zero = Signal::zero(input_dim(sys));

  std::vector<CaseResult> results(n_cases);
  parallel_for(n_cases, grid.threads, [&](std::size_t idx) {
    const std::size_t it = idx / (nx * nu);
    const std::size_t ix = (idx / nu) % nx;
    const std::size_t iu = idx % nu;
    const double t0 = grid.t0_values[it];
    const Signal& shape = setup.zero_input_only ? zero : grid.inputs[iu];
    Signal u = shape.shifted(t0);
    if (setup.prepare_input) u = setup.prepare_input(u);
    const double step = grid.step_for ? grid.step_for(u) : grid.step;
    IntegrateOptions opts;
    opts.throw_on_escape = false;
    const double t_end = t0 + setup.horizon;

    Trajectory traj = [&] {
      if (is_delay) {
        const auto& d = std::get<DelaySystem>(sys);
        HistorySegment psi = grid.histories.empty()
                                 ? HistorySegment::constant(d.tau, grid.x0_values[ix])
                                 : grid.histories[ix];
        if (setup.x_scale != 1.0) psi = scale_history(psi, setup.x_scale);
        return integrate_delay(d, t0, psi, u, t_end, step, opts);
      }
      return simulate(sys, t0, grid.x0_values[ix] * setup.x_scale, u, t_end, step, opts);
    }();
    const double x0_norm = is_delay ? traj.history_norm(t0) : traj.states().front().norm();

    CaseResult& res = results[idx];
    res.row.at = WorstCase{t0, ix, iu, t0, 0.0, 0.0};
    const auto times = traj.grid();
    std::vector<double> meas(times.size(), 0.0);
    if (setup.spec) meas = truncated_measure_profile(u, *setup.spec, t0, times);
    const bool history = is_delay && grid.norm_mode == NormMode::History;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double el = times[k] - t0;
      if (el < setup.observe_from) continue;
      const double lhs = history ? traj.history_norm(times[k]) : traj.states()[k].norm();
      const double rhs = setup.rhs(el, x0_norm, meas[k]);
      const double m = rhs - lhs;
      if (!within_tolerance(lhs, rhs)) ++res.violations;
      if (!res.any || m < res.margin) {
        res.margin = m;
        res.row.at = WorstCase{t0, ix, iu, times[k], lhs, rhs};
        res.any = true;
      }
    }
    if (traj.escaped()) {
      res.row.escaped = true;
      ++res.violations;
      res.margin = -kInfinity;
      res.row.at = WorstCase{t0, ix, iu, traj.escape_time(), kInfinity, res.row.at.rhs};
      res.any = true;
    }
  });

  StabilityReport rep;
  rep.property = setup.property;
  rep.label = setup.label;
  rep.seed = grid.seed;
  rep.cases = n_cases;
  rep.rows.reserve(n_cases);
  const CaseResult* worst = nullptr;
  for (const auto& r : results) {
    rep.rows.push_back(r.row);
    rep.violations += r.violations;
    rep.escaped = rep.escaped || r.row.escaped;
    if (!r.any) continue;
    if (!worst || worse(r.row, r.margin, worst->row, worst->margin)) worst = &r;
  }
  if (worst) {
    rep.worst_case = worst->row.at;
    rep.margin = worst->margin;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

Signal make_shape(Rng& rng, int kind, double horizon, std::size_t m) {
  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(m));
  const Vec dir = random_direction(rng, m);
  switch (kind) {
    case 0:
      return Signal::zero(m);
    case 1:
      return Signal::pulse(dir, horizon);
    case 2:
      return Signal::pulse(-dir, horizon);
    case 3: {  // short pulse at a random position
      const double w = 0.02 * horizon;
      const double a = uniform(rng, 0.0, horizon - w);
      if (a <= 0.0) return Signal::pulse(dir, w);
      return Signal(m, {a, a + w}, {zero, dir}, zero);
    }
    case 4: {  // alternating sign
      const std::size_t k = 6;
      std::vector<double> b;
      std::vector<Vec> v;
      for (std::size_t i = 0; i < k; ++i) {
        b.push_back(horizon * static_cast<double>(i + 1) / static_cast<double>(k));
        v.push_back(i % 2 == 0 ? dir : Vec(-dir));
      }
      return Signal(m, std::move(b), std::move(v), zero);
    }
    default: {  // random steps
      const std::size_t k = 2 + static_cast<std::size_t>(rng() % 7);
      std::vector<double> b;
      for (std::size_t i = 0; i < k; ++i) b.push_back(uniform(rng, 0.0, horizon));
      std::sort(b.begin(), b.end());
      b.erase(std::unique(b.begin(), b.end()), b.end());
      while (!b.empty() && b.front() <= 0.0) b.erase(b.begin());
      std::vector<Vec> v;
      std::normal_distribution<double> nd;
      for (std::size_t i = 0; i < b.size(); ++i) {
        Vec x(static_cast<Eigen::Index>(m));
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = nd(rng);
        v.push_back(std::move(x));
      }
      if (b.empty()) return Signal::pulse(dir, horizon);
      return Signal(m, std::move(b), std::move(v), zero);
    }
  }
}

double max_difference(const Trajectory& x, const Trajectory& z) {
  double m = 0.0;
  const auto xs = x.states();
  const auto zs = z.states();
  const auto xg = x.grid();
  const auto zg = z.grid();
  const bool same_grid = xg.size() == zg.size() && std::equal(xg.begin(), xg.end(), zg.begin());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Vec zk = same_grid ? zs[k] : z.state_at(xg[k]);
    m = std::max(m, (xs[k] - zk).norm());
  }
  return m;
}

Trajectory run_from(const SystemDef& sys, double t0, const Vec& x0, const Signal& u, double t_end,
                    double step, const std::vector<double>& forced) {
  IntegrateOptions opts;
  opts.throw_on_escape = false;
  opts.forced_nodes = forced;
  return simulate(sys, t0, x0, u, t_end, step, opts);
}

}  // namespace

std::string_view to_string(Property p) noexcept {
  switch (p) {
    case Property::ZeroGUAS: return "0-GUAS";
    case Property::UGB_UBEBS: return "UGB/UBEBS";
    case Property::UGS_UBEBS0: return "UGS/UBEBS0";
    case Property::ISS_iISS: return "ISS/iISS";
    case Property::UBRS: return "UBRS";
    case Property::UCEP: return "UCEP";
    case Property::UUAG: return "UUAG";
    case Property::ConditionE: return "ConditionE";
    case Property::Admissibility: return "Admissibility";
    case Property::Envelope: return "Envelope";
  }
  return "unknown";
}

bool within_tolerance(double lhs, double rhs, double tol) {
  if (std::isnan(lhs) || std::isnan(rhs)) return false;
  if (std::isinf(rhs) && rhs > 0) return !std::isinf(lhs) || lhs < 0;
  return lhs <= rhs + tol * (1.0 + std::abs(rhs));
}

std::string StabilityReport::csv() const {
  std::string out = "t0,x0_id,u_id,t,lhs,rhs,margin,escaped\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%d\n", r.at.t0, r.at.x0_id,
                  r.at.u_id, r.at.t, r.at.lhs, r.at.rhs, r.at.rhs - r.at.lhs, r.escaped ? 1 : 0);
    out += buf;
  }
  return out;
}

void SampleGrid::validate() const {
  if (t0_values.empty() || inputs.empty() || (x0_values.empty() && histories.empty())) {
    throw Error(ErrorCode::InvalidArgument, "sample grid lists must be nonempty");
  }
  for (double t0 : t0_values) check_level(t0, "t0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::InvalidArgument, "grid horizon must be positive");
  }
  check_level(radius, "radius");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid step must be positive");
  if (!histories.empty() && !x0_values.empty() && histories.size() != x0_values.size()) {
    throw Error(ErrorCode::InvalidArgument, "histories and x0 values differ in count");
  }
}

std::size_t SampleGrid::x0_count() const noexcept {
  return histories.empty() ? x0_values.size() : histories.size();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // SplitMix64 finalizer over the pair.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SampleGrid make_grid(const GridConfig& cfg, const MeasureSpec& spec) {
  if (cfg.n_t0 == 0 || cfg.n_x0 == 0 || cfg.n_u == 0) {
    throw Error(ErrorCode::InvalidArgument, "grid sizes must be positive");
  }
  if (cfg.state_dim == 0 || cfg.input_dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "grid dimensions must be positive");
  }
  check_level(cfg.radius, "radius");
  check_level(cfg.input_level, "input level");
  SampleGrid g;
  g.horizon = cfg.horizon;
  g.radius = cfg.radius;
  g.step = cfg.step;
  g.seed = cfg.seed;

  Rng rng(derive_seed(cfg.seed, 1));
  g.t0_values.push_back(0.0);
  std::vector<double> t0s;
  for (std::size_t i = 1; i < cfg.n_t0; ++i) t0s.push_back(log_uniform(rng, 1e-2, 10.0 * cfg.horizon));
  std::sort(t0s.begin(), t0s.end());
  g.t0_values.insert(g.t0_values.end(), t0s.begin(), t0s.end());

  const std::size_t n = cfg.state_dim;
  const double r = cfg.radius;
  std::vector<Vec> xs{Vec::Zero(static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n && xs.size() < cfg.n_x0; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vec e = Vec::Zero(static_cast<Eigen::Index>(n));
      e(static_cast<Eigen::Index>(i)) = sgn * r;
      if (xs.size() < cfg.n_x0) xs.push_back(e);
    }
  }
  if (n > 1 && n <= 4) {
    for (std::size_t mask = 0; mask < (1u << n) && xs.size() < cfg.n_x0; ++mask) {
      Vec c(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) c(static_cast<Eigen::Index>(i)) = (mask >> i) & 1u ? -1.0 : 1.0;
      xs.push_back(c * (r / std::sqrt(static_cast<double>(n))));
    }
  }
  const std::size_t structured = xs.size();
  Rng xrng(derive_seed(cfg.seed, 2));
  while (xs.size() < cfg.n_x0) xs.push_back(random_in_ball(xrng, n, r));
  if (cfg.history_span > 0.0) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i < structured) {
        g.histories.push_back(HistorySegment::constant(cfg.history_span, xs[i]));
      } else {
        g.histories.push_back(random_history(xrng, cfg.history_span, n, r, 8));
        xs[i] = g.histories.back().samples().back();
      }
    }
  }
  g.x0_values = std::move(xs);

  Rng urng(derive_seed(cfg.seed, 3));
  for (std::size_t i = 0; i < cfg.n_u; ++i) {
    const int kind = i < 5 ? static_cast<int>(i) : 3 + static_cast<int>(urng() % 3);
    Signal s = make_shape(urng, kind, cfg.horizon, cfg.input_dim);
    if (!s.is_zero()) s = scale_to_measure(s, spec, cfg.input_level * uniform(urng, 0.05, 1.0));
    g.inputs.push_back(std::move(s));
  }
  return g;
}

void set_default_threads(std::size_t n) { g_default_threads = n; }

std::size_t default_threads() {
  const std::size_t n = g_default_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = default_threads();
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

StabilityReport check_0guas(const SystemDef& sys, const KLFunction& beta,
                            const SampleGrid& grid) {
  SweepSetup s;
  s.property = Property::ZeroGUAS;
  s.label = "0-GUAS";
  s.zero_input_only = true;
  s.horizon = grid.horizon;
  s.rhs = [&](double el, double x0n, double) { return beta(x0n, el); };
  return sweep(sys, grid, s);
}

StabilityReport check_iss(const SystemDef& sys, const KLFunction& beta,
                          const ComparisonFunction& rho, const MeasureSpec& spec,
                          const SampleGrid& grid) {
  SweepSetup s;
  s.property = Property::ISS_iISS;
  s.label = spec.satisfies_condition_e() ? "iISS" : "ISS";
  s.horizon = grid.horizon;
  s.spec = &spec;
  s.rhs = [&](double el, double x0n, double m) { return beta(x0n, el) + eval(rho, m); };
  return sweep(sys, grid, s);
}

StabilityReport check_ugb(const SystemDef& sys, const ComparisonFunction& alpha,
                          const ComparisonFunction& rho, double c, const MeasureSpec& spec,
                          const SampleGrid& grid) {
  check_level(c, "c");
  SweepSetup s;
  const bool energy = spec.satisfies_condition_e();
  if (c == 0.0) {
    s.property = Property::UGS_UBEBS0;
    s.label = energy ? "UBEBS0" : "UGS";
  } else {
    s.property = Property::UGB_UBEBS;
    s.label = energy ? "UBEBS" : "UGB";
  }
  s.horizon = grid.horizon;
  s.spec = &spec;
  s.rhs = [&, c](double, double x0n, double m) { return c + eval(alpha, x0n) + eval(rho, m); };
  return sweep(sys, grid, s);
}

std::array<StabilityReport, 3> check_characterization_c123(const SystemDef& sys,
                                                           const MeasureSpec& spec,
                                                           const SampleGrid& grid,
                                                           const C123Params& p) {
  for (double v : {p.ubrs_T, p.ucep_h, p.ucep_eps, p.ucep_delta, p.uuag_eps}) {
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "C1-C3 parameters must be positive");
  }
  check_level(p.uuag_T, "UUAG T");
  check_level(p.ubrs_r, "UBRS r");
  check_level(p.ubrs_s, "UBRS s");
  check_level(p.uuag_r, "UUAG r");
  const double unit = grid.radius > 0.0 ? 1.0 / grid.radius : 0.0;
  auto scaled_to = [&spec](double level) {
    return [&spec, level](const Signal& u) { return scale_to_measure(u, spec, level); };
  };

  SweepSetup ubrs;
  ubrs.property = Property::UBRS;
  ubrs.label = "UBRS";
  ubrs.x_scale = p.ubrs_r * unit;
  ubrs.prepare_input = scaled_to(p.ubrs_s);
  ubrs.horizon = p.ubrs_T;
  ubrs.rhs = [C = p.ubrs_C](double, double, double) { return C; };

  SweepSetup ucep;
  ucep.property = Property::UCEP;
  ucep.label = "UCEP";
  ucep.x_scale = p.ucep_delta * unit;
  ucep.prepare_input = scaled_to(p.ucep_delta);
  ucep.horizon = p.ucep_h;
  ucep.rhs = [eps = p.ucep_eps](double, double, double) { return eps; };

  SweepSetup uuag;
  uuag.property = Property::UUAG;
  uuag.label = "UUAG";
  uuag.x_scale = p.uuag_r * unit;
  uuag.horizon = p.uuag_T + p.uuag_window;
  uuag.observe_from = p.uuag_T;
  uuag.spec = &spec;
  uuag.rhs = [&p](double, double, double m) { return p.uuag_eps + eval(p.uuag_nu, m); };

  return {sweep(sys, grid, ubrs), sweep(sys, grid, ucep), sweep(sys, grid, uuag)};
}

MetaReport check_iiss_meta(const SystemDef& sys, const KLFunction& beta,
                           const ComparisonFunction& rho, const MeasureSpec& spec,
                           const SampleGrid& grid) {
  MetaReport m{check_iss(sys, beta, rho, spec, grid), check_0guas(sys, beta, grid),
               check_ugb(sys, beta.at_time_zero(), rho, 0.0, spec, grid), false};
  m.holds = !m.iss.pass || (m.guas.pass && m.ugb.pass);
  return m;
}

std::size_t ContinuityModulus::index(std::size_t i, std::size_t j, std::size_t k) const {
  if (i >= grid.ells.size() || j >= grid.radii.size() || k >= grid.levels.size()) {
    throw Error(ErrorCode::InvalidArgument, "modulus index out of range");
  }
  return (i * grid.radii.size() + j) * grid.levels.size() + k;
}

double ContinuityModulus::at(std::size_t i, std::size_t j, std::size_t k) const {
  return table[index(i, j, k)];
}

double ContinuityModulus::raw_at(std::size_t i, std::size_t j, std::size_t k) const {
  return raw[index(i, j, k)];
}

ContinuityModulus estimate_continuity_modulus(const SystemDef& sys, const MeasureSpec& spec,
                                              const ModulusGrid& grid,
                                              const ModulusConfig& cfg) {
  auto sorted_nonneg = [](const std::vector<double>& v, const char* what) {
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " grid is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      check_level(v[i], what);
      if (i > 0 && !(v[i] > v[i - 1])) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " grid must increase");
      }
    }
  };
  sorted_nonneg(grid.ells, "ell");
  sorted_nonneg(grid.radii, "radius");
  sorted_nonneg(grid.levels, "level");
  if (grid.ells.front() <= 0.0) throw Error(ErrorCode::InvalidArgument, "ell must be positive");
  if (cfg.samples_per_cell == 0) {
    throw Error(ErrorCode::InvalidArgument, "samples_per_cell must be >= 1");
  }
  if (cfg.segments == 0) throw Error(ErrorCode::InvalidArgument, "segments must be >= 1");

  const std::size_t n = state_dim(sys);
  const std::size_t m = input_dim(sys);
  const std::size_t ni = grid.ells.size();
  const std::size_t nj = grid.radii.size();
  const std::size_t nk = grid.levels.size();

  struct Candidate {
    double t0 = 0.0;
    Vec x0;
    std::vector<double> rel;  // breakpoints relative to t0, last = ell
    std::vector<Vec> values;
  };

  ContinuityModulus out;
  out.grid = grid;
  out.raw.assign(ni * nj * nk, 0.0);

  parallel_for(ni * nj * nk, cfg.threads, [&](std::size_t cell) {
    const std::size_t i = cell / (nj * nk);
    const std::size_t j = (cell / nk) % nj;
    const std::size_t k = cell % nk;
    const double ell = grid.ells[i];
    const double r = grid.radii[j];
    const double s = grid.levels[k];
    Rng rng(derive_seed(cfg.seed, cell));

    auto score = [&](const Candidate& c) {
      Signal shape(m, c.rel, c.values, Vec::Zero(static_cast<Eigen::Index>(m)));
      Signal u = shape.shifted(c.t0);
      u = s > 0.0 ? scale_to_measure(u, spec, s) : Signal::zero(m);
      const double step = cfg.step_for ? cfg.step_for(u) : cfg.step;
      std::vector<double> forced(u.breakpoints());
      const Trajectory x = run_from(sys, c.t0, c.x0, u, c.t0 + ell, step, {});
      const Trajectory z = run_from(sys, c.t0, c.x0, Signal::zero(m), c.t0 + ell, step, forced);
      if (x.escaped() || z.escaped()) return kInfinity;
      return max_difference(x, z);
    };
    auto equal_segments = [&](std::size_t segs) {
      std::vector<double> rel;
      for (std::size_t q = 0; q < segs; ++q) {
        rel.push_back(q + 1 == segs ? ell : ell * static_cast<double>(q + 1) / static_cast<double>(segs));
      }
      return rel;
    };
    const Vec zero_x = Vec::Zero(static_cast<Eigen::Index>(n));
    const Vec e1 = [&] {
      Vec e = zero_x;
      e(0) = r;
      return e;
    }();
    const Vec dir = Vec::Ones(static_cast<Eigen::Index>(m)) / std::sqrt(static_cast<double>(m));
    const Vec zero_u = Vec::Zero(static_cast<Eigen::Index>(m));

    std::vector<Candidate> starts{
        {0.0, zero_x, {ell}, {dir}},
        {0.0, zero_x, {ell}, {Vec(-dir)}},
        {0.0, zero_x, {ell * 15.0 / 16.0, ell}, {zero_u, dir}},
        {0.0, e1, {ell * 15.0 / 16.0, ell}, {zero_u, dir}},
        {0.0, e1, {ell}, {dir}},
    };
    if (starts.size() > cfg.samples_per_cell) starts.resize(cfg.samples_per_cell);
    std::normal_distribution<double> nd;
    while (starts.size() < cfg.samples_per_cell) {
      Candidate c;
      c.t0 = rng() % 4 == 0 ? 0.0 : log_uniform(rng, 1e-2, std::max(cfg.t0_max, 2e-2));
      c.x0 = random_in_ball(rng, n, r);
      c.rel = equal_segments(cfg.segments);
      for (std::size_t q = 0; q < cfg.segments; ++q) {
        Vec v(static_cast<Eigen::Index>(m));
        for (Eigen::Index p = 0; p < v.size(); ++p) v(p) = nd(rng);
        c.values.push_back(v);
      }
      starts.push_back(std::move(c));
    }

    if (s == 0.0) starts.resize(1);
    Candidate best = starts.front();
    double best_score = -1.0;
    for (const auto& c : starts) {
      const double v = score(c);
      if (v > best_score) {
        best_score = v;
        best = c;
      }
    }
    for (std::size_t round = 0; round < cfg.refine_rounds && s > 0.0; ++round) {
      for (std::size_t q = 0; q < best.values.size(); ++q) {
        for (double f : {1.5, 0.5, -1.0}) {
          Candidate c = best;
          c.values[q] *= f;
          if (c.values[q].norm() == 0.0 && c.values.size() == 1) continue;
          const double v = score(c);
          if (v > best_score) {
            best_score = v;
            best = std::move(c);
          }
        }
      }
      for (std::size_t p = 0; p < n && r > 0.0; ++p) {
        for (double d : {0.25 * r, -0.25 * r}) {
          Candidate c = best;
          c.x0(static_cast<Eigen::Index>(p)) += d;
          if (c.x0.norm() > r) c.x0 *= r / c.x0.norm();
          const double v = score(c);
          if (v > best_score) {
            best_score = v;
            best = std::move(c);
          }
        }
      }
    }
    out.raw[cell] = std::max(best_score, 0.0);
  });

  out.table = out.raw;
  auto& t = out.table;
  auto idx = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * nj + j) * nk + k; };
  for (std::size_t i = 1; i < ni; ++i)
    for (std::size_t j = 0; j < nj; ++j)
      for (std::size_t k = 0; k < nk; ++k) t[idx(i, j, k)] = std::max(t[idx(i, j, k)], t[idx(i - 1, j, k)]);
  for (std::size_t i = 0; i < ni; ++i)
    for (std::size_t j = 1; j < nj; ++j)
      for (std::size_t k = 0; k < nk; ++k) t[idx(i, j, k)] = std::max(t[idx(i, j, k)], t[idx(i, j - 1, k)]);
  for (std::size_t i = 0; i < ni; ++i)
    for (std::size_t j = 0; j < nj; ++j)
      for (std::size_t k = 1; k < nk; ++k) t[idx(i, j, k)] = std::max(t[idx(i, j, k)], t[idx(i, j, k - 1)]);
  if (grid.levels.front() == 0.0) {
    double floor = 0.0;
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t j = 0; j < nj; ++j) floor = std::max(floor, out.raw[idx(i, j, 0)]);
    out.noise_floor = floor;
  }
  return out;
}

const WitnessAttempt* FalsifyResult::first_witness() const {
  for (const auto& a : attempts) {
    if (a.found) return &a;
  }
  return nullptr;
}

FalsifyResult falsify_iiss(const SystemDef& sys, const MeasureSpec& spec,
                           const ComparisonFunction& rho, const std::vector<double>& delta_schedule,
                           const FalsifyConfig& cfg) {
  if (delta_schedule.empty()) throw Error(ErrorCode::InvalidArgument, "delta schedule is empty");
  for (std::size_t i = 0; i < delta_schedule.size(); ++i) {
    if (!(delta_schedule[i] > 0.0) || (i > 0 && !(delta_schedule[i] < delta_schedule[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "delta schedule must be positive and decreasing");
    }
  }
  if (!(cfg.horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  const std::size_t n = state_dim(sys);
  const std::size_t m = input_dim(sys);
  const Vec dir = Vec::Ones(static_cast<Eigen::Index>(m)) / std::sqrt(static_cast<double>(m));
  std::vector<Signal> shapes = cfg.shapes;
  if (shapes.empty()) {
    const Vec zero = Vec::Zero(static_cast<Eigen::Index>(m));
    shapes = {Signal::pulse(dir, 1.0), Signal::pulse(dir, 0.5),
              Signal(m, {0.25, 0.5, 0.75, 1.0}, {dir, Vec(-dir), dir, Vec(-dir)}, zero)};
  }
  const Vec x0 = Vec::Zero(static_cast<Eigen::Index>(n));

  FalsifyResult res;
  for (double delta : delta_schedule) {
    WitnessAttempt att;
    att.delta = delta;
    att.threshold = eval(rho, delta);
    for (const auto& shape : shapes) {
      for (double frac : cfg.fractions) {
        for (double sign : {1.0, -1.0}) {
          if (att.found) break;
          const Signal u = scale_to_measure(shape.scaled(sign), spec, frac * delta);
          const double meas = input_measure(u, spec);
          if (!(meas < delta)) continue;
          ++att.candidates;
          const double step = cfg.step_for ? cfg.step_for(u) : cfg.step;
          const Trajectory tr = run_from(sys, 0.0, x0, u, cfg.horizon, step, {});
          double peak = 0.0;
          double t_peak = 0.0;
          const auto g = tr.grid();
          const auto xs = tr.states();
          for (std::size_t k = 0; k < xs.size(); ++k) {
            const double v = xs[k].norm();
            if (v > peak) {
              peak = v;
              t_peak = g[k];
            }
          }
          if (tr.escaped()) {
            peak = kInfinity;
            t_peak = tr.escape_time();
          }
          if (peak > att.threshold) {
            att.found = true;
            att.input = u;
            att.measure = meas;
            att.t = t_peak;
            att.norm = peak;
          }
        }
      }
    }
    res.attempts.push_back(std::move(att));
    if (cfg.stop_at_first && res.attempts.back().found) break;
  }
  return res;
}

UcepDelta find_ucep_delta(const UcepRoutes& routes, double eps, const UcepVerification* verify) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::InvalidArgument, "eps must be > 0");
  UcepDelta out;
  out.delta = kInfinity;
  if (routes.alpha && routes.rho) {
    const ComparisonFunction sum = ComparisonFunction::sum({*routes.alpha, *routes.rho});
    out.delta = invert(sum, eps);
    out.route = "ugs";
  }
  if (routes.k && routes.L && routes.T) {
    const double k = *routes.k;
    const double L = *routes.L;
    const double T = *routes.T;
    if (!(k > 0.0) || !(L >= 0.0) || !(T > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "Gronwall route needs k > 0, L >= 0, T > 0");
    }
    const double growth = std::exp(L * T);
    const double d = eps / (2.0 * k * growth);
    if (d < out.delta) {
      out.delta = d;
      out.eta = eps / (2.0 * T * growth);
      out.route = "gronwall";
    }
  }
  if (out.route.empty()) {
    throw Error(ErrorCode::NoRoute, "neither UGS constants nor Gronwall constants were given");
  }
  if (verify && verify->sys) {
    if (!verify->spec) throw Error(ErrorCode::InvalidArgument, "verification needs a measure spec");
    C123Params p;
    p.ucep_h = verify->h;
    p.ucep_eps = eps;
    p.ucep_delta = out.delta;
    out.verification = check_characterization_c123(*verify->sys, *verify->spec, verify->grid, p)[1];
  }
  return out;
}

Vec evaluate_rhs(const SystemDef& sys, double t, const HistorySegment& psi, const Vec& mu) {
  if (auto* d = std::get_if<DelaySystem>(&sys)) {
    if (psi.span() != d->tau) throw Error(ErrorCode::InvalidArgument, "history span differs from tau");
    detail::DenseStore store;
    for (std::size_t i = 0; i < psi.grid().size(); ++i) {
      store.push(t + psi.grid()[i], psi.samples()[i], psi.slope_in()[i], psi.slope_out()[i]);
    }
    const Vec cur = psi.samples().back();
    return d->rhs(t, HistoryView(store, t, d->tau, cur), mu);
  }
  const Vec x = psi.samples().back();
  if (auto* o = std::get_if<OdeSystem>(&sys)) return o->rhs(t, x, mu);
  return std::get<SemilinearSystem>(sys).nonlinearity(t, x, mu);
}

namespace {

struct EnvelopeSample {
  double t;
  HistorySegment psi;
  Vec mu;
};

EnvelopeSample draw_sample(Rng& rng, const SystemDef& sys, const EnvelopeConfig& cfg) {
  const std::size_t n = state_dim(sys);
  const std::size_t m = input_dim(sys);
  const double t = uniform(rng, 0.0, cfg.t_max);
  const double r = rng() % 8 == 0 ? 0.0 : cfg.radius * uniform(rng, 0.0, 1.0);
  HistorySegment psi = random_history(rng, delay_span(sys), n, r, cfg.history_nodes);
  const double mag = rng() % 8 == 0 ? 0.0 : cfg.mu_max * uniform(rng, 0.0, 1.0);
  return {t, std::move(psi), mag * random_direction(rng, m)};
}

StabilityReport envelope_sweep(const SystemDef& sys, const EnvelopeConfig& cfg, std::string label,
                               const std::function<std::pair<double, double>(const EnvelopeSample&)>& f) {
  if (cfg.samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  StabilityReport rep;
  rep.property = Property::Envelope;
  rep.label = std::move(label);
  rep.seed = cfg.seed;
  rep.cases = cfg.samples;
  Rng rng(derive_seed(cfg.seed, 17));
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const EnvelopeSample s = draw_sample(rng, sys, cfg);
    const auto [lhs, rhs] = f(s);
    const WorstCase wc{s.t, i, i, s.t, lhs, rhs};
    rep.rows.push_back({wc, false});
    if (!within_tolerance(lhs, rhs)) ++rep.violations;
    if (rhs - lhs < rep.margin) {
      rep.margin = rhs - lhs;
      rep.worst_case = wc;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace

StabilityReport check_growth_envelope(const SystemDef& sys, const NondecreasingEnvelope& nenv,
                                      const ComparisonFunction& gamma, const EnvelopeConfig& cfg) {
  return envelope_sweep(sys, cfg, "growth envelope", [&](const EnvelopeSample& s) {
    const double lhs = evaluate_rhs(sys, s.t, s.psi, s.mu).norm();
    return std::pair{lhs, nenv(s.psi.sup_norm()) * (1.0 + eval(gamma, s.mu.norm()))};
  });
}

StabilityReport check_bilinear_envelope(const SystemDef& sys, double K, double d,
                                        const ComparisonFunction& gamma,
                                        const EnvelopeConfig& cfg) {
  check_level(K, "K");
  check_level(d, "d");
  return envelope_sweep(sys, cfg, "bilinear envelope", [&](const EnvelopeSample& s) {
    const double lhs = evaluate_rhs(sys, s.t, s.psi, s.mu).norm();
    return std::pair{lhs, (K * s.psi.sup_norm() + d) * eval(gamma, s.mu.norm())};
  });
}

StabilityReport check_claim_constant(const SystemDef& sys, double eta, double k,
                                     const ComparisonFunction& gamma,
                                     const EnvelopeConfig& cfg) {
  check_level(eta, "eta");
  check_level(k, "k");
  const Vec zero_u = Vec::Zero(static_cast<Eigen::Index>(input_dim(sys)));
  return envelope_sweep(sys, cfg, "claim constant", [&](const EnvelopeSample& s) {
    const double lhs =
        (evaluate_rhs(sys, s.t, s.psi, s.mu) - evaluate_rhs(sys, s.t, s.psi, zero_u)).norm();
    return std::pair{lhs, eta + k * eval(gamma, s.mu.norm())};
  });
}

double find_r2_delta(const SystemDef& sys, double r, double eps, const R2Config& cfg) {
  if (!(r > 0.0) || !(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "need r > 0, eps > 0");
  if (cfg.samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  EnvelopeConfig ec;
  ec.radius = r;
  ec.mu_max = 1.0;
  ec.t_max = cfg.t_max;
  ec.history_nodes = cfg.history_nodes;
  Rng rng(derive_seed(cfg.seed, 23));
  std::vector<EnvelopeSample> samples;
  samples.reserve(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) samples.push_back(draw_sample(rng, sys, ec));
  const Vec zero_u = Vec::Zero(static_cast<Eigen::Index>(input_dim(sys)));
  std::vector<Vec> base;
  base.reserve(samples.size());
  for (const auto& s : samples) base.push_back(evaluate_rhs(sys, s.t, s.psi, zero_u));
  // Each sample carries a direction and a fraction in [0, 1] of delta; the
  // boundary |mu| = delta is probed along the same direction.
  auto worst = [&](double delta) {
    double w = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      w = std::max(w, (evaluate_rhs(sys, s.t, s.psi, delta * s.mu) - base[i]).norm());
      const double n = s.mu.norm();
      if (n > 0.0) w = std::max(w, (evaluate_rhs(sys, s.t, s.psi, (delta / n) * s.mu) - base[i]).norm());
    }
    return w;
  };
  double lo = 0.0;
  double hi = 1.0 - 1e-9;
  if (worst(hi) < eps) return hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (worst(mid) < eps ? lo : hi) = mid;
  }
  if (!(lo > 0.0)) throw Error(ErrorCode::NotReachable, "no positive delta meets eps on the samples");
  return lo;
}

}  // namespace iiss
