#include "iiss/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

struct CaseOutcome {
  std::size_t violations = 0;
  double max_ratio = 0.0;
  double min_margin = kInfinity;
  WorstCase worst;
};

BoundCheckReport reduce(std::vector<CaseOutcome> outcomes, std::string name, std::uint64_t seed) {
  BoundCheckReport rep;
  rep.scenario = std::move(name);
  rep.cases = outcomes.size();
  rep.seed = seed;
  for (const auto& o : outcomes) {
    rep.violations += o.violations;
    rep.max_ratio = std::max(rep.max_ratio, o.max_ratio);
    if (o.min_margin < rep.min_margin) {
      rep.min_margin = o.min_margin;
      rep.worst_case = o.worst;
    }
  }
  return rep;
}

void record(CaseOutcome& o, const WorstCase& at) {
  if (!within_tolerance(at.lhs, at.rhs)) ++o.violations;
  if (at.lhs > 0.0) o.max_ratio = std::max(o.max_ratio, at.rhs / at.lhs);
  if (at.rhs - at.lhs < o.min_margin) {
    o.min_margin = at.rhs - at.lhs;
    o.worst = at;
  }
}

IntegrateOptions sweep_options(std::vector<double> forced = {}) {
  IntegrateOptions opts;
  opts.throw_on_escape = false;
  opts.forced_nodes = std::move(forced);
  return opts;
}

Trajectory run(const SystemDef& sys, double t0, const HistorySegment& psi, const Signal& u,
               double t_end, double step, const IntegrateOptions& opts) {
  if (const auto* d = std::get_if<DelaySystem>(&sys)) {
    return integrate_delay(*d, t0, psi, u, t_end, step, opts);
  }
  return simulate(sys, t0, psi.samples().back(), u, t_end, step, opts);
}

}  // namespace

Signal random_step_input(std::uint64_t seed, std::size_t input_dim, double horizon) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, horizon);
  std::normal_distribution<double> nd;
  const std::size_t k = 1 + static_cast<std::size_t>(rng() % 8);
  std::vector<double> b;
  for (std::size_t i = 0; i + 1 < k; ++i) b.push_back(unif(rng));
  b.push_back(horizon);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  b.erase(std::remove_if(b.begin(), b.end(), [](double x) { return x <= 0.0; }), b.end());
  std::vector<Vec> v;
  for (std::size_t i = 0; i < b.size(); ++i) {
    Vec x(static_cast<Eigen::Index>(input_dim));
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = nd(rng);
    v.push_back(std::move(x));
  }
  return Signal(input_dim, std::move(b), std::move(v), Vec::Zero(static_cast<Eigen::Index>(input_dim)));
}

BoundCheckReport gronwall_domination_sweep(const SystemDef& sys, const GronwallSweepConfig& cfg,
                                           std::string name) {
  if (cfg.cases == 0) throw Error(ErrorCode::InvalidArgument, "cases must be >= 1");
  if (!(cfg.horizon > 0.0) || !(cfg.energy_max > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon and energy_max must be positive");
  }
  GronwallParams base{cfg.eta, cfg.k, cfg.L, 0.0, 0.0, 1.0, 0.0};
  const bool semilinear = std::holds_alternative<SemilinearSystem>(sys);
  if (semilinear) {
    const auto& s = std::get<SemilinearSystem>(sys);
    const auto& meta = s.meta;
    SemigroupBound sg;
    if (meta) {
      sg.M = meta->semigroup_M;
      sg.decaying = meta->semigroup_rate >= 0.0;
      sg.rate = std::abs(meta->semigroup_rate);
    } else {
      sg = semigroup_bound(s.a_matrix, cfg.horizon, 512);
    }
    base.M = cfg.M.value_or(sg.M);
    base.w = cfg.w.value_or(sg.decaying ? 0.0 : sg.rate);
  }
  base.validate();

  const std::size_t n = state_dim(sys);
  const std::size_t m = input_dim(sys);
  const double span = delay_span(sys);
  const MeasureSpec energy_spec = MeasureSpec::integral(cfg.gamma);

  std::vector<CaseOutcome> outcomes(cfg.cases);
  parallel_for(cfg.cases, cfg.threads, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, i));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double t0 = i % 4 == 0 ? 0.0 : cfg.t0_max * unif(rng);
    const double level = cfg.energy_max * std::max(unif(rng), 1e-3);
    const Signal shape =
        scale_to_measure(random_step_input(derive_seed(cfg.seed ^ 0x5eedULL, i), m, cfg.horizon),
                         energy_spec, level);
    const Signal u = shape.shifted(t0);
    const std::size_t nodes = span > 0.0 ? 8 : 1;
    std::vector<double> grid;
    std::vector<Vec> samples;
    for (std::size_t j = 0; j < nodes; ++j) {
      grid.push_back(nodes == 1 ? 0.0 : -span + span * static_cast<double>(j) / static_cast<double>(nodes - 1));
      Vec x(static_cast<Eigen::Index>(n));
      for (Eigen::Index p = 0; p < x.size(); ++p) x(p) = cfg.radius * (2.0 * unif(rng) - 1.0);
      samples.push_back(std::move(x));
    }
    const HistorySegment psi(span, std::move(grid), std::move(samples));
    const double step = cfg.step_for ? cfg.step_for(u) : cfg.step;
    const double t_end = t0 + cfg.horizon;
    const Trajectory x = run(sys, t0, psi, u, t_end, step, sweep_options());
    const Trajectory z = run(sys, t0, psi, Signal::zero(m), t_end, step, sweep_options(u.breakpoints()));
    CaseOutcome& out = outcomes[i];
    if (x.escaped() || z.escaped()) {
      record(out, WorstCase{t0, i, i, x.escaped() ? x.escape_time() : z.escape_time(), kInfinity, 0.0});
      return;
    }
    const auto times = x.grid();
    const auto xs = x.states();
    const auto zgrid = z.grid();
    const bool same = zgrid.size() == times.size() && std::equal(times.begin(), times.end(), zgrid.begin());
    std::vector<double> diff(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
      diff[k] = (xs[k] - (same ? z.states()[k] : z.state_at(times[k]))).norm();
    }
    const std::vector<double> energy = truncated_measure_profile(u, energy_spec, t0, times);
    std::size_t lo = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      double actual = diff[k];
      if (span > 0.0) {
        while (times[lo] < times[k] - span) ++lo;
        actual = *std::max_element(diff.begin() + static_cast<std::ptrdiff_t>(lo),
                                   diff.begin() + static_cast<std::ptrdiff_t>(k) + 1);
      }
      GronwallParams p = base;
      p.elapsed = times[k] - t0;
      p.energy = energy[k];
      const double bound = semilinear ? gronwall_semilinear_bound(p) : gronwall_delay_bound(p);
      record(out, WorstCase{t0, i, i, times[k], actual, bound});
    }
  });
  return reduce(std::move(outcomes), std::move(name), cfg.seed);
}

BoundCheckReport bilinear_domination_sweep(const SystemDef& sys, const BilinearParams& p,
                                           const BilinearSweepConfig& cfg, std::string name) {
  p.validate();
  if (cfg.cases == 0) throw Error(ErrorCode::InvalidArgument, "cases must be >= 1");
  if (!(cfg.horizon > 0.0) || !(cfg.energy_max >= 0.0) || !(cfg.x0_max >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid bilinear sweep configuration");
  }
  const std::size_t n = state_dim(sys);
  const std::size_t m = input_dim(sys);
  const MeasureSpec energy_spec = MeasureSpec::integral(p.gamma);

  std::vector<CaseOutcome> outcomes(cfg.cases);
  parallel_for(cfg.cases, cfg.threads, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, i));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // x0 lies on the first axis.
    Vec x0 = Vec::Zero(static_cast<Eigen::Index>(n));
    x0(0) = cfg.x0_max * (2.0 * unif(rng) - 1.0);
    const double level = cfg.energy_max * unif(rng);
    Signal u = random_step_input(derive_seed(cfg.seed ^ 0xb11eULL, i), m, cfg.horizon);
    u = level > 0.0 ? scale_to_measure(u, energy_spec, level) : Signal::zero(m);
    const double energy = input_measure(u, energy_spec);
    const Trajectory tr = simulate(sys, 0.0, x0, u, cfg.horizon, cfg.step, sweep_options());
    CaseOutcome& out = outcomes[i];
    const double bound = bilinear_ubebs_bound(p, x0.norm(), energy);
    if (tr.escaped()) {
      record(out, WorstCase{0.0, i, i, tr.escape_time(), kInfinity, bound});
      return;
    }
    double peak = 0.0;
    double t_peak = 0.0;
    for (std::size_t k = 0; k < tr.states().size(); ++k) {
      const double v = tr.states()[k].norm();
      if (v > peak) {
        peak = v;
        t_peak = tr.grid()[k];
      }
    }
    record(out, WorstCase{0.0, i, i, t_peak, peak, bound});
  });
  return reduce(std::move(outcomes), std::move(name), cfg.seed);
}

}  // namespace iiss
