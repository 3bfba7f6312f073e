#include "iiss/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "iiss/errors.hpp"
#include "iiss/scenarios.hpp"

namespace iiss {
namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

/// Reads keys from the input config and records every value used, defaults
/// included.
class Cfg {
public:
  Cfg(const Json& in, std::string_view command) : in_(in.is_null() ? Json::object() : in), cmd_(command) {
    if (!in_.is_object()) bad("config must be a JSON object");
    resolved = Json::object();
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  double num(const std::string& key, double def) {
    const double v = has(key) ? read_double(key) : def;
    resolved[key] = number(v);
    used_.insert(key);
    return v;
  }

  std::optional<double> opt_num(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    const double v = read_double(key);
    resolved[key] = number(v);
    return v;
  }

  std::uint64_t seed() {
    used_.insert("seed");
    std::uint64_t v = 0;
    if (has("seed")) {
      const Json& j = in_.at("seed");
      if (j.is_number_unsigned()) {
        v = j.get<std::uint64_t>();
      } else if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
        v = static_cast<std::uint64_t>(j.get<std::int64_t>());
      } else {
        bad("'seed' must be a nonnegative integer");
      }
    }
    resolved["seed"] = v;
    return v;
  }

  std::size_t count(const std::string& key, std::size_t def) {
    used_.insert(key);
    std::size_t v = def;
    if (has(key)) {
      const Json& j = in_.at(key);
      if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
        bad("'" + key + "' must be a nonnegative integer");
      }
      v = j.get<std::size_t>();
    }
    resolved[key] = v;
    return v;
  }

  std::string str(const std::string& key, const std::string& def) {
    used_.insert(key);
    std::string v = def;
    if (has(key)) {
      if (!in_.at(key).is_string()) bad("'" + key + "' must be a string");
      v = in_.at(key).get<std::string>();
    }
    resolved[key] = v;
    return v;
  }

  std::string required(const std::string& key) {
    if (!has(key)) bad(std::string(cmd_) + " needs '" + key + "'");
    return str(key, "");
  }

  Json raw(const std::string& key, Json def) {
    used_.insert(key);
    Json v = has(key) ? in_.at(key) : std::move(def);
    resolved[key] = v;
    return v;
  }

  std::vector<double> list(const std::string& key, std::vector<double> def) {
    used_.insert(key);
    if (has(key)) {
      const Json& j = in_.at(key);
      if (!j.is_array()) bad("'" + key + "' must be an array of numbers");
      def.clear();
      for (const auto& x : j) def.push_back(to_double(x));
    }
    Json out = Json::array();
    for (double x : def) out.push_back(number(x));
    resolved[key] = out;
    return def;
  }

  void finish() const {
    for (const auto& [key, _] : in_.items()) {
      if (!used_.contains(key)) bad("unknown config key '" + key + "' for " + std::string(cmd_));
    }
  }

  Json resolved;

private:
  double read_double(const std::string& key) const {
    try {
      return to_double(in_.at(key));
    } catch (const Error&) {
      bad("'" + key + "' must be a number");
    }
  }

  Json in_;
  std::string_view cmd_;
  std::set<std::string> used_;
};

Scenario load_scenario(Cfg& c) {
  const std::string name = c.required("scenario");
  ScenarioParams params;
  const Json p = c.raw("params", Json::object());
  if (!p.is_object()) bad("'params' must be an object of numbers");
  for (const auto& [k, v] : p.items()) params[k] = to_double(v);
  Scenario sc = make_scenario(name, params);
  Json resolved = Json::object();
  for (const auto& [k, v] : sc.params) resolved[k] = number(v);
  c.resolved["params"] = resolved;
  return sc;
}

Signal load_signal(Cfg& c, const std::string& key, const std::string& def) {
  const Json j = c.raw(key, def);
  if (j.is_string()) return parse_signal(j.get<std::string>());
  return signal_from_json(j);
}

ComparisonFunction load_function(Cfg& c, const std::string& key, const std::string& def) {
  return function_from_json(c.raw(key, def));
}

Vec load_x0(Cfg& c, std::size_t dim) {
  const Json j = c.raw("x0", 0.0);
  Vec x;
  if (j.is_number() || j.is_string()) {
    x = Vec::Constant(static_cast<Eigen::Index>(dim), to_double(j));
  } else if (j.is_array()) {
    x.resize(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) x(static_cast<Eigen::Index>(i)) = to_double(j[i]);
  } else {
    bad("'x0' must be a number or an array");
  }
  if (static_cast<std::size_t>(x.size()) != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "'x0' has " + std::to_string(x.size()) + " entries, the state has " + std::to_string(dim));
  }
  return x;
}

StepRule step_rule(const Scenario& sc, std::optional<double> fixed) {
  if (fixed) return [s = *fixed](const Signal&) { return s; };
  return [sc](const Signal& u) { return recommended_step(sc, u); };
}

Json escape_record(const Trajectory& tr, double bound) {
  return Json{{"time", number(tr.escape_time())}, {"bound", bound}};
}

PipelineResult simulate_cmd(Cfg& c) {
  const Scenario sc = load_scenario(c);
  const std::string integ = c.str("integrator", "native");
  SystemDef sys = sc.system;
  bool rk_of_semilinear = false;
  if (integ == "ode") {
    if (auto* s = std::get_if<SemilinearSystem>(&sc.system)) {
      sys = as_ode(*s);
      rk_of_semilinear = true;
    } else if (std::holds_alternative<DelaySystem>(sc.system)) {
      bad("integrator 'ode' cannot run a delay scenario");
    }
  } else if (integ == "delay") {
    if (auto* o = std::get_if<OdeSystem>(&sc.system)) sys = as_delay(*o);
    else if (!std::holds_alternative<DelaySystem>(sc.system)) bad("integrator 'delay' needs an ODE scenario");
  } else if (integ == "semilinear") {
    if (auto* o = std::get_if<OdeSystem>(&sc.system)) sys = as_semilinear(*o);
    else if (!std::holds_alternative<SemilinearSystem>(sc.system)) bad("integrator 'semilinear' needs an ODE scenario");
  } else if (integ != "native") {
    bad("'integrator' must be native, ode, delay or semilinear");
  }
  const Vec x0 = load_x0(c, state_dim(sys));
  const Signal u = load_signal(c, "u", "zero");
  const double t0 = c.num("t0", 0.0);
  const double t_end = c.num("t_end", 1.0);
  const double default_step = rk_of_semilinear ? sc.rk_step : recommended_step(sc, u);
  const double step = c.num("step", default_step);
  const bool with_error = c.str("error_estimate", "off") == "on";
  c.finish();

  IntegrateOptions opts;
  opts.throw_on_escape = false;
  const Trajectory tr = with_error ? simulate_with_error(sys, t0, x0, u, t_end, step, opts)
                                   : simulate(sys, t0, x0, u, t_end, step, opts);
  PipelineResult out;
  Json result{{"points", tr.grid().size()},
              {"max_norm", number(tr.sup_norm())},
              {"final_state", Json::array()},
              {"escaped", tr.escaped()},
              {"step", tr.step_stats().step},
              {"steps_taken", tr.step_stats().steps_taken},
              {"error_estimate", number(tr.step_stats().error_estimate)}};
  for (Eigen::Index i = 0; i < tr.states().back().size(); ++i) {
    result["final_state"].push_back(number(tr.states().back()(i)));
  }
  if (tr.escaped()) {
    result["escape"] = escape_record(tr, opts.escape_bound);
    out.exit_code = 3;
  }
  out.report["result"] = result;
  out.csv = trajectory_csv(tr);
  return out;
}

PipelineResult measure_cmd(Cfg& c) {
  Signal u = load_signal(c, "signal", "zero");
  const MeasureSpec spec = spec_from_json(c.raw("spec", "integral:identity"));
  const auto s = c.opt_num("from");
  const auto t = c.opt_num("to");
  const auto sample_dt = c.opt_num("sample_dt");
  const auto sample_to = c.opt_num("sample_to");
  c.finish();
  if (s || t) u = truncate(u, s.value_or(0.0), t.value_or(kInfinity));
  PipelineResult out;
  if (sample_dt) {
    out.csv = signal_csv(u, sample_to.value_or(std::max(1.0, u.last_breakpoint())), *sample_dt);
  }
  out.report["result"] = Json{{"value", number(input_measure(u, spec))},
                              {"measure", spec.name()},
                              {"satisfies_condition_e", spec.satisfies_condition_e()}};
  return out;
}

SampleGrid load_grid(Cfg& c, const Scenario& sc, const MeasureSpec& spec, std::uint64_t seed,
                     std::size_t threads) {
  GridConfig g;
  g.n_t0 = c.count("n_t0", g.n_t0);
  g.n_x0 = c.count("n_x0", g.n_x0);
  g.n_u = c.count("n_u", g.n_u);
  g.horizon = c.num("horizon", g.horizon);
  g.radius = c.num("radius", g.radius);
  g.input_level = c.num("input_level", g.input_level);
  g.state_dim = state_dim(sc.system);
  g.input_dim = input_dim(sc.system);
  g.history_span = delay_span(sc.system);
  const auto fixed = c.opt_num("step");
  g.step = fixed.value_or(sc.default_step);
  g.seed = seed;
  const bool delay = std::holds_alternative<DelaySystem>(sc.system);
  const std::string norm = c.str("norm", delay ? "history" : "pointwise");
  if (norm != "history" && norm != "pointwise") bad("'norm' must be history or pointwise");
  SampleGrid grid = make_grid(g, spec);
  grid.step_for = step_rule(sc, fixed);
  grid.norm_mode = norm == "history" ? NormMode::History : NormMode::Pointwise;
  grid.threads = threads;
  return grid;
}

int verdict(bool pass) { return pass ? 0 : 1; }

/// Case rows of several reports with a leading report column.
std::string labeled_csv(std::initializer_list<const StabilityReport*> reports) {
  std::string out = "report,t0,x0_id,u_id,t,lhs,rhs,margin,escaped\n";
  for (const auto* r : reports) {
    const std::string body = r->csv();
    std::size_t pos = body.find('\n') + 1;
    while (pos < body.size()) {
      const std::size_t end = body.find('\n', pos);
      out += r->label + "," + body.substr(pos, end - pos + 1);
      pos = end + 1;
    }
  }
  return out;
}

PipelineResult estimate_cmd(Cfg& c, std::uint64_t seed, std::size_t threads) {
  const Scenario sc = load_scenario(c);
  const std::string property = c.str("property", "iss");
  const MeasureSpec spec = spec_from_json(c.raw("spec", "integral:identity"));
  const SampleGrid grid = load_grid(c, sc, spec, seed, threads);
  PipelineResult out;
  if (property == "0guas" || property == "iss" || property == "meta") {
    const KLFunction beta = kl_from_json(c.raw("beta", "exp:1:1"));
    const ComparisonFunction rho = load_function(c, "rho", "identity");
    c.finish();
    if (property == "0guas") {
      const auto r = check_0guas(sc.system, beta, grid);
      out.report["result"] = to_json(r);
      out.csv = labeled_csv({&r});
      out.exit_code = verdict(r.pass);
    } else if (property == "iss") {
      const auto r = check_iss(sc.system, beta, rho, spec, grid);
      out.report["result"] = to_json(r);
      out.csv = labeled_csv({&r});
      out.exit_code = verdict(r.pass);
    } else {
      const auto m = check_iiss_meta(sc.system, beta, rho, spec, grid);
      out.report["result"] = Json{{"iss", to_json(m.iss)},
                                  {"guas", to_json(m.guas)},
                                  {"ugb", to_json(m.ugb)},
                                  {"holds", m.holds}};
      out.csv = labeled_csv({&m.iss, &m.guas, &m.ugb});
      out.exit_code = verdict(m.holds);
    }
  } else if (property == "ugb") {
    const ComparisonFunction alpha = load_function(c, "alpha", "identity");
    const ComparisonFunction rho = load_function(c, "rho", "identity");
    const double cc = c.num("c", 0.0);
    c.finish();
    const auto r = check_ugb(sc.system, alpha, rho, cc, spec, grid);
    out.report["result"] = to_json(r);
    out.csv = labeled_csv({&r});
    out.exit_code = verdict(r.pass);
  } else if (property == "c123") {
    C123Params p;
    p.ubrs_T = c.num("ubrs_T", p.ubrs_T);
    p.ubrs_r = c.num("ubrs_r", p.ubrs_r);
    p.ubrs_s = c.num("ubrs_s", p.ubrs_s);
    p.ubrs_C = c.num("ubrs_C", p.ubrs_C);
    p.ucep_h = c.num("ucep_h", p.ucep_h);
    p.ucep_eps = c.num("ucep_eps", p.ucep_eps);
    p.ucep_delta = c.num("ucep_delta", p.ucep_delta);
    p.uuag_nu = load_function(c, "uuag_nu", "identity");
    p.uuag_r = c.num("uuag_r", p.uuag_r);
    p.uuag_eps = c.num("uuag_eps", p.uuag_eps);
    p.uuag_T = c.num("uuag_T", p.uuag_T);
    p.uuag_window = c.num("uuag_window", p.uuag_window);
    c.finish();
    const auto reps = check_characterization_c123(sc.system, spec, grid, p);
    out.report["result"] =
        Json{{"ubrs", to_json(reps[0])}, {"ucep", to_json(reps[1])}, {"uuag", to_json(reps[2])}};
    out.csv = labeled_csv({&reps[0], &reps[1], &reps[2]});
    out.exit_code = verdict(reps[0].pass && reps[1].pass && reps[2].pass);
  } else {
    bad("'property' must be 0guas, iss, ugb, c123 or meta");
  }
  return out;
}

PipelineResult bound_check_cmd(Cfg& c, std::uint64_t seed, std::size_t threads) {
  const Scenario sc = load_scenario(c);
  const auto& meta = bounds_meta(sc.system);
  PipelineResult out;
  if (meta && meta->bilinear_form) {
    BilinearParams p;
    p.M = meta->semigroup_M;
    p.lambda = meta->semigroup_rate;
    p.K = meta->bilinear_K;
    p.d = meta->bilinear_d;
    p.gamma = meta->gain_gamma.value_or(ComparisonFunction::identity());
    BilinearSweepConfig cfg;
    cfg.cases = c.count("cases", cfg.cases);
    cfg.x0_max = c.num("x0_max", cfg.x0_max);
    cfg.energy_max = c.num("energy_max", cfg.energy_max);
    cfg.horizon = c.num("horizon", cfg.horizon);
    cfg.step = c.num("step", sc.default_step);
    cfg.seed = seed;
    cfg.threads = threads;
    c.finish();
    const auto consts = bilinear_constants(p);
    const auto rep = bilinear_domination_sweep(sc.system, p, cfg, sc.name);
    Json result = to_json(rep);
    result["bound"] = "bilinear";
    result["constants"] = Json{{"alpha", to_json(consts.alpha)},
                               {"rho", to_json(consts.rho)},
                               {"c", number(consts.c)}};
    out.report["result"] = result;
    out.exit_code = verdict(rep.pass());
    return out;
  }
  if (!meta || !meta->lipschitz_L) {
    bad("scenario " + sc.name + " declares no Lipschitz modulus; no Gronwall bound applies");
  }
  GronwallSweepConfig cfg;
  cfg.cases = c.count("cases", cfg.cases);
  cfg.horizon = c.num("horizon", cfg.horizon);
  cfg.energy_max = c.num("energy_max", cfg.energy_max);
  cfg.radius = c.num("radius", cfg.radius);
  cfg.eta = c.num("eta", 0.0);
  cfg.k = c.num("k", 1.0);
  cfg.L = c.num("L", (*meta->lipschitz_L)(cfg.radius));
  cfg.gamma = meta->gain_gamma.value_or(ComparisonFunction::identity());
  cfg.step = c.num("step", sc.default_step);
  cfg.seed = seed;
  cfg.threads = threads;
  c.finish();
  const auto rep = gronwall_domination_sweep(sc.system, cfg, sc.name);
  Json result = to_json(rep);
  result["bound"] = std::holds_alternative<SemilinearSystem>(sc.system) ? "gronwall_semilinear"
                                                                         : "gronwall_delay";
  out.report["result"] = result;
  out.exit_code = verdict(rep.pass());
  return out;
}

PipelineResult modulus_cmd(Cfg& c, std::uint64_t seed, std::size_t threads) {
  const Scenario sc = load_scenario(c);
  const MeasureSpec spec = spec_from_json(c.raw("spec", "integral:identity"));
  ModulusGrid grid;
  grid.ells = c.list("ells", {0.5, 1.0});
  grid.radii = c.list("radii", {0.0, 1.0});
  grid.levels = c.list("levels", {0.0, 0.01, 0.1});
  ModulusConfig cfg;
  cfg.samples_per_cell = c.count("samples_per_cell", cfg.samples_per_cell);
  cfg.refine_rounds = c.count("refine_rounds", cfg.refine_rounds);
  cfg.segments = c.count("segments", cfg.segments);
  cfg.t0_max = c.num("t0_max", cfg.t0_max);
  const auto fixed = c.opt_num("step");
  cfg.step = fixed.value_or(sc.default_step);
  cfg.step_for = step_rule(sc, fixed);
  cfg.seed = seed;
  cfg.threads = threads;
  c.finish();
  PipelineResult out;
  out.report["result"] = to_json(estimate_continuity_modulus(sc.system, spec, grid, cfg));
  return out;
}

PipelineResult falsify_cmd(Cfg& c) {
  const Scenario sc = load_scenario(c);
  const MeasureSpec spec = spec_from_json(c.raw("spec", "integral:identity"));
  const ComparisonFunction rho = load_function(c, "rho", "identity");
  const std::vector<double> deltas = c.list("deltas", {0.1, 0.01, 0.001});
  FalsifyConfig cfg;
  cfg.horizon = c.num("horizon", cfg.horizon);
  cfg.fractions = c.list("fractions", cfg.fractions);
  const auto fixed = c.opt_num("step");
  cfg.step = fixed.value_or(sc.default_step);
  cfg.step_for = step_rule(sc, fixed);
  c.finish();
  const FalsifyResult res = falsify_iiss(sc.system, spec, rho, deltas, cfg);
  PipelineResult out;
  out.report["result"] = to_json(res);
  out.exit_code = res.exhausted() ? 0 : 1;
  return out;
}

PipelineResult horizon_cmd(Cfg& c) {
  const ComparisonFunction alpha = load_function(c, "alpha", "identity");
  const ComparisonFunction rho = load_function(c, "rho", "identity");
  const KLFunction beta = kl_from_json(c.raw("beta", "exp:1:1"));
  const double r = c.num("r", 1.0);
  const double eps = c.num("eps", 0.5);
  const double tol = c.num("tol", 1e-6);
  const double t_max = c.num("t_max", 1e6);
  const Json gamma = c.raw("gamma", "eta");
  c.finish();
  GammaOf gamma_of;
  if (gamma.is_string() && gamma.get<std::string>() == "eta") {
    gamma_of = [](double, double eta, double) { return eta; };
  } else {
    const double g = to_double(gamma);
    if (!(g > 0.0)) bad("'gamma' must be \"eta\" or a positive number");
    gamma_of = [g](double, double, double) { return g; };
  }
  PipelineResult out;
  out.report["result"] = to_json(uuag_horizon(alpha, rho, beta, gamma_of, r, eps, tol, t_max));
  return out;
}

}  // namespace

std::string version_string() { return IISS_VERSION_STRING; }

std::vector<std::string> pipeline_commands() {
  return {"simulate", "measure", "estimate", "bound-check", "modulus", "falsify", "horizon"};
}

PipelineResult run_pipeline(std::string_view command, const Json& config) {
  Cfg c(config, command);
  const std::uint64_t seed = c.seed();
  const std::size_t threads = c.count("threads", 0);
  PipelineResult out;
  if (command == "simulate") out = simulate_cmd(c);
  else if (command == "measure") out = measure_cmd(c);
  else if (command == "estimate") out = estimate_cmd(c, seed, threads);
  else if (command == "bound-check") out = bound_check_cmd(c, seed, threads);
  else if (command == "modulus") out = modulus_cmd(c, seed, threads);
  else if (command == "falsify") out = falsify_cmd(c);
  else if (command == "horizon") out = horizon_cmd(c);
  else bad("unknown command '" + std::string(command) + "'");

  Json report{{"tool", "iiss-lab"},
              {"version", version_string()},
              {"command", std::string(command)},
              {"seed", seed},
              {"config", c.resolved},
              {"exit_code", out.exit_code}};
  report["result"] = std::move(out.report["result"]);
  out.report = std::move(report);
  return out;
}

}  // namespace iiss
