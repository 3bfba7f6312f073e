#include "iiss/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

ScenarioParams resolve(std::string_view scenario, const ScenarioParams& defaults,
                       const ScenarioParams& given) {
  ScenarioParams out = defaults;
  for (const auto& [key, value] : given) {
    if (!defaults.contains(key)) {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown parameter '" + key + "' for scenario " + std::string(scenario));
    }
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::InvalidArgument, "parameter '" + key + "' must be finite");
    }
    out[key] = value;
  }
  return out;
}

Vec scalar(double v) { return Vec::Constant(1, v); }

std::vector<Signal> scalar_inputs(double level) {
  return {
      Signal::zero(1),
      Signal::pulse(scalar(level), 1.0),
      Signal::pulse(scalar(-level), 1.0),
      Signal(1, {0.5, 1.0, 1.5, 2.0}, {scalar(level), scalar(-level), scalar(level), scalar(-level)},
             Vec::Zero(1)),
      Signal(1, {0.1}, {scalar(10.0 * level)}, Vec::Zero(1)),
  };
}

Scenario counterexample26(const ScenarioParams& given) {
  Scenario sc;
  sc.name = "counterexample26";
  sc.params = resolve(sc.name, {{"step", 1e-3}}, given);
  OdeSystem sys;
  sys.dim = 1;
  sys.input_dim = 1;
  sys.rhs = [](double, const Vec& x, const Vec& u) -> Vec {
    const double v = u(0) == 0.0 ? 0.0 : 1.0 / u(0);
    return scalar(-x(0) + smooth_cutoff(std::abs(x(0))) * v);
  };
  sc.system = std::move(sys);
  sc.default_inputs = {Signal::zero(1), Signal::pulse(scalar(0.1), 1.0),
                       Signal::pulse(scalar(-0.01), 1.0), Signal::pulse(scalar(0.001), 1.0)};
  sc.default_step = sc.params.at("step");
  sc.rk_step = sc.default_step;
  return sc;
}

Scenario linear_tv(const ScenarioParams& given) {
  Scenario sc;
  sc.name = "linear_tv";
  sc.params = resolve(sc.name, {{"a0", 1.0}, {"a1", 0.0}, {"omega", 1.0}, {"step", 1e-3}}, given);
  const double a0 = sc.params.at("a0");
  const double a1 = sc.params.at("a1");
  const double w = sc.params.at("omega");
  if (!(a0 > std::abs(a1))) {
    throw Error(ErrorCode::InvalidArgument, "linear_tv needs a0 > |a1| for uniform decay");
  }
  OdeSystem sys;
  sys.dim = 1;
  sys.input_dim = 1;
  sys.rhs = [a0, a1, w](double t, const Vec& x, const Vec& u) -> Vec {
    return scalar(-(a0 + a1 * std::sin(w * t)) * x(0) + u(0));
  };
  BoundsMeta meta;
  meta.envelope_N = NondecreasingEnvelope::affine(1.0, a0 + std::abs(a1));
  meta.gain_gamma = ComparisonFunction::identity();
  meta.lipschitz_L = NondecreasingEnvelope::constant(a0 + std::abs(a1));
  sys.meta = meta;
  sc.system = std::move(sys);
  sc.default_inputs = scalar_inputs(0.5);
  sc.default_step = sc.params.at("step");
  sc.rk_step = sc.default_step;
  return sc;
}

Scenario delay_linear(const ScenarioParams& given) {
  Scenario sc;
  sc.name = "delay_linear";
  sc.params =
      resolve(sc.name, {{"a", 1.0}, {"b", 0.25}, {"tau", 1.0}, {"step", 1e-2}}, given);
  const double a = sc.params.at("a");
  const double b = sc.params.at("b");
  const double tau = sc.params.at("tau");
  if (!(tau >= 0.0)) throw Error(ErrorCode::InvalidArgument, "delay_linear needs tau >= 0");
  DelaySystem sys;
  sys.dim = 1;
  sys.input_dim = 1;
  sys.tau = tau;
  sys.rhs = [a, b, tau](double, const HistoryView& h, const Vec& u) -> Vec {
    return -a * h.current() + b * h(-tau) + u;
  };
  BoundsMeta meta;
  meta.envelope_N = NondecreasingEnvelope::affine(1.0, std::abs(a) + std::abs(b));
  meta.gain_gamma = ComparisonFunction::identity();
  meta.lipschitz_L = NondecreasingEnvelope::constant(std::abs(a) + std::abs(b));
  sys.meta = meta;
  sc.system = std::move(sys);
  sc.default_inputs = scalar_inputs(0.5);
  sc.default_step = sc.params.at("step");
  if (tau > 0.0) sc.default_step = std::min(sc.default_step, tau / 4.0);
  sc.rk_step = sc.default_step;
  return sc;
}

Scenario bilinear_scalar(const ScenarioParams& given) {
  Scenario sc;
  sc.name = "bilinear_scalar";
  sc.params = resolve(sc.name, {{"step", 1e-3}}, given);
  SemilinearSystem sys;
  sys.dim = 1;
  sys.input_dim = 1;
  sys.a_matrix = Mat::Constant(1, 1, -1.0);
  sys.nonlinearity = [](double, const Vec& x, const Vec& u) -> Vec {
    return scalar(x(0) * u(0) + u(0));
  };
  BoundsMeta meta;
  meta.envelope_N = NondecreasingEnvelope::affine(1.0, 1.0);
  meta.gain_gamma = ComparisonFunction::identity();
  meta.bilinear_form = true;
  meta.bilinear_K = 1.0;
  meta.bilinear_d = 1.0;
  meta.semigroup_M = 1.0;
  meta.semigroup_rate = 1.0;
  sys.meta = meta;
  sc.system = std::move(sys);
  sc.default_inputs = scalar_inputs(0.5);
  sc.default_step = sc.params.at("step");
  sc.rk_step = sc.default_step;
  return sc;
}

Scenario heat1d(const ScenarioParams& given) {
  Scenario sc;
  sc.name = "heat1d";
  sc.params = resolve(sc.name, {{"n", 32.0}, {"sigma", 1.0}, {"b", 1.0}, {"step", 1e-3}}, given);
  const double nd = sc.params.at("n");
  if (!(nd >= 1.0) || nd != std::floor(nd) || nd > 4096.0) {
    throw Error(ErrorCode::InvalidArgument, "heat1d needs an integer n in [1, 4096]");
  }
  const auto n = static_cast<Eigen::Index>(nd);
  const double sigma = sc.params.at("sigma");
  const double gain = sc.params.at("b");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "heat1d needs sigma >= 0");
  const double h = 1.0 / (nd + 1.0);
  Mat a = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = -2.0 / (h * h);
    if (i > 0) a(i, i - 1) = 1.0 / (h * h);
    if (i + 1 < n) a(i, i + 1) = 1.0 / (h * h);
  }
  SemilinearSystem sys;
  sys.dim = static_cast<std::size_t>(n);
  sys.input_dim = 1;
  sys.a_matrix = a;
  sys.nonlinearity = [sigma, gain](double, const Vec& x, const Vec& u) -> Vec {
    return -sigma * x.array().tanh().matrix() + Vec::Constant(x.size(), gain * u(0));
  };
  const double rate = (2.0 / (h * h)) * (1.0 - std::cos(std::numbers::pi * h));
  const double c = std::max(std::abs(gain) * std::sqrt(nd), 1e-12);
  BoundsMeta meta;
  meta.envelope_N = NondecreasingEnvelope::affine(c, sigma);
  meta.gain_gamma = ComparisonFunction::identity();
  meta.lipschitz_L = NondecreasingEnvelope::constant(std::max(sigma, 1e-12));
  meta.semigroup_M = 1.0;
  meta.semigroup_rate = rate;
  sys.meta = meta;
  sc.system = std::move(sys);
  sc.default_inputs = scalar_inputs(0.5);
  sc.default_step = sc.params.at("step");
  // Explicit RK4 is stable for h |lambda| below about 2.78; |lambda_max| < 4/h^2.
  sc.rk_step = std::min(sc.default_step, 0.5 * h * h);
  return sc;
}

}  // namespace

double smooth_cutoff(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double s = r - 1.0;
  return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

std::vector<std::string> scenario_names() {
  return {"counterexample26", "linear_tv", "delay_linear", "bilinear_scalar", "heat1d"};
}

Scenario make_scenario(std::string_view name, const ScenarioParams& params) {
  if (name == "counterexample26") return counterexample26(params);
  if (name == "linear_tv") return linear_tv(params);
  if (name == "delay_linear") return delay_linear(params);
  if (name == "bilinear_scalar") return bilinear_scalar(params);
  if (name == "heat1d") return heat1d(params);
  throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + std::string(name) + "'");
}

double recommended_step(const Scenario& sc, const Signal& u) {
  if (sc.name != "counterexample26") return sc.default_step;
  // v = 1/u drives |x'| up to 1/|u|; resolve it with ten steps per unit of |u|.
  double smallest = kInfinity;
  for (const auto& v : u.values()) {
    if (v(0) != 0.0) smallest = std::min(smallest, std::abs(v(0)));
  }
  if (u.tail()(0) != 0.0) smallest = std::min(smallest, std::abs(u.tail()(0)));
  return std::min(sc.default_step, 0.1 * smallest);
}

}  // namespace iiss
