#include "iiss/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
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

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    out.emplace_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

double parse_double(std::string_view s) {
  const std::string str(s);
  if (str == "inf") return kInfinity;
  try {
    std::size_t used = 0;
    const double v = std::stod(str, &used);
    if (used != str.size()) bad("not a number: '" + str + "'");
    return v;
  } catch (const std::logic_error&) {
    bad("not a number: '" + str + "'");
  }
}

std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(part));
  return out;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Vec vec_from_json(const Json& j) {
  if (j.is_number() || j.is_string()) return Vec::Constant(1, to_double(j));
  if (!j.is_array() || j.empty()) bad("expected a nonempty numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(j[i]);
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double to_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return parse_double(s);
  }
  bad("expected a number, got " + j.dump());
}

ComparisonFunction parse_function(std::string_view text) {
  if (!text.empty() && text.front() == '{') {
    const Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) bad("function '" + std::string(text) + "' is not valid JSON");
    return function_from_json(j);
  }
  const auto parts = split(text, ':');
  const std::string& kind = parts[0];
  auto need = [&](std::size_t n) {
    if (parts.size() != n + 1) {
      bad("function '" + std::string(text) + "' expects " + std::to_string(n) + " parameters");
    }
  };
  if (kind == "identity") {
    need(0);
    return ComparisonFunction::identity();
  }
  if (kind == "power") {
    need(2);
    return ComparisonFunction::power(parse_double(parts[1]), parse_double(parts[2]));
  }
  if (kind == "affine_exp") {
    need(2);
    return ComparisonFunction::affine_exp(parse_double(parts[1]), parse_double(parts[2]));
  }
  if (kind == "linear_exp") {
    need(2);
    return ComparisonFunction::linear_exp(parse_double(parts[1]), parse_double(parts[2]));
  }
  if (kind == "pwl") {
    need(1);
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : split(parts[1], ';')) {
      const auto xy = parse_list(k);
      if (xy.size() != 2) bad("pwl knots are r,y pairs separated by ';'");
      knots.emplace_back(xy[0], xy[1]);
    }
    return ComparisonFunction::piecewise_linear(std::move(knots));
  }
  bad("unknown function '" + std::string(text) +
      "' (identity, power:a:p, affine_exp:a:b, linear_exp:a:b, pwl:...)");
}

Json to_json(const ComparisonFunction& f) {
  Json j = std::visit(
      Overloaded{
          [](const detail::IdentityForm&) { return Json{{"kind", "identity"}}; },
          [](const detail::PowerForm& p) { return Json{{"kind", "power"}, {"a", p.a}, {"p", p.p}}; },
          [](const detail::AffineExpForm& p) {
            return Json{{"kind", "affine_exp"}, {"a", p.a}, {"b", p.b}};
          },
          [](const detail::LinearExpForm& p) {
            return Json{{"kind", "linear_exp"}, {"a", p.a}, {"b", p.b}};
          },
          [](const detail::PiecewiseLinearForm& p) {
            Json k = Json::array();
            for (const auto& [r, y] : p.knots) k.push_back({r, y});
            return Json{{"kind", "pwl"}, {"knots", k}};
          },
          [](const detail::ComposeForm& p) {
            return Json{{"kind", "compose"}, {"outer", to_json(p.outer)}, {"inner", to_json(p.inner)}};
          },
          [](const detail::SumForm& p) {
            Json t = Json::array();
            for (const auto& f : p.terms) t.push_back(to_json(f));
            return Json{{"kind", "sum"}, {"terms", t}};
          },
          [](const detail::InverseForm& p) { return Json{{"kind", "inverse"}, {"of", to_json(p.f)}}; },
      },
      f.node().form);
  if (f.domain_cap()) j["cap"] = number(*f.domain_cap());
  return j;
}

ComparisonFunction function_from_json(const Json& j) {
  if (j.is_string()) return parse_function(j.get<std::string>());
  if (!j.is_object() || !j.contains("kind")) bad("function must be a string or an object with 'kind'");
  const auto form = j.at("kind").get<std::string>();
  ComparisonFunction f = [&] {
    if (form == "identity") return ComparisonFunction::identity();
    if (form == "power") return ComparisonFunction::power(to_double(j.at("a")), to_double(j.at("p")));
    if (form == "affine_exp") {
      return ComparisonFunction::affine_exp(to_double(j.at("a")), to_double(j.at("b")));
    }
    if (form == "linear_exp") {
      return ComparisonFunction::linear_exp(to_double(j.at("a")), to_double(j.at("b")));
    }
    if (form == "pwl") {
      std::vector<std::pair<double, double>> knots;
      for (const auto& k : j.at("knots")) knots.emplace_back(to_double(k.at(0)), to_double(k.at(1)));
      return ComparisonFunction::piecewise_linear(std::move(knots));
    }
    if (form == "compose") {
      return ComparisonFunction::compose(function_from_json(j.at("outer")),
                                         function_from_json(j.at("inner")));
    }
    if (form == "sum") {
      std::vector<ComparisonFunction> terms;
      for (const auto& t : j.at("terms")) terms.push_back(function_from_json(t));
      return ComparisonFunction::sum(std::move(terms));
    }
    if (form == "inverse") return ComparisonFunction::inverse(function_from_json(j.at("of")));
    bad("unknown function kind '" + form + "'");
  }();
  if (j.contains("cap")) f = f.with_cap(to_double(j.at("cap")));
  return f;
}

KLFunction parse_kl(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts[0] == "exp" && parts.size() == 3) {
    const double c = parse_double(parts[1]);
    const double k = parse_double(parts[2]);
    if (!(c > 0.0) || !(k > 0.0)) bad("exp:c:k needs c > 0 and k > 0");
    return KLFunction(ComparisonFunction::power(1.0, 1.0 / k), ComparisonFunction::power(c, k));
  }
  if (parts[0] == "power" && parts.size() == 4) {
    const double c = parse_double(parts[1]);
    const double q = parse_double(parts[2]);
    const double k = parse_double(parts[3]);
    if (!(c > 0.0) || !(q > 0.0) || !(k > 0.0)) bad("power:c:q:k needs positive parameters");
    return KLFunction(ComparisonFunction::power(1.0, q / k), ComparisonFunction::power(c, k));
  }
  bad("unknown KL function '" + std::string(text) + "' (exp:c:k or power:c:q:k)");
}

Json to_json(const KLFunction& beta) {
  return Json{{"alpha1", to_json(beta.alpha1())},
              {"alpha2", to_json(beta.alpha2())},
              {"scale", number(beta.scale())}};
}

KLFunction kl_from_json(const Json& j) {
  if (j.is_string()) return parse_kl(j.get<std::string>());
  return KLFunction(function_from_json(j.at("alpha1")), function_from_json(j.at("alpha2")),
                    j.contains("scale") ? to_double(j.at("scale")) : 1.0);
}

MeasureSpec parse_spec(std::string_view text) {
  if (text == "sup") return MeasureSpec::sup();
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) bad("unknown measure '" + std::string(text) + "'");
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = text.substr(colon + 1);
  if (kind == "sup_seq") return MeasureSpec::sup_seq(parse_list(rest));
  if (kind == "integral") return MeasureSpec::integral(parse_function(rest));
  const std::size_t at = rest.rfind('@');
  if (at == std::string_view::npos) bad("measure '" + std::string(text) + "' needs '@'");
  const ComparisonFunction kappa = parse_function(rest.substr(0, at));
  if (kind == "integral_seq") return MeasureSpec::integral_seq(kappa, parse_list(rest.substr(at + 1)));
  if (kind == "windowed") return MeasureSpec::windowed_integral(kappa, parse_double(rest.substr(at + 1)));
  bad("unknown measure '" + std::string(text) +
      "' (sup, sup_seq:..., integral:<fn>, integral_seq:<fn>@..., windowed:<fn>@T)");
}

std::string spec_to_string(const MeasureSpec& spec) {
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
  };
  auto fn = [](const ComparisonFunction& f) { return to_json(f).dump(); };
  return std::visit(Overloaded{
                        [](const SupMeasure&) -> std::string { return "sup"; },
                        [&](const SupSeqMeasure& m) { return "sup_seq:" + list(m.seq); },
                        [&](const IntegralMeasure& m) { return "integral:" + fn(m.kappa); },
                        [&](const IntegralSeqMeasure& m) {
                          return "integral_seq:" + fn(m.kappa) + "@" + list(m.seq);
                        },
                        [&](const WindowedIntegralMeasure& m) {
                          return "windowed:" + fn(m.kappa) + "@" + fmt(m.window);
                        },
                    },
                    spec.variant());
}

Json to_json(const MeasureSpec& spec) {
  auto seq = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
  };
  return std::visit(
      Overloaded{
          [](const SupMeasure&) { return Json{{"variant", "sup"}}; },
          [&](const SupSeqMeasure& m) { return Json{{"variant", "sup_seq"}, {"seq", seq(m.seq)}}; },
          [](const IntegralMeasure& m) { return Json{{"variant", "integral"}, {"kappa", to_json(m.kappa)}}; },
          [&](const IntegralSeqMeasure& m) {
            return Json{{"variant", "integral_seq"}, {"kappa", to_json(m.kappa)}, {"seq", seq(m.seq)}};
          },
          [](const WindowedIntegralMeasure& m) {
            return Json{{"variant", "windowed"}, {"kappa", to_json(m.kappa)}, {"window", number(m.window)}};
          },
      },
      spec.variant());
}

MeasureSpec spec_from_json(const Json& j) {
  if (j.is_string()) return parse_spec(j.get<std::string>());
  if (!j.is_object() || !j.contains("variant")) bad("measure must be a string or an object with 'variant'");
  const auto v = j.at("variant").get<std::string>();
  auto seq = [&] {
    std::vector<double> out;
    for (const auto& x : j.at("seq")) out.push_back(to_double(x));
    return out;
  };
  if (v == "sup") return MeasureSpec::sup();
  if (v == "sup_seq") return MeasureSpec::sup_seq(seq());
  if (v == "integral") return MeasureSpec::integral(function_from_json(j.at("kappa")));
  if (v == "integral_seq") return MeasureSpec::integral_seq(function_from_json(j.at("kappa")), seq());
  if (v == "windowed") {
    return MeasureSpec::windowed_integral(function_from_json(j.at("kappa")), to_double(j.at("window")));
  }
  bad("unknown measure variant '" + v + "'");
}

Json to_json(const Signal& u) {
  Json values = Json::array();
  for (const auto& v : u.values()) values.push_back(vec_json(v));
  Json bps = Json::array();
  for (double b : u.breakpoints()) bps.push_back(number(b));
  return Json{{"dim", u.dim()}, {"breakpoints", bps}, {"values", values}, {"tail", vec_json(u.tail())}};
}

Signal signal_from_json(const Json& j) {
  if (!j.is_object()) bad("signal JSON must be an object");
  const std::size_t dim = j.value("dim", std::size_t{1});
  std::vector<double> bps;
  std::vector<Vec> values;
  if (j.contains("breakpoints")) {
    for (const auto& b : j.at("breakpoints")) bps.push_back(to_double(b));
  }
  if (j.contains("values")) {
    for (const auto& v : j.at("values")) values.push_back(vec_from_json(v));
  }
  const Vec tail = j.contains("tail") ? vec_from_json(j.at("tail"))
                                      : Vec::Zero(static_cast<Eigen::Index>(dim));
  return Signal(dim, std::move(bps), std::move(values), tail);
}

Signal parse_signal(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts[0] == "zero") {
    if (parts.size() > 2) bad("zero[:dim]");
    const double d = parts.size() == 2 ? parse_double(parts[1]) : 1.0;
    if (!(d >= 1.0) || d != std::floor(d)) bad("signal dimension must be a positive integer");
    return Signal::zero(static_cast<std::size_t>(d));
  }
  if (parts[0] == "const") {
    if (parts.size() < 2 || parts.size() > 3) bad("const:v[:t_end]");
    const auto vals = parse_list(parts[1]);
    if (vals.empty()) bad("const needs a value");
    Vec v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
    const double t_end = parts.size() == 3 ? parse_double(parts[2]) : kInfinity;
    if (std::isinf(t_end)) return Signal::constant(v);
    if (!(t_end > 0.0)) bad("const t_end must be positive");
    return Signal::pulse(v, t_end);
  }
  if (parts[0] == "steps") {
    const std::size_t colon = text.find(':');
    return signal_from_json(Json::parse(read_file(std::string(text.substr(colon + 1)))));
  }
  bad("unknown signal '" + std::string(text) + "' (zero, const:v:t_end, steps:file.json)");
}

std::string signal_csv(const Signal& u, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0) || t_end / dt > 1e7) bad("sampling needs dt > 0, t_end >= 0 and at most 1e7 rows");
  std::string out = "t";
  for (std::size_t i = 0; i < u.dim(); ++i) out += ",u_" + std::to_string(i);
  out += '\n';
  const auto n = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Vec v = u(t);
    out += fmt(t);
    for (Eigen::Index i = 0; i < v.size(); ++i) out += "," + fmt(v(i));
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  for (std::size_t i = 0; i < traj.dim(); ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  const auto g = traj.grid();
  const auto xs = traj.states();
  for (std::size_t k = 0; k < g.size(); ++k) {
    out += fmt(g[k]);
    for (Eigen::Index i = 0; i < xs[k].size(); ++i) out += "," + fmt(xs[k](i));
    out += '\n';
  }
  return out;
}

Json to_json(const WorstCase& w) {
  return Json{{"t0", number(w.t0)}, {"x0_id", w.x0_id}, {"u_id", w.u_id},
              {"t", number(w.t)},   {"lhs", number(w.lhs)}, {"rhs", number(w.rhs)}};
}

Json to_json(const StabilityReport& r) {
  Json j{{"property", std::string(to_string(r.property))},
         {"label", r.label},
         {"verdict", r.pass ? "pass" : "fail"},
         {"note", "sampled check: pass means no violation was found on the grid"},
         {"margin", number(r.margin)},
         {"cases", r.cases},
         {"violations", r.violations},
         {"escaped", r.escaped},
         {"tol", r.tol},
         {"seed", r.seed}};
  j["worst_case"] = r.worst_case ? to_json(*r.worst_case) : Json(nullptr);
  return j;
}

Json to_json(const BoundCheckReport& r) {
  Json j{{"scenario", r.scenario},      {"cases", r.cases},
         {"violations", r.violations},  {"max_ratio", number(r.max_ratio)},
         {"min_margin", number(r.min_margin)}, {"verdict", r.pass() ? "pass" : "fail"},
         {"seed", r.seed}};
  j["worst_case"] = r.worst_case ? to_json(*r.worst_case) : Json(nullptr);
  return j;
}

Json to_json(const ContinuityModulus& m) {
  Json cells = Json::array();
  for (std::size_t i = 0; i < m.grid.ells.size(); ++i) {
    for (std::size_t j = 0; j < m.grid.radii.size(); ++j) {
      for (std::size_t k = 0; k < m.grid.levels.size(); ++k) {
        cells.push_back({{"ell", m.grid.ells[i]},
                         {"r", m.grid.radii[j]},
                         {"s", m.grid.levels[k]},
                         {"gamma_hat", number(m.at(i, j, k))},
                         {"raw", number(m.raw_at(i, j, k))}});
      }
    }
  }
  return Json{{"ells", m.grid.ells},
              {"radii", m.grid.radii},
              {"levels", m.grid.levels},
              {"noise_floor", number(m.noise_floor)},
              {"cells", cells}};
}

Json to_json(const FalsifyResult& r) {
  Json attempts = Json::array();
  for (const auto& a : r.attempts) {
    Json j{{"delta", number(a.delta)},   {"found", a.found},   {"threshold", number(a.threshold)},
           {"candidates", a.candidates}};
    if (a.found) {
      j["measure"] = number(a.measure);
      j["t"] = number(a.t);
      j["norm"] = number(a.norm);
      j["input"] = to_json(*a.input);
    }
    attempts.push_back(std::move(j));
  }
  const auto* w = r.first_witness();
  return Json{{"attempts", attempts},
              {"exhausted", r.exhausted()},
              {"first_witness_delta", w ? number(w->delta) : Json(nullptr)}};
}

Json to_json(const HorizonTrace& h) {
  return Json{{"psi_r", number(h.psi_r)}, {"r_tilde", number(h.r_tilde)},
              {"eps_tilde", number(h.eps_tilde)}, {"T_tilde", number(h.T_tilde)},
              {"eta", number(h.eta)},     {"gamma", number(h.gamma)},
              {"N", h.N},                 {"T", number(h.T)}};
}

Json to_json(const UcepDelta& d) {
  Json j{{"delta", number(d.delta)}, {"eta", number(d.eta)}, {"route", d.route},
         {"verified", d.verified()}};
  if (d.verification) j["verification"] = to_json(*d.verification);
  return j;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot rename onto '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace iiss
