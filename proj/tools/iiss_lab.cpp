// iiss-lab: batch front end over the C interface.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iiss/iiss.h"
#include "json.hpp"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  std::string report;
  std::string format = "json";
  std::vector<std::string> sets;
  std::vector<std::string> params;
};

/// Values given on the command line, keyed by config name.
struct Flags {
  std::map<std::string, std::string> strings;
  std::map<std::string, double> numbers;
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::string> lists;  // comma-separated numbers
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& data) {
  namespace fs = std::filesystem;
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << data;
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void emit(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
  } else {
    write_atomic(path, data);
  }
}

Json scalar_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return text;
  }
}

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw CLI::ValidationError(flag, "expected key=value, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

Json list_value(const std::string& text, const std::string& flag) {
  Json arr = Json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      arr.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--" + flag, "'" + item + "' is not a number");
    }
  }
  return arr;
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (auto& ch : f) {
    if (ch == '_') ch = '-';
  }
  return f;
}

Json build_config(const Common& c, const Flags& f) {
  Json cfg = Json::object();
  if (!c.config_path.empty()) {
    cfg = Json::parse(read_file(c.config_path));
    if (!cfg.is_object()) throw CLI::ValidationError("--config", "file must hold a JSON object");
  }
  for (const auto& [k, v] : f.strings) cfg[k] = scalar_value(v);
  for (const auto& [k, v] : f.numbers) cfg[k] = v;
  for (const auto& [k, v] : f.counts) cfg[k] = v;
  for (const auto& [k, v] : f.lists) cfg[k] = list_value(v, flag_name(k));
  if (!c.params.empty()) {
    Json p = cfg.contains("params") ? cfg["params"] : Json::object();
    for (const auto& s : c.params) {
      const auto [k, v] = split_assignment(s, "--param");
      p[k] = scalar_value(v);
    }
    cfg["params"] = p;
  }
  for (const auto& s : c.sets) {
    const auto [k, v] = split_assignment(s, "--set");
    cfg[k] = scalar_value(v);
  }
  if (c.seed) cfg["seed"] = *c.seed;
  if (c.threads) {
    cfg["threads"] = *c.threads;
  } else if (const char* env = std::getenv("IISS_LAB_THREADS"); env && *env) {
    try {
      cfg["threads"] = std::stoul(env);
    } catch (const std::exception&) {
      throw CLI::ValidationError("IISS_LAB_THREADS", "must be a nonnegative integer");
    }
  }
  return cfg;
}

int exit_for_status(iiss_status s) {
  switch (s) {
    case IISS_ERR_NON_FINITE:
    case IISS_ERR_STEP_TOO_LARGE:
    case IISS_ERR_HORIZON_UNBOUNDED:
    case IISS_ERR_NOT_REACHABLE:
    case IISS_ERR_DOMAIN_EXCEEDED:
    case IISS_ERR_NO_MAJORANT:
    case IISS_ERR_ZERO_GAIN:
    case IISS_ERR_INTERNAL:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

int run(const std::string& command, const Common& c, const Flags& f) {
  const Json cfg = build_config(c, f);
  if (c.format != "json" && c.format != "csv") {
    throw CLI::ValidationError("--format", "must be json or csv");
  }
  if (c.threads) iiss_set_threads(*c.threads);
  char* report = nullptr;
  char* csv = nullptr;
  int verdict = 0;
  const iiss_status s = iiss_run(command.c_str(), cfg.dump().c_str(), &report, &csv, &verdict);
  if (s != IISS_OK) {
    std::cerr << "iiss-lab " << command << ": " << iiss_status_string(s) << ": " << iiss_last_error()
              << "\n";
    return exit_for_status(s);
  }
  const std::string report_text(report);
  const std::string csv_text = csv ? std::string(csv) : std::string();
  iiss_string_free(report);
  iiss_string_free(csv);

  if (command == "simulate" || c.format == "csv") {
    if (csv_text.empty()) throw CLI::ValidationError("--format", "csv output is not available for " + command);
    emit(c.out, csv_text);
  } else {
    emit(c.out, report_text);
  }
  if (!c.report.empty()) emit(c.report, report_text);
  if (verdict == kExitNumeric) {
    const Json r = Json::parse(report_text);
    std::cerr << "iiss-lab " << command << ": numerical failure: "
              << r["result"].value("escape", Json::object()).dump() << "\n";
  }
  return verdict;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config file; flags override its keys")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "64-bit RNG seed (default 0)");
  app->add_option("--threads", c.threads, "sweep workers, 0 = auto (env IISS_LAB_THREADS)");
  app->add_option("--out", c.out, "primary output file (default stdout)");
  app->add_option("--report", c.report, "also write the JSON report here");
  app->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--set", c.sets, "extra config entry key=value (repeatable)");
}

void add_scenario(CLI::App* app, Common& c, Flags& f) {
  app->add_option_function<std::string>(
      "--scenario", [&f](const std::string& v) { f.strings["scenario"] = Json(v).dump(); },
      "counterexample26, linear_tv, delay_linear, bilinear_scalar or heat1d");
  app->add_option("--param", c.params, "scenario parameter key=value (repeatable)");
}

void str_opt(CLI::App* app, Flags& f, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      "--" + flag_name(key), [&f, key](const std::string& v) { f.strings[key] = Json(v).dump(); }, help);
}

void num_opt(CLI::App* app, Flags& f, const std::string& key, const std::string& help) {
  app->add_option_function<double>(
      "--" + flag_name(key), [&f, key](double v) { f.numbers[key] = v; }, help);
}

void count_opt(CLI::App* app, Flags& f, const std::string& key, const std::string& help) {
  app->add_option_function<std::size_t>(
      "--" + flag_name(key), [&f, key](std::size_t v) { f.counts[key] = v; }, help);
}

void list_opt(CLI::App* app, Flags& f, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      "--" + flag_name(key), [&f, key](const std::string& v) { f.lists[key] = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iiss-lab: simulation, measures, sampled stability checks and bounds"};
  app.set_version_flag("--version", std::string(iiss_version()));
  app.require_subcommand(1);

  Common common;
  Flags flags;

  auto* sim = app.add_subcommand("simulate", "integrate a scenario; writes a trajectory CSV");
  add_common(sim, common);
  add_scenario(sim, common, flags);
  str_opt(sim, flags, "u", "input: zero, const:v:t_end, steps:file.json");
  str_opt(sim, flags, "x0", "initial state: number or comma list");
  num_opt(sim, flags, "t0", "initial time");
  num_opt(sim, flags, "t_end", "final time");
  num_opt(sim, flags, "step", "step size (default: scenario recommendation)");
  str_opt(sim, flags, "integrator", "native, ode, delay or semilinear");
  str_opt(sim, flags, "error_estimate", "on or off");

  auto* meas = app.add_subcommand("measure", "evaluate an input functional");
  add_common(meas, common);
  str_opt(meas, flags, "signal", "zero, const:v:t_end, steps:file.json");
  str_opt(meas, flags, "spec", "sup, sup_seq:..., integral:<fn>, integral_seq:<fn>@..., windowed:<fn>@T");
  num_opt(meas, flags, "from", "truncate to (from, to]");
  num_opt(meas, flags, "to", "truncate to (from, to]");
  num_opt(meas, flags, "sample_dt", "with --format csv: sample the signal at this spacing");
  num_opt(meas, flags, "sample_to", "last sampling time");

  auto* est = app.add_subcommand("estimate", "sampled stability check on a seeded grid");
  add_common(est, common);
  add_scenario(est, common, flags);
  str_opt(est, flags, "property", "0guas, iss, ugb, c123 or meta");
  str_opt(est, flags, "spec", "input measure");
  str_opt(est, flags, "beta", "KL bound exp:c:k or power:c:q:k");
  str_opt(est, flags, "alpha", "comparison function");
  str_opt(est, flags, "rho", "comparison function");
  num_opt(est, flags, "c", "UGB constant");
  count_opt(est, flags, "n_t0", "initial times");
  count_opt(est, flags, "n_x0", "initial states");
  count_opt(est, flags, "n_u", "inputs");
  num_opt(est, flags, "horizon", "simulated time per case");
  num_opt(est, flags, "radius", "initial state radius");
  num_opt(est, flags, "input_level", "largest input measure");
  num_opt(est, flags, "step", "step size");
  str_opt(est, flags, "norm", "pointwise or history");

  auto* bc = app.add_subcommand("bound-check", "compare closed-form bounds with simulations");
  add_common(bc, common);
  add_scenario(bc, common, flags);
  count_opt(bc, flags, "cases", "random cases");
  num_opt(bc, flags, "horizon", "simulated time per case");
  num_opt(bc, flags, "energy_max", "largest input energy");
  num_opt(bc, flags, "eta", "uniform slack of the input difference");
  num_opt(bc, flags, "k", "input gain constant");
  num_opt(bc, flags, "L", "Lipschitz constant (default: declared)");
  num_opt(bc, flags, "step", "step size");

  auto* mod = app.add_subcommand("modulus", "estimate the continuity modulus table");
  add_common(mod, common);
  add_scenario(mod, common, flags);
  str_opt(mod, flags, "spec", "input measure");
  list_opt(mod, flags, "ells", "elapsed times, comma list");
  list_opt(mod, flags, "radii", "state radii, comma list");
  list_opt(mod, flags, "levels", "input levels, comma list");
  count_opt(mod, flags, "samples_per_cell", "multistart candidates per cell");
  num_opt(mod, flags, "step", "step size");

  auto* fal = app.add_subcommand("falsify", "search inputs of small measure with large response");
  add_common(fal, common);
  add_scenario(fal, common, flags);
  str_opt(fal, flags, "spec", "input measure");
  str_opt(fal, flags, "rho", "gain candidate");
  list_opt(fal, flags, "deltas", "decreasing measure levels, comma list");
  num_opt(fal, flags, "horizon", "simulated time");
  num_opt(fal, flags, "step", "step size");

  auto* hor = app.add_subcommand("horizon", "asymptotic-gain horizon construction");
  add_common(hor, common);
  str_opt(hor, flags, "alpha", "comparison function");
  str_opt(hor, flags, "rho", "comparison function");
  str_opt(hor, flags, "beta", "KL bound");
  num_opt(hor, flags, "r", "state radius");
  num_opt(hor, flags, "eps", "target accuracy");
  num_opt(hor, flags, "tol", "bisection tolerance");
  str_opt(hor, flags, "gamma", "\"eta\" or a positive number");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  // Number-like strings such as --x0 1,2 or --gamma 0.25 go through as JSON
  // when they parse; keep list-valued x0 as an array.
  if (auto it = flags.strings.find("x0"); it != flags.strings.end()) {
    const std::string raw = Json::parse(it->second).get<std::string>();
    if (raw.find(',') != std::string::npos) {
      flags.lists["x0"] = raw;
      flags.strings.erase(it);
    } else {
      it->second = raw;
    }
  }
  if (auto it = flags.strings.find("gamma"); it != flags.strings.end()) {
    it->second = Json::parse(it->second).get<std::string>();
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    return run(sub->get_name(), common, flags);
  } catch (const CLI::Error& e) {
    std::cerr << "iiss-lab " << sub->get_name() << ": " << e.get_name() << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "iiss-lab " << sub->get_name() << ": " << e.what() << "\n";
    return kExitUsage;
  }
}
