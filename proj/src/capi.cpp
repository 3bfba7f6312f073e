#include "iiss/iiss.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "iiss/errors.hpp"
#include "iiss/json_io.hpp"
#include "iiss/pipelines.hpp"
#include "iiss/scenarios.hpp"

struct iiss_signal {
  iiss::Signal value;
};

struct iiss_scenario {
  iiss::Scenario value;
};

struct iiss_trajectory {
  iiss::Trajectory value;
};

namespace {

thread_local std::string g_last_error;

iiss_status status_of(iiss::ErrorCode code) {
  return static_cast<iiss_status>(static_cast<int>(code) + 1);
}

iiss_status fail(iiss_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class Fn>
iiss_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return IISS_OK;
  } catch (const iiss::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(IISS_ERR_INVALID_ARGUMENT, std::string("JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(IISS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(IISS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(IISS_ERR_INTERNAL, "unknown exception");
  }
}

#define IISS_REQUIRE(ptr)                                                    \
  do {                                                                       \
    if ((ptr) == nullptr) return fail(IISS_ERR_NULL_POINTER, #ptr " is NULL"); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* iiss_version(void) { return IISS_VERSION_STRING; }

const char* iiss_status_string(iiss_status status) {
  switch (status) {
    case IISS_OK: return "ok";
    case IISS_ERR_NULL_POINTER: return "null pointer";
    case IISS_ERR_INTERNAL: return "internal error";
    default: break;
  }
  const int idx = static_cast<int>(status) - 1;
  if (idx >= 0 && idx <= static_cast<int>(iiss::ErrorCode::Io)) {
    return iiss::to_string(static_cast<iiss::ErrorCode>(idx)).data();
  }
  return "unknown status";
}

const char* iiss_last_error(void) { return g_last_error.c_str(); }

iiss_status iiss_signal_parse(const char* text, iiss_signal** out) {
  IISS_REQUIRE(text);
  IISS_REQUIRE(out);
  return guarded([&] { *out = new iiss_signal{iiss::parse_signal(text)}; });
}

iiss_status iiss_signal_from_json(const char* json, iiss_signal** out) {
  IISS_REQUIRE(json);
  IISS_REQUIRE(out);
  return guarded([&] { *out = new iiss_signal{iiss::signal_from_json(iiss::Json::parse(json))}; });
}

void iiss_signal_free(iiss_signal* signal) { delete signal; }

iiss_status iiss_signal_dim(const iiss_signal* signal, size_t* out) {
  IISS_REQUIRE(signal);
  IISS_REQUIRE(out);
  *out = signal->value.dim();
  return IISS_OK;
}

iiss_status iiss_signal_eval(const iiss_signal* signal, double t, double* out) {
  IISS_REQUIRE(signal);
  IISS_REQUIRE(out);
  return guarded([&] {
    const iiss::Vec v = signal->value(t);
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v(i);
  });
}

iiss_status iiss_signal_measure(const iiss_signal* signal, const char* spec, double* out) {
  IISS_REQUIRE(signal);
  IISS_REQUIRE(spec);
  IISS_REQUIRE(out);
  return guarded([&] { *out = iiss::input_measure(signal->value, iiss::parse_spec(spec)); });
}

iiss_status iiss_scenario_create(const char* name, const char* params_json, iiss_scenario** out) {
  IISS_REQUIRE(name);
  IISS_REQUIRE(out);
  return guarded([&] {
    iiss::ScenarioParams params;
    if (params_json) {
      const auto j = iiss::Json::parse(params_json);
      if (!j.is_object()) {
        throw iiss::Error(iiss::ErrorCode::InvalidArgument, "params must be a JSON object");
      }
      for (const auto& [k, v] : j.items()) params[k] = iiss::to_double(v);
    }
    *out = new iiss_scenario{iiss::make_scenario(name, params)};
  });
}

void iiss_scenario_free(iiss_scenario* scenario) { delete scenario; }

iiss_status iiss_scenario_state_dim(const iiss_scenario* scenario, size_t* out) {
  IISS_REQUIRE(scenario);
  IISS_REQUIRE(out);
  *out = iiss::state_dim(scenario->value.system);
  return IISS_OK;
}

iiss_status iiss_scenario_input_dim(const iiss_scenario* scenario, size_t* out) {
  IISS_REQUIRE(scenario);
  IISS_REQUIRE(out);
  *out = iiss::input_dim(scenario->value.system);
  return IISS_OK;
}

iiss_status iiss_simulate(const iiss_scenario* scenario, double t0, const double* x0,
                          size_t x0_len, const iiss_signal* input, double t_end, double step,
                          iiss_trajectory** out) {
  IISS_REQUIRE(scenario);
  IISS_REQUIRE(x0);
  IISS_REQUIRE(input);
  IISS_REQUIRE(out);
  return guarded([&] {
    const auto& sc = scenario->value;
    if (x0_len != iiss::state_dim(sc.system)) {
      throw iiss::Error(iiss::ErrorCode::DimensionMismatch, "x0 length differs from the state dimension");
    }
    const iiss::Vec x = Eigen::Map<const iiss::Vec>(x0, static_cast<Eigen::Index>(x0_len));
    const double h = step > 0.0 ? step : iiss::recommended_step(sc, input->value);
    iiss::IntegrateOptions opts;
    opts.throw_on_escape = false;
    *out = new iiss_trajectory{iiss::simulate(sc.system, t0, x, input->value, t_end, h, opts)};
  });
}

void iiss_trajectory_free(iiss_trajectory* trajectory) { delete trajectory; }

iiss_status iiss_trajectory_size(const iiss_trajectory* trajectory, size_t* out) {
  IISS_REQUIRE(trajectory);
  IISS_REQUIRE(out);
  *out = trajectory->value.grid().size();
  return IISS_OK;
}

iiss_status iiss_trajectory_dim(const iiss_trajectory* trajectory, size_t* out) {
  IISS_REQUIRE(trajectory);
  IISS_REQUIRE(out);
  *out = trajectory->value.dim();
  return IISS_OK;
}

iiss_status iiss_trajectory_time(const iiss_trajectory* trajectory, size_t index, double* out) {
  IISS_REQUIRE(trajectory);
  IISS_REQUIRE(out);
  const auto g = trajectory->value.grid();
  if (index >= g.size()) return fail(IISS_ERR_INVALID_ARGUMENT, "trajectory index out of range");
  *out = g[index];
  return IISS_OK;
}

iiss_status iiss_trajectory_state(const iiss_trajectory* trajectory, size_t index, double* out) {
  IISS_REQUIRE(trajectory);
  IISS_REQUIRE(out);
  const auto xs = trajectory->value.states();
  if (index >= xs.size()) return fail(IISS_ERR_INVALID_ARGUMENT, "trajectory index out of range");
  for (Eigen::Index i = 0; i < xs[index].size(); ++i) out[i] = xs[index](i);
  return IISS_OK;
}

iiss_status iiss_trajectory_escaped(const iiss_trajectory* trajectory, int* out) {
  IISS_REQUIRE(trajectory);
  IISS_REQUIRE(out);
  *out = trajectory->value.escaped() ? 1 : 0;
  return IISS_OK;
}

iiss_status iiss_trajectory_csv(const iiss_trajectory* trajectory, char** out) {
  IISS_REQUIRE(trajectory);
  IISS_REQUIRE(out);
  return guarded([&] { *out = dup_string(iiss::trajectory_csv(trajectory->value)); });
}

iiss_status iiss_run(const char* command, const char* config_json, char** report_json, char** csv,
                     int* verdict) {
  IISS_REQUIRE(command);
  IISS_REQUIRE(report_json);
  IISS_REQUIRE(verdict);
  return guarded([&] {
    const iiss::Json config =
        config_json && *config_json ? iiss::Json::parse(config_json) : iiss::Json::object();
    const iiss::PipelineResult res = iiss::run_pipeline(command, config);
    char* report = dup_string(res.report.dump(2) + "\n");
    if (csv) {
      try {
        *csv = res.csv.empty() ? nullptr : dup_string(res.csv);
      } catch (...) {
        std::free(report);
        throw;
      }
    }
    *report_json = report;
    *verdict = res.exit_code;
  });
}

void iiss_set_threads(size_t threads) { iiss::set_default_threads(threads); }

void iiss_string_free(char* str) { std::free(str); }

}  // extern "C"
