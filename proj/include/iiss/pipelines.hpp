#pragma once

// Batch runs driven by a JSON config: the commands behind the command-line
// tool and iiss_run in the C API.

#include <string>
#include <string_view>
#include <vector>

#include "iiss/json_io.hpp"

namespace iiss {

struct PipelineResult {
  /// {"tool", "version", "command", "seed", "config", "result"}; the config
  /// is fully resolved with defaults filled in.
  Json report;
  /// Trajectory CSV for `simulate`, case rows for `estimate`, sampled values
  /// for `measure` with sample_dt, empty
  /// otherwise.
  std::string csv;
  /// 0 success or pass, 1 property failed or witness found, 3 numerical
  /// failure recorded in the report.
  int exit_code = 0;
};

/// simulate, measure, estimate, bound-check, modulus, falsify, horizon.
std::vector<std::string> pipeline_commands();

/// Throws Error on invalid configs; unknown keys are rejected by name.
PipelineResult run_pipeline(std::string_view command, const Json& config);

std::string version_string();

}  // namespace iiss
