#pragma once

// Built-in catalog of parameterized systems.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "iiss/systems.hpp"

namespace iiss {

using ScenarioParams = std::map<std::string, double>;

struct Scenario {
  std::string name;
  SystemDef system;
  /// Resolved parameters, defaults filled in.
  ScenarioParams params;
  std::vector<Signal> default_inputs;
  /// Step for the scenario's own integrator.
  double default_step = 1e-3;
  /// Step at which explicit Runge-Kutta integration of the same dynamics is
  /// stable (differs from default_step for stiff semidiscretizations).
  double rk_step = 1e-3;
};

/// counterexample26, linear_tv, delay_linear, bilinear_scalar, heat1d.
Scenario make_scenario(std::string_view name, const ScenarioParams& params = {});

std::vector<std::string> scenario_names();

/// Step that resolves the fastest dynamics driven by u.
double recommended_step(const Scenario& sc, const Signal& u);

/// Smooth cutoff: 1 on [0, 1], 0 on [2, inf), 1 - 3s^2 + 2s^3 with s = r - 1
/// in between.
double smooth_cutoff(double r);

}  // namespace iiss
