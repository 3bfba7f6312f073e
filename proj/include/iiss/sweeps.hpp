#pragma once

// Simulation sweeps that compare the closed-form bounds against measured
// trajectories.

#include <cstdint>
#include <optional>
#include <string>

#include "iiss/bounds.hpp"
#include "iiss/estimators.hpp"
#include "iiss/systems.hpp"

namespace iiss {

struct BoundCheckReport {
  std::string scenario;
  std::size_t cases = 0;
  /// Sampled instants with actual > bound beyond kCheckTol.
  std::size_t violations = 0;
  /// max bound / actual over instants with actual > 0; 0 when none.
  double max_ratio = 0.0;
  /// min bound - actual.
  double min_margin = kInfinity;
  std::uint64_t seed = 0;
  std::optional<WorstCase> worst_case;

  bool pass() const noexcept { return violations == 0; }
};

struct GronwallSweepConfig {
  std::size_t cases = 100;
  double horizon = 5.0;
  /// Inputs are scaled to integral of gamma(|u|) drawn from (0, energy_max].
  double energy_max = 1.0;
  double eta = 0.0;
  double k = 1.0;
  double L = 0.0;
  ComparisonFunction gamma = ComparisonFunction::identity();
  /// Semigroup constants for semilinear systems; taken from the system
  /// metadata (or sampled from A) when unset.
  std::optional<double> M;
  std::optional<double> w;
  /// Radius of the random initial states or histories.
  double radius = 1.0;
  double t0_max = 10.0;
  double step = 1e-2;
  StepRule step_for;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// Measures ||x_t - z_t|| (history norm for delay systems, |x(t) - z(t)|
/// otherwise) with z the zero-input trajectory from the same initial data,
/// and compares it with the delay or semilinear Gronwall bound.
BoundCheckReport gronwall_domination_sweep(const SystemDef& sys, const GronwallSweepConfig& cfg,
                                           std::string name = {});

struct BilinearSweepConfig {
  std::size_t cases = 200;
  double x0_max = 3.0;
  double energy_max = 2.0;
  double horizon = 10.0;
  double step = 1e-3;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// sup_t |x(t)| against alpha(|x0|) + rho(||u||_gamma) + c per case.
BoundCheckReport bilinear_domination_sweep(const SystemDef& sys, const BilinearParams& p,
                                           const BilinearSweepConfig& cfg, std::string name = {});

/// Random piecewise-constant input on (0, horizon] with 1 to 8 segments.
Signal random_step_input(std::uint64_t seed, std::size_t input_dim, double horizon);

}  // namespace iiss
