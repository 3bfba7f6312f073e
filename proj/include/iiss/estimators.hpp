#pragma once

// Sampled checkers for the stability properties. Every universal quantifier
// over (t0, x0, u) is replaced by a finite seeded sweep: a pass verdict means
// that no violation was found on the grid, never a proof.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iiss/bounds.hpp"
#include "iiss/comparison.hpp"
#include "iiss/signals.hpp"
#include "iiss/systems.hpp"

namespace iiss {

enum class Property {
  ZeroGUAS,
  UGB_UBEBS,
  UGS_UBEBS0,
  ISS_iISS,
  UBRS,
  UCEP,
  UUAG,
  ConditionE,
  Admissibility,
  Envelope,
};

std::string_view to_string(Property p) noexcept;

/// Pointwise |x(t)| or the history sup norm ||x_t|| (delay systems).
enum class NormMode { Pointwise, History };

inline constexpr double kCheckTol = 1e-6;

/// Inequality lhs <= rhs accepted with slack kCheckTol * (1 + |rhs|).
bool within_tolerance(double lhs, double rhs, double tol = kCheckTol);

struct WorstCase {
  double t0 = 0.0;
  std::size_t x0_id = 0;
  std::size_t u_id = 0;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Worst sampled instant of one (t0, x0, u) case.
struct CaseRow {
  WorstCase at;
  bool escaped = false;
};

struct StabilityReport {
  Property property = Property::ZeroGUAS;
  std::string label;
  bool pass = true;
  std::optional<WorstCase> worst_case;
  /// min over sampled instants of rhs - lhs.
  double margin = kInfinity;
  std::size_t cases = 0;
  std::size_t violations = 0;
  std::uint64_t seed = 0;
  double tol = kCheckTol;
  bool escaped = false;
  std::vector<CaseRow> rows;

  /// One row per case: t0,x0_id,u_id,t,lhs,rhs,margin,escaped.
  std::string csv() const;
};

using StepRule = std::function<double(const Signal& u)>;

struct SampleGrid {
  std::vector<double> t0_values;
  std::vector<Vec> x0_values;
  /// Initial histories for delay systems; when empty the history is the
  /// constant extension of the matching x0.
  std::vector<HistorySegment> histories;
  /// Input shapes on t > 0; a case applies u.shifted(t0).
  std::vector<Signal> inputs;
  double horizon = 10.0;
  double radius = 1.0;
  double step = 1e-3;
  /// Overrides `step` per input when set.
  StepRule step_for;
  NormMode norm_mode = NormMode::Pointwise;
  std::uint64_t seed = 0;
  /// 0 = use the process default.
  std::size_t threads = 0;

  void validate() const;
  std::size_t x0_count() const noexcept;
};

struct GridConfig {
  std::size_t n_t0 = 16;
  std::size_t n_x0 = 32;
  std::size_t n_u = 64;
  double horizon = 10.0;
  double radius = 1.0;
  /// Inputs are scaled to measures drawn from (0, input_level].
  double input_level = 1.0;
  std::size_t state_dim = 1;
  std::size_t input_dim = 1;
  /// > 0 builds random initial histories of this span.
  double history_span = 0.0;
  double step = 1e-3;
  std::uint64_t seed = 0;
};

/// Structured plus seeded random sweep: t0 = 0 and log-uniform values up to
/// 10 * horizon; the origin, axis points, corners and random points of the
/// radius-r ball; zero, constant, impulse-like, alternating and random step
/// inputs. Deterministic in the seed.
SampleGrid make_grid(const GridConfig& cfg, const MeasureSpec& spec);

/// Process-wide worker count for sweeps (0 = hardware concurrency).
void set_default_threads(std::size_t n);
std::size_t default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

StabilityReport check_0guas(const SystemDef& sys, const KLFunction& beta, const SampleGrid& grid);

StabilityReport check_iss(const SystemDef& sys, const KLFunction& beta,
                          const ComparisonFunction& rho, const MeasureSpec& spec,
                          const SampleGrid& grid);

/// c = 0 labels the report UGS/UBEBS0.
StabilityReport check_ugb(const SystemDef& sys, const ComparisonFunction& alpha,
                          const ComparisonFunction& rho, double c, const MeasureSpec& spec,
                          const SampleGrid& grid);

struct C123Params {
  // Bounded reachability: ||x0|| <= r, ||u|| <= s on [t0, t0 + T] stays below C.
  double ubrs_T = 1.0;
  double ubrs_r = 1.0;
  double ubrs_s = 1.0;
  double ubrs_C = 1.0;
  // Continuity at the equilibrium: ||x0||, ||u|| <= delta keeps ||x|| <= eps on [t0, t0 + h].
  double ucep_h = 1.0;
  double ucep_eps = 1.0;
  double ucep_delta = 0.5;
  // Asymptotic gain: ||x0|| <= r gives ||x(t)|| <= eps + nu(||u||) for t >= t0 + T.
  ComparisonFunction uuag_nu = ComparisonFunction::identity();
  double uuag_r = 1.0;
  double uuag_eps = 0.5;
  double uuag_T = 1.0;
  /// Time observed after t0 + T.
  double uuag_window = 10.0;
};

/// Returns {UBRS, UCEP, UUAG}.
std::array<StabilityReport, 3> check_characterization_c123(const SystemDef& sys,
                                                           const MeasureSpec& spec,
                                                           const SampleGrid& grid,
                                                           const C123Params& params);

struct MetaReport {
  StabilityReport iss;
  StabilityReport guas;
  StabilityReport ugb;
  /// iss.pass implies guas.pass and ugb.pass.
  bool holds = false;
};

/// Integral-type pass implies 0-GUAS (inputs restricted to zero) and
/// UGB with alpha = beta(., 0), c = 0.
MetaReport check_iiss_meta(const SystemDef& sys, const KLFunction& beta,
                           const ComparisonFunction& rho, const MeasureSpec& spec,
                           const SampleGrid& grid);

struct ModulusGrid {
  std::vector<double> ells;
  std::vector<double> radii;
  std::vector<double> levels;
};

struct ModulusConfig {
  std::size_t samples_per_cell = 8;
  std::size_t refine_rounds = 2;
  std::size_t segments = 4;
  double t0_max = 10.0;
  double step = 1e-3;
  StepRule step_for;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct ContinuityModulus {
  ModulusGrid grid;
  /// Cell maxima as found, index (i_ell, i_r, i_s) row-major.
  std::vector<double> raw;
  /// Cumulative maximum along each axis; nondecreasing in every argument.
  std::vector<double> table;
  /// Largest raw value in the zero-level column; NaN without a zero level.
  double noise_floor = std::numeric_limits<double>::quiet_NaN();

  double at(std::size_t i_ell, std::size_t i_r, std::size_t i_s) const;
  double raw_at(std::size_t i_ell, std::size_t i_r, std::size_t i_s) const;
  std::size_t index(std::size_t i_ell, std::size_t i_r, std::size_t i_s) const;
};

/// Maximizes ||x(t) - z(t)|| over t0, ||x0|| <= r and inputs of measure s
/// supported in (t0, t0 + ell], where z is the zero-input trajectory.
ContinuityModulus estimate_continuity_modulus(const SystemDef& sys, const MeasureSpec& spec,
                                              const ModulusGrid& grid,
                                              const ModulusConfig& cfg);

struct WitnessAttempt {
  double delta = 0.0;
  bool found = false;
  std::optional<Signal> input;
  double measure = 0.0;
  double t = 0.0;
  double norm = 0.0;
  double threshold = 0.0;  // rho(delta)
  std::size_t candidates = 0;
};

struct FalsifyConfig {
  double horizon = 1.0;
  double step = 1e-3;
  StepRule step_for;
  /// Shapes scaled to fractions of delta; defaults to pulses on (0, 1],
  /// (0, 1/2] and an alternating step.
  std::vector<Signal> shapes;
  std::vector<double> fractions{0.5, 0.25, 0.1};
  bool stop_at_first = false;
};

struct FalsifyResult {
  std::vector<WitnessAttempt> attempts;
  /// First witness in schedule order; nullptr when exhausted.
  const WitnessAttempt* first_witness() const;
  bool exhausted() const { return first_witness() == nullptr; }
};

/// For each delta searches inputs with ||u|| < delta driving x(0) = 0 above
/// rho(delta).
FalsifyResult falsify_iiss(const SystemDef& sys, const MeasureSpec& spec,
                           const ComparisonFunction& rho, const std::vector<double>& delta_schedule,
                           const FalsifyConfig& cfg = {});

struct UcepRoutes {
  std::optional<ComparisonFunction> alpha;
  std::optional<ComparisonFunction> rho;
  std::optional<double> k;
  std::optional<double> L;
  std::optional<double> T;
};

struct UcepVerification {
  const SystemDef* sys = nullptr;
  std::optional<MeasureSpec> spec;
  SampleGrid grid;
  double h = 1.0;
};

struct UcepDelta {
  double delta = 0.0;
  /// Slack budget of the Gronwall route; NaN when that route is not chosen.
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::string route;
  std::optional<StabilityReport> verification;
  bool verified() const { return !verification || verification->pass; }
};

/// delta = min of (alpha + rho)^{-1}(eps) and eps / (2 k e^{LT}) (with
/// eta = eps / (2 T e^{LT})) over the available routes. Throws NoRoute when
/// neither route is supplied.
UcepDelta find_ucep_delta(const UcepRoutes& routes, double eps,
                          const UcepVerification* verify = nullptr);

struct R2Config {
  std::size_t samples = 2000;
  double t_max = 100.0;
  std::uint64_t seed = 0;
  /// Histories sampled for delay systems.
  std::size_t history_nodes = 8;
};

/// Largest delta in (0, 1) found by bisection with sampled
/// |f(t, psi, mu) - f(t, psi, 0)| < eps for ||psi|| <= r, |mu| <= delta.
double find_r2_delta(const SystemDef& sys, double r, double eps, const R2Config& cfg = {});

/// Evaluates the right-hand side f(t, psi, mu); for semilinear systems the
/// nonlinearity f (without A x); for delay-free systems psi(0) is the state.
Vec evaluate_rhs(const SystemDef& sys, double t, const HistorySegment& psi, const Vec& mu);

struct EnvelopeConfig {
  std::size_t samples = 10000;
  double radius = 10.0;
  double mu_max = 10.0;
  double t_max = 100.0;
  std::uint64_t seed = 0;
  std::size_t history_nodes = 8;
};

/// |f(t, psi, mu)| <= N(||psi||) (1 + gamma(|mu|)).
StabilityReport check_growth_envelope(const SystemDef& sys, const NondecreasingEnvelope& n,
                                      const ComparisonFunction& gamma,
                                      const EnvelopeConfig& cfg = {});

/// ||f(t, x, mu)|| <= (K ||x|| + d) gamma(||mu||).
StabilityReport check_bilinear_envelope(const SystemDef& sys, double K, double d,
                                        const ComparisonFunction& gamma,
                                        const EnvelopeConfig& cfg = {});

/// |f(t, psi, mu) - f(t, psi, 0)| <= eta + k gamma(|mu|) for ||psi|| <= cfg.radius.
StabilityReport check_claim_constant(const SystemDef& sys, double eta, double k,
                                     const ComparisonFunction& gamma,
                                     const EnvelopeConfig& cfg = {});

/// Deterministic per-index seed derivation.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace iiss
