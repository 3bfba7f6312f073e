#pragma once

// Text forms of the library objects: short mini-languages for the command
// line, JSON for configs and reports, CSV for trajectories.

#include <string>
#include <string_view>

#include "json.hpp"

#include "iiss/bounds.hpp"
#include "iiss/comparison.hpp"
#include "iiss/estimators.hpp"
#include "iiss/signals.hpp"
#include "iiss/sweeps.hpp"
#include "iiss/systems.hpp"

namespace iiss {

using Json = nlohmann::ordered_json;

/// Finite doubles as numbers, non-finite ones as "inf", "-inf" or "nan".
Json number(double v);
/// Inverse of number(); also accepts plain numbers.
double to_double(const Json& j);

/// identity | power:a:p | affine_exp:a:b | linear_exp:a:b | pwl:r0,y0;r1,y1;...
ComparisonFunction parse_function(std::string_view text);
Json to_json(const ComparisonFunction& f);
/// Accepts a mini-language string or the object produced by to_json.
ComparisonFunction function_from_json(const Json& j);

/// exp:c:k for c * r * e^{-k t}; power:c:q:k for c * r^q * e^{-k t}.
KLFunction parse_kl(std::string_view text);
Json to_json(const KLFunction& beta);
KLFunction kl_from_json(const Json& j);

/// sup | sup_seq:t1,t2,... | integral:<fn> | integral_seq:<fn>@t1,t2,... |
/// windowed:<fn>@T.
MeasureSpec parse_spec(std::string_view text);
std::string spec_to_string(const MeasureSpec& spec);
/// {"variant": "sup" | "sup_seq" | "integral" | "integral_seq" | "windowed",
///  "kappa", "seq", "window"}.
Json to_json(const MeasureSpec& spec);
/// Accepts a mini-language string or the object produced by to_json.
MeasureSpec spec_from_json(const Json& j);

/// {"dim", "breakpoints", "values", "tail"}.
Json to_json(const Signal& u);
Signal signal_from_json(const Json& j);
/// zero[:dim] | const:v[:t_end] | steps:file.json. Constant values are
/// scalar (dim 1) or comma-separated vectors.
Signal parse_signal(std::string_view text);

/// Columns t, u_0 .. u_{m-1} at t = 0, dt, 2 dt, ... <= t_end.
std::string signal_csv(const Signal& u, double t_end, double dt);

/// Columns t, x_0 .. x_{n-1}; grid from t0 on.
std::string trajectory_csv(const Trajectory& traj);

Json to_json(const WorstCase& w);
/// Summary without the per-case rows.
Json to_json(const StabilityReport& r);
Json to_json(const BoundCheckReport& r);
Json to_json(const ContinuityModulus& m);
Json to_json(const FalsifyResult& r);
Json to_json(const HorizonTrace& h);
Json to_json(const UcepDelta& d);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace iiss
