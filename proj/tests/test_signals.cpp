#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "iiss/signals.hpp"
#include "oracles.hpp"

using iiss::ComparisonFunction;
using iiss::ErrorCode;
using iiss::MeasureSpec;
using iiss::Signal;
using iiss::Vec;

namespace {

Vec s1(double v) { return Vec::Constant(1, v); }

std::vector<MeasureSpec> all_specs() {
  const auto sq = ComparisonFunction::power(1.0, 2.0);
  return {MeasureSpec::sup(), MeasureSpec::sup_seq({0.3, 1.1, 2.5, 4.0, 7.7}),
          MeasureSpec::integral(sq), MeasureSpec::integral_seq(sq, {0.5, 1.5, 3.0, 6.0}),
          MeasureSpec::windowed_integral(ComparisonFunction::identity(), 1.3)};
}

bool same_on_grid(const Signal& a, const Signal& b, double t_max) {
  for (double t = 0.0; t <= t_max; t += 0.01) {
    if ((a(t) - b(t)).norm() != 0.0) return false;
  }
  for (double t : a.breakpoints()) {
    if ((a(t) - b(t)).norm() != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("signal construction and evaluation") {
  const Signal u(1, {1.0, 2.0}, {s1(1.0), s1(2.0)}, s1(0.0));
  CHECK(u(0.0)(0) == 1.0);
  CHECK(u(1.0)(0) == 1.0);
  CHECK(u(1.5)(0) == 2.0);
  CHECK(u(2.0)(0) == 2.0);
  CHECK(u(2.1)(0) == 0.0);
  CHECK(u.right_limit(1.0)(0) == 2.0);
  CHECK(Signal::zero(2).is_zero());
  CHECK(Signal::zero(1).breakpoints().empty());
  CHECK(error_of([] { Signal(1, {2.0, 1.0}, {s1(1.0), s1(2.0)}, s1(0.0)); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([] { Signal(1, {1.0}, {Vec::Zero(2)}, s1(0.0)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("concat examples") {
  CHECK(iiss::concat(Signal::zero(1), Signal::zero(1), 1.0).is_zero());
  const auto c = iiss::concat(Signal::constant(s1(1.0)), Signal::constant(s1(2.0)), 1.0);
  CHECK(c(0.5)(0) == 1.0);
  CHECK(c(1.0)(0) == 1.0);
  CHECK(c(1.5)(0) == 2.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 5.0);
    CHECK(same_on_grid(iiss::concat(u, u, 2.2), u, 6.0));
  }
  CHECK(error_of([] { (void)iiss::concat(Signal::zero(1), Signal::zero(2), 1.0); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("truncate examples") {
  CHECK(iiss::truncate(Signal::zero(1), 0.0, 5.0).is_zero());
  const auto r = iiss::truncate(Signal::constant(s1(3.0)), 1.0, 2.0);
  CHECK(r(1.0)(0) == 0.0);
  CHECK(r(1.5)(0) == 3.0);
  CHECK(r(2.0)(0) == 3.0);
  CHECK(r(2.5)(0) == 0.0);
  CHECK(error_of([] { (void)iiss::truncate(Signal::zero(1), 2.0, 2.0); }) == ErrorCode::InvalidInterval);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 4.0);
    const auto a = iiss::truncate(u, 0.0, 2.0);
    CHECK(same_on_grid(iiss::truncate(a, 0.0, 5.0), a, 6.0));
  }
}

TEST_CASE("truncation is concatenation with zero") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> t(0.0, 5.0);
  const auto z = Signal::zero(1);
  for (int i = 0; i < 50; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 5.0);
    double s = t(rng);
    double e = t(rng);
    if (s == e) continue;
    if (s > e) std::swap(s, e);
    const auto lhs = iiss::truncate(u, s, e);
    const auto rhs = iiss::concat(iiss::concat(z, u, s), z, e);
    CHECK(same_on_grid(lhs, rhs, 6.0));
    CHECK(lhs(s)(0) == 0.0);
    CHECK(lhs(e)(0) == u(e)(0));
    CHECK(same_on_grid(iiss::truncate(u, s), iiss::concat(z, u, s), 6.0));
  }
}

TEST_CASE("measure examples") {
  const auto kappa = ComparisonFunction::power(1.0, 2.0);
  CHECK(iiss::input_measure(Signal::pulse(s1(0.3), 1.0), MeasureSpec::integral(kappa)) ==
        doctest::Approx(0.09));
  for (const auto& spec : all_specs()) CHECK(iiss::input_measure(Signal::zero(1), spec) == 0.0);
  const Signal u(1, {1.0, 2.0}, {s1(1.0), s1(2.0)}, s1(0.0));
  CHECK(iiss::input_measure(u, MeasureSpec::integral(ComparisonFunction::identity())) ==
        doctest::Approx(3.0));
  CHECK(iiss::input_measure(u, MeasureSpec::sup()) == 2.0);
  const auto w = Signal::pulse(s1(1.0), 2.0);
  const auto win = MeasureSpec::windowed_integral(ComparisonFunction::identity(), 1.0);
  const double exact = iiss::input_measure(w, win);
  CHECK(exact == doctest::Approx(1.0));
  const double swept = oracle::windowed_sweep(w, [](double r) { return r; }, 1.0, 3.0, 1e-4);
  CHECK(std::abs(exact - swept) <= 1e-12);
  CHECK(std::isinf(iiss::input_measure(Signal::constant(s1(1.0)), MeasureSpec::integral(kappa))));
  CHECK(iiss::input_measure(Signal::constant(s1(1.5)), MeasureSpec::sup()) == 1.5);
}

TEST_CASE("windowed measure matches a brute-force sweep") {
  std::mt19937_64 rng(21);
  const auto id = [](double r) { return r; };
  for (int i = 0; i < 10; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 3.0);
    const auto spec = MeasureSpec::windowed_integral(ComparisonFunction::identity(), 0.7);
    const double exact = iiss::input_measure(u, spec);
    const double swept = oracle::windowed_sweep(u, id, 0.7, 3.0, 1e-4);
    CHECK(exact >= swept - 1e-12);
    CHECK(exact - swept <= 1e-3 * (1.0 + exact));
  }
}

TEST_CASE("integral measure matches a Riemann sum") {
  std::mt19937_64 rng(17);
  const auto kappa = ComparisonFunction::power(1.0, 1.5);
  for (int i = 0; i < 5; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 2.0);
    const double exact = iiss::input_measure(u, MeasureSpec::integral(kappa));
    const double riemann = oracle::riemann_integral(u, [&](double r) { return kappa(r); }, 0.0, 2.0, 1e-5);
    CHECK(std::abs(exact - riemann) <= 1e-4 * std::max(1.0, exact));
  }
}

TEST_CASE("integral additivity and truncation monotonicity") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> t(0.0, 6.0);
  const auto kappa = MeasureSpec::integral(ComparisonFunction::power(2.0, 1.3));
  for (int i = 0; i < 200; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 5.0);
    std::vector<double> ts{t(rng), t(rng), t(rng)};
    std::sort(ts.begin(), ts.end());
    if (ts[0] == ts[1] || ts[1] == ts[2]) continue;
    const double whole = iiss::input_measure(iiss::truncate(u, ts[0], ts[2]), kappa);
    const double a = iiss::input_measure(iiss::truncate(u, ts[0], ts[1]), kappa);
    const double b = iiss::input_measure(iiss::truncate(u, ts[1], ts[2]), kappa);
    CHECK(std::abs(whole - a - b) <= 1e-12);
    for (const auto& spec : all_specs()) {
      const double trunc = iiss::input_measure(iiss::truncate(u, ts[0], ts[1]), spec);
      const double tail = iiss::input_measure(iiss::truncate(u, ts[0]), spec);
      const double full = iiss::input_measure(u, spec);
      CHECK(trunc <= tail * (1.0 + 1e-12));
      CHECK(tail <= full * (1.0 + 1e-12));
      CHECK(iiss::check_admissibility(spec, u, ts[0], ts[1]).pass());
    }
  }
}

TEST_CASE("admissibility examples") {
  const auto id = MeasureSpec::integral(ComparisonFunction::identity());
  const auto r = iiss::check_admissibility(id, Signal::pulse(s1(1.0), 3.0), 0.0, 1.0);
  CHECK(r.truncated == doctest::Approx(1.0));
  CHECK(r.tail == doctest::Approx(3.0));
  CHECK(r.full == doctest::Approx(3.0));
  CHECK(r.pass());
  for (const auto& spec : all_specs()) {
    const auto z = iiss::check_admissibility(spec, Signal::zero(1), 0.0, 1.0);
    CHECK(z.full == 0.0);
    CHECK(z.pass());
  }
  const Signal tailed(1, {1.0}, {s1(2.0)}, s1(1.0));
  const auto d = iiss::check_admissibility(id, tailed, 0.0, 1.0);
  CHECK(std::isfinite(d.truncated));
  CHECK(std::isinf(d.tail));
  CHECK(std::isinf(d.full));
  CHECK(d.pass());
}

TEST_CASE("condition (E) examples") {
  const auto u = Signal::pulse(s1(1.0), 2.0);
  const auto e = iiss::check_condition_e(MeasureSpec::integral(ComparisonFunction::identity()), u, 0.0, 1.0, 2.0);
  CHECK(e.whole == doctest::Approx(2.0));
  CHECK(e.pass());
  CHECK(e.equality);
  const auto s = iiss::check_condition_e(MeasureSpec::sup(), u, 0.0, 1.0, 2.0);
  CHECK(s.whole == 1.0);
  CHECK_FALSE(s.pass());
  for (const auto& spec : all_specs()) {
    CHECK(iiss::check_condition_e(spec, Signal::zero(1), 0.0, 1.0, 2.0).pass());
  }
  CHECK(MeasureSpec::integral(ComparisonFunction::identity()).satisfies_condition_e());
  CHECK_FALSE(MeasureSpec::sup().satisfies_condition_e());
}

TEST_CASE("measure spec validation") {
  CHECK(error_of([] { (void)MeasureSpec::sup_seq({1.0, 0.5}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([] { (void)MeasureSpec::windowed_integral(ComparisonFunction::identity(), 0.0); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("scaling to a target measure") {
  const auto spec = MeasureSpec::integral(ComparisonFunction::power(1.0, 2.0));
  const auto u = Signal::pulse(s1(1.0), 1.0);
  const auto v = iiss::scale_to_measure(u, spec, 0.25);
  const double m = iiss::input_measure(v, spec);
  CHECK(m <= 0.25);
  CHECK(m == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(iiss::scale_to_measure(Signal::zero(1), spec, 1.0).is_zero());
}

TEST_CASE("shift and sample") {
  const auto u = Signal::pulse(s1(2.0), 1.0).shifted(3.0);
  CHECK(u(3.0)(0) == 0.0);
  CHECK(u(3.5)(0) == 2.0);
  CHECK(u(4.0)(0) == 2.0);
  CHECK(u(4.5)(0) == 0.0);
  const std::vector<double> ts{0.0, 3.5};
  const auto xs = u.sample(ts);
  CHECK(xs[1](0) == 2.0);
}
