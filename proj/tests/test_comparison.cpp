#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "iiss/comparison.hpp"
#include "oracles.hpp"

using iiss::ComparisonFunction;
using iiss::ErrorCode;
using iiss::KLFunction;
using iiss::NondecreasingEnvelope;

namespace {

std::vector<ComparisonFunction> catalog() {
  return {ComparisonFunction::identity(),
          ComparisonFunction::power(1.0, 2.0),
          ComparisonFunction::power(3.0, 0.5),
          ComparisonFunction::affine_exp(0.5, 2.0),
          ComparisonFunction::linear_exp(1.0, 1.0),
          ComparisonFunction::piecewise_linear({{0.0, 0.0}, {1.0, 2.0}, {3.0, 2.5}}),
          ComparisonFunction::compose(ComparisonFunction::power(1.0, 2.0),
                                      ComparisonFunction::affine_exp(1.0, 1.0)),
          ComparisonFunction::sum({ComparisonFunction::identity(), ComparisonFunction::power(2.0, 3.0)}),
          ComparisonFunction::inverse(ComparisonFunction::linear_exp(1.0, 0.5)),
          ComparisonFunction::power(1.0, 2.0).scaled(4.0)};
}

}  // namespace

TEST_CASE("eval on the basic families") {
  CHECK(iiss::eval(ComparisonFunction::identity(), 0.0) == 0.0);
  CHECK(iiss::eval(ComparisonFunction::power(1.0, 2.0), 2.0) == doctest::Approx(4.0));
  const auto id = ComparisonFunction::identity();
  const auto psi = ComparisonFunction::compose(ComparisonFunction::inverse(id), id);
  CHECK(iiss::eval(psi, 3.0) == doctest::Approx(3.0));
  CHECK(iiss::eval(ComparisonFunction::affine_exp(2.0, 1.0), 1.0) == doctest::Approx(2.0 * (std::exp(1.0) - 1.0)));
  CHECK(iiss::eval(ComparisonFunction::linear_exp(2.0, 1.0), 1.0) == doctest::Approx(2.0 * std::exp(1.0)));
  const auto pwl = ComparisonFunction::piecewise_linear({{0.0, 0.0}, {1.0, 2.0}, {3.0, 2.5}});
  CHECK(iiss::eval(pwl, 0.5) == doctest::Approx(1.0));
  CHECK(iiss::eval(pwl, 5.0) == doctest::Approx(3.0));
}

TEST_CASE("eval errors") {
  CHECK(error_of([] { (void)iiss::eval(ComparisonFunction::identity(), -1.0); }) == ErrorCode::NegativeArgument);
  const auto capped = ComparisonFunction::identity().with_cap(2.0);
  CHECK(iiss::eval(capped, 2.0) == 2.0);
  CHECK(error_of([&] { (void)iiss::eval(capped, 2.5); }) == ErrorCode::DomainExceeded);
  CHECK(error_of([] { (void)ComparisonFunction::power(-1.0, 2.0); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([] { (void)ComparisonFunction::piecewise_linear({{0.0, 0.0}, {1.0, 1.0}, {0.5, 2.0}}) ; }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("invert matches a bisection oracle") {
  CHECK(iiss::invert(ComparisonFunction::identity(), 5.0) == doctest::Approx(5.0));
  CHECK(std::abs(iiss::invert(ComparisonFunction::power(1.0, 2.0), 9.0, 1e-10) - 3.0) <= 1e-10);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ys(0.0, 20.0);
  for (const auto& f : catalog()) {
    CHECK(iiss::invert(f, 0.0) == 0.0);
    for (int i = 0; i < 20; ++i) {
      const double y = ys(rng);
      const double r = iiss::invert(f, y, 1e-12);
      const double ref = oracle::bisect_inverse([&](double x) { return iiss::eval(f, x); }, y, 1.0);
      CHECK(r == doctest::Approx(ref).epsilon(1e-8));
      CHECK(iiss::eval(f, r) == doctest::Approx(y).epsilon(1e-9));
    }
  }
  const auto capped = ComparisonFunction::identity().with_cap(1.0);
  CHECK(error_of([&] { (void)iiss::invert(capped, 2.0); }) == ErrorCode::NotReachable);
}

TEST_CASE("strict monotonicity on random pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rs(0.0, 10.0);
  for (const auto& f : catalog()) {
    CHECK(iiss::eval(f, 0.0) == 0.0);
    for (int i = 0; i < 100; ++i) {
      double a = rs(rng);
      double b = rs(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(iiss::eval(f, a) < iiss::eval(f, b));
    }
    CHECK(iiss::verify_class(f, 100.0).zero_at_origin);
    CHECK(iiss::verify_class(f, 100.0).strictly_increasing);
  }
}

TEST_CASE("composition evaluates as nested calls") {
  const auto f = ComparisonFunction::affine_exp(1.0, 0.3);
  const auto g = ComparisonFunction::power(2.0, 1.5);
  const auto fg = ComparisonFunction::compose(f, g);
  for (double r : {0.0, 0.1, 1.0, 2.5}) CHECK(iiss::eval(fg, r) == iiss::eval(f, iiss::eval(g, r)));
}

TEST_CASE("KL evaluation") {
  const auto id = ComparisonFunction::identity();
  const KLFunction beta(id, id);
  CHECK(iiss::kl_eval(beta, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(iiss::kl_eval(beta, 2.0, std::log(2.0)) == doctest::Approx(1.0));
  CHECK(iiss::kl_eval(beta, 0.0, 3.0) == 0.0);
  const KLFunction b2(ComparisonFunction::power(1.0, 0.5), ComparisonFunction::power(2.0, 2.0), 1.5);
  for (double r : {0.5, 1.0, 4.0}) {
    double prev = b2(r, 0.0);
    for (double t = 0.1; t < 10.0; t += 0.1) {
      const double v = b2(r, t);
      CHECK(v <= prev);
      prev = v;
    }
    CHECK(b2(r, 60.0) < 1e-20);
    CHECK(b2.at_time_zero()(r) == doctest::Approx(b2(r, 0.0)));
  }
}

TEST_CASE("delay shift majorizes") {
  const auto id = ComparisonFunction::identity();
  const KLFunction beta(id, id);
  const auto same = iiss::kl_delay_shift(beta, 0.0);
  for (double r = 0.0; r < 3.0; r += 0.5) {
    for (double t = 0.0; t < 3.0; t += 0.5) CHECK(same(r, t) == beta(r, t));
  }
  CHECK(iiss::kl_delay_shift(beta, 1.0)(1.0, 1.0) == doctest::Approx(1.0));
  const KLFunction b2(ComparisonFunction::power(1.0, 2.0), ComparisonFunction::power(1.0, 0.5));
  const auto shifted = iiss::kl_delay_shift(b2, 0.5);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double r = 0.25 * i;
      const double t = 0.25 * j;
      CHECK(shifted(r, t) >= b2(r, t));
      if (t >= 0.5) CHECK(shifted(r, t) >= b2(r, t - 0.5) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("majorizing KL fit") {
  std::vector<iiss::KLSample> s;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double r = 0.5 + i;
      const double t = 0.5 * j;
      s.push_back({r, t, r * std::exp(-t)});
    }
  }
  const auto fit = iiss::fit_kl(s);
  CHECK(fit.max_slack <= 1e-6);
  CHECK(fit.beta(1.0, 0.0) >= 1.0 - 1e-12);
  CHECK(fit.beta(1.0, 0.0) <= 1.0 + 1e-6);

  const std::vector<iiss::KLSample> zero{{0.0, 0.0, 0.0}};
  CHECK(iiss::fit_kl(zero).max_slack == doctest::Approx(0.0));

  std::vector<iiss::KLSample> fast;
  for (int i = 1; i <= 6; ++i) {
    for (int j = 0; j < 8; ++j) fast.push_back({0.3 * i, 0.4 * j, 0.3 * i * std::exp(-0.8 * j)});
  }
  const auto fit2 = iiss::fit_kl(fast);
  for (const auto& x : fast) CHECK(fit2.beta(x.r, x.t) >= x.value * (1.0 - 1e-12));

  const std::vector<iiss::KLSample> bad{{0.0, 0.0, 1.0}};
  CHECK(error_of([&] { (void)iiss::fit_kl(bad); }) == ErrorCode::NoMajorant);
}

TEST_CASE("nondecreasing envelopes") {
  const auto c = NondecreasingEnvelope::constant(2.0);
  CHECK(c(0.0) == 2.0);
  CHECK(c(10.0) == 2.0);
  const auto a = NondecreasingEnvelope::affine(1.0, 0.5);
  CHECK(a(2.0) == doctest::Approx(2.0));
  const auto lifted = NondecreasingEnvelope::lifted(a);
  CHECK(lifted(2.0) == doctest::Approx(2.0 + 2.0));
  const auto norm = NondecreasingEnvelope::normalized(NondecreasingEnvelope::affine(0.5, 1.0));
  CHECK(norm(1.0) == doctest::Approx(3.0));
  const auto p = NondecreasingEnvelope::power_plus_constant(1.0, 2.0, 0.5);
  double prev = 0.0;
  for (double r = 0.0; r < 10.0; r += 0.37) {
    CHECK(p(r) > 0.0);
    CHECK(p(r) >= prev);
    prev = p(r);
  }
  CHECK(error_of([] { (void)NondecreasingEnvelope::constant(0.0); }) == ErrorCode::InvalidArgument);
}
