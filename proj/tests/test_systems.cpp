#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "iiss/linalg.hpp"
#include "iiss/scenarios.hpp"
#include "iiss/systems.hpp"
#include "oracles.hpp"

using namespace iiss;

namespace {

Vec s1(double v) { return Vec::Constant(1, v); }

OdeSystem decay_ode() {
  OdeSystem sys;
  sys.rhs = [](double, const Vec& x, const Vec& u) -> Vec { return -x + u; };
  return sys;
}

}  // namespace

TEST_CASE("ode integrator against closed forms") {
  const auto tr = integrate_ode(decay_ode(), 0.0, s1(1.0), Signal::zero(1), 1.0, 1e-3);
  CHECK(std::abs(tr.states().back()(0) - std::exp(-1.0)) <= 1e-9);
  CHECK(tr.grid().front() == 0.0);
  const auto still = integrate_ode(decay_ode(), 0.0, s1(0.0), Signal::zero(1), 3.0, 1e-2);
  for (const auto& x : still.states()) CHECK(x(0) == 0.0);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 3.0);
    const double t0 = 0.37 * i;
    const auto tr2 = integrate_ode(decay_ode(), t0, s1(0.5), u, t0 + 4.0, 1e-2);
    for (double t = t0; t <= t0 + 4.0; t += 0.25) {
      CHECK(std::abs(tr2.state_at(t)(0) - oracle::linear_decay_solution(1.0, 0.5, u, t0, t)) <= 1e-8);
    }
  }
}

TEST_CASE("counterexample is large for small inputs") {
  const auto sc = make_scenario("counterexample26");
  const auto u = Signal::pulse(s1(0.1), 1.0);
  const auto tr = simulate(sc.system, 0.0, s1(0.0), u, 1.0, recommended_step(sc, u));
  CHECK(tr.sup_norm() > 0.5);
  const auto z = simulate(sc.system, 0.0, s1(1.0), Signal::zero(1), 1.0, sc.default_step);
  CHECK(std::abs(z.states().back()(0) - std::exp(-1.0)) <= 1e-6);
}

TEST_CASE("counterexample stays below two plus the initial norm") {
  const auto sc = make_scenario("counterexample26");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> x(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    auto u = oracle::random_scalar_signal(rng, 3.0).scaled(0.05);
    const double x0 = x(rng);
    const auto tr = simulate(sc.system, 0.0, s1(x0), u, 4.0, recommended_step(sc, u));
    CHECK(tr.sup_norm() <= 2.0 + std::abs(x0) + 1e-6);
  }
}

TEST_CASE("delay integrator by the method of steps") {
  DelaySystem sys;
  sys.tau = 1.0;
  sys.rhs = [](double, const HistoryView& h, const Vec&) -> Vec { return h(-1.0); };
  const auto tr = integrate_delay(sys, 0.0, HistorySegment::constant(1.0, s1(1.0)), Signal::zero(1), 2.0, 1e-2);
  CHECK(std::abs(tr.state_at(1.0)(0) - 2.0) <= 1e-6);
  // second interval: x = 1 + t + (t-1)^2 / 2 on [1, 2]
  CHECK(std::abs(tr.state_at(2.0)(0) - 3.5) <= 1e-6);
  CHECK(tr.history_span() == 1.0);
  CHECK(tr.state_at(-0.5)(0) == doctest::Approx(1.0));

  DelaySystem lin;
  lin.tau = 1.0;
  lin.rhs = [](double, const HistoryView& h, const Vec& u) -> Vec { return -h.current() + 0.5 * h(-1.0) + u; };
  const auto zero = integrate_delay(lin, 0.0, HistorySegment::constant(1.0, s1(0.0)), Signal::zero(1), 3.0, 1e-2);
  for (const auto& x : zero.states()) CHECK(x(0) == 0.0);
  CHECK(error_of([&] {
          (void)integrate_delay(lin, 0.0, HistorySegment::constant(1.0, s1(0.0)), Signal::zero(1), 1.0, 0.5);
        }) == ErrorCode::StepTooLarge);
}

TEST_CASE("zero delay matches the ode integrator") {
  const auto d = as_delay(decay_ode());
  std::mt19937_64 rng(12);
  for (int i = 0; i < 5; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 2.0);
    const auto a = integrate_ode(decay_ode(), 0.0, s1(0.3), u, 3.0, 1e-3);
    const auto b = integrate_delay(d, 0.0, HistorySegment::constant(0.0, s1(0.3)), u, 3.0, 1e-3);
    for (double t = 0.0; t <= 3.0; t += 0.1) CHECK(std::abs(a.state_at(t)(0) - b.state_at(t)(0)) <= 1e-8);
  }
}

TEST_CASE("semilinear integrator") {
  SemilinearSystem sys;
  sys.a_matrix = Mat::Constant(1, 1, -1.0);
  sys.nonlinearity = [](double, const Vec&, const Vec& u) -> Vec { return u; };
  const auto tr = integrate_semilinear(sys, 0.0, s1(1.0), Signal::constant(s1(1.0)), 2.0, 1e-2);
  CHECK(std::abs(tr.states().back()(0) - 1.0) <= 1e-8);

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  Mat a(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a(i, j) = g(rng);
  }
  SemilinearSystem lin;
  lin.dim = 4;
  lin.a_matrix = a;
  lin.nonlinearity = [](double, const Vec& x, const Vec&) -> Vec { return Vec::Zero(x.size()); };
  Vec x0(4);
  x0 << 1.0, -0.5, 0.25, 2.0;
  const auto tl = integrate_semilinear(lin, 0.0, x0, Signal::zero(1), 1.0, 0.1);
  CHECK((tl.states().back() - oracle::expm(a) * x0).norm() <= 1e-8);

  const auto z = integrate_semilinear(sys, 0.0, s1(0.0), Signal::zero(1), 1.0, 1e-2);
  for (const auto& x : z.states()) CHECK(x(0) == 0.0);
}

TEST_CASE("matrix exponential against Eigen") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int n : {1, 2, 5, 9}) {
    for (double scale : {1e-3, 1.0, 30.0}) {
      Mat a(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = scale * g(rng);
      }
      const Mat ref = oracle::expm(a);
      CHECK((expm(a) - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
    }
  }
  Mat a(2, 2);
  a << -1.0, 4.0, 0.0, -1.0;
  const auto [e, phi] = exp_and_phi(a, 0.3);
  CHECK((e - oracle::expm(0.3 * a)).norm() <= 1e-12);
  // phi = A^{-1} (e^{Ah} - I) for invertible A
  CHECK((phi - a.inverse() * (e - Mat::Identity(2, 2))).norm() <= 1e-12);
}

TEST_CASE("semigroup envelopes") {
  const auto s = semigroup_bound(Mat::Constant(1, 1, -1.0), 10.0, 1000);
  CHECK(s.M == doctest::Approx(1.0));
  CHECK(s.rate == doctest::Approx(1.0));
  CHECK(s.decaying);

  Mat nn(2, 2);
  nn << -1.0, 4.0, 0.0, -1.0;
  const auto b = semigroup_bound(nn, 10.0, 10000);
  CHECK(b.rate == doctest::Approx(1.0));
  CHECK(b.M > 1.0);
  double dense = 1.0;
  for (int i = 0; i <= 100000; ++i) {
    const double t = 10.0 * i / 100000.0;
    dense = std::max(dense, spectral_norm(oracle::expm(nn * t)) * std::exp(t));
  }
  CHECK(b.M <= dense * (1.0 + 1e-9));
  CHECK(b.M >= dense * (1.0 - 1e-4));
  for (int i = 0; i <= 10000; ++i) {
    const double t = 10.0 * i / 10000.0;
    CHECK(spectral_norm(oracle::expm(nn * t)) <= b.envelope(t) * (1.0 + 1e-12));
  }

  Mat grow(1, 1);
  grow << 0.5;
  const auto g = semigroup_bound(grow, 5.0, 100);
  CHECK_FALSE(g.decaying);
  CHECK(g.envelope(2.0) >= std::exp(1.0) * (1.0 - 1e-12));
}

TEST_CASE("heat semidiscretization envelope") {
  const auto sc = make_scenario("heat1d");
  const auto& sl = std::get<SemilinearSystem>(sc.system);
  const double h = 1.0 / 33.0;
  const double rate = (2.0 / (h * h)) * (1.0 - std::cos(std::numbers::pi * h));
  Eigen::SelfAdjointEigenSolver<Mat> eig(sl.a_matrix);
  CHECK(-eig.eigenvalues().maxCoeff() == doctest::Approx(rate).epsilon(1e-12));
  const auto b = semigroup_bound(sl.a_matrix, 1.0, 200);
  CHECK(b.M >= 1.0);
  CHECK(b.M <= 1.0 + 1e-9);
  CHECK(std::abs(b.rate - rate) <= 1e-9 * rate);
}

TEST_CASE("scenario catalog") {
  for (const auto& name : scenario_names()) {
    const auto sc = make_scenario(name);
    CHECK(sc.name == name);
    CHECK_FALSE(sc.default_inputs.empty());
    const Vec x0 = Vec::Zero(static_cast<Eigen::Index>(state_dim(sc.system)));
    const auto tr = simulate(sc.system, 0.0, x0, Signal::zero(input_dim(sc.system)), 1.0, sc.default_step);
    CHECK(tr.sup_norm() == 0.0);
  }
  CHECK(error_of([] { (void)make_scenario("nope"); }) == ErrorCode::UnknownScenario);
  CHECK(error_of([] { (void)make_scenario("linear_tv", {{"bogus", 1.0}}); }) == ErrorCode::InvalidArgument);
  const auto bl = make_scenario("bilinear_scalar");
  const auto tr = simulate(bl.system, 0.0, s1(1.0), Signal::zero(1), 2.0, bl.default_step);
  CHECK(std::abs(tr.states().back()(0) - std::exp(-2.0)) <= 1e-8);
  CHECK(smooth_cutoff(0.5) == 1.0);
  CHECK(smooth_cutoff(2.5) == 0.0);
  CHECK(smooth_cutoff(1.5) == doctest::Approx(0.5));
}

TEST_CASE("escape guard") {
  OdeSystem blow;
  blow.rhs = [](double, const Vec& x, const Vec&) -> Vec { return x.array().square().matrix(); };
  CHECK(error_of([&] { (void)integrate_ode(blow, 0.0, s1(1.0), Signal::zero(1), 2.0, 1e-3); }) ==
        ErrorCode::NonFinite);
  IntegrateOptions opts;
  opts.throw_on_escape = false;
  const auto tr = integrate_ode(blow, 0.0, s1(1.0), Signal::zero(1), 2.0, 1e-3, opts);
  CHECK(tr.escaped());
  CHECK(tr.escape_time() < 1.01);
  CHECK(tr.escape_time() > 0.99);
}

TEST_CASE("fourth-order convergence") {
  const auto sc = make_scenario("linear_tv", {{"a1", 0.5}});
  const auto u = Signal::pulse(s1(0.7), 1.3);
  double errs[3];
  const double ref = simulate(sc.system, 0.0, s1(1.0), u, 3.0, 1e-4).states().back()(0);
  const double hs[3] = {0.1, 0.05, 0.025};
  for (int i = 0; i < 3; ++i) errs[i] = std::abs(simulate(sc.system, 0.0, s1(1.0), u, 3.0, hs[i]).states().back()(0) - ref);
  CHECK(std::log2(errs[0] / errs[1]) > 3.5);
  CHECK(std::log2(errs[1] / errs[2]) > 3.5);
  CHECK(integrator_order(sc.system) == 4);
}

TEST_CASE("step-doubling error estimate") {
  const auto sc = make_scenario("linear_tv", {{"a1", 0.5}});
  const auto u = Signal::pulse(s1(0.7), 1.3);
  const auto tr = simulate_with_error(sc.system, 0.0, s1(1.0), u, 3.0, 0.05);
  const double ref = simulate(sc.system, 0.0, s1(1.0), u, 3.0, 1e-4).states().back()(0);
  const double actual = std::abs(tr.states().back()(0) - ref);
  CHECK(std::isfinite(tr.step_stats().error_estimate));
  CHECK(tr.step_stats().error_estimate >= 0.2 * actual);
  CHECK(tr.step_stats().error_estimate <= 5.0 * actual + 1e-15);
}

TEST_CASE("history restart reproduces the trajectory") {
  const auto sc = make_scenario("delay_linear");
  const auto& d = std::get<DelaySystem>(sc.system);
  const auto u = Signal::pulse(s1(0.4), 2.2);
  IntegrateOptions opts;
  opts.forced_nodes = {1.7};
  const auto full = integrate_delay(d, 0.0, HistorySegment::constant(1.0, s1(1.0)), u, 4.0, sc.default_step, opts);
  const auto mid = full.history_at(1.7);
  const auto rest = integrate_delay(d, 1.7, mid, u, 4.0, sc.default_step);
  CHECK(std::abs(rest.states().back()(0) - full.states().back()(0)) <= 1e-12);
}
