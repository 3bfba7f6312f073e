#include "doctest.h"

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "iiss/bounds.hpp"
#include "iiss/scenarios.hpp"
#include "iiss/sweeps.hpp"

using namespace iiss;

TEST_CASE("delay Gronwall bound") {
  GronwallParams p;
  p.k = 1.0;
  p.energy = 2.0;
  CHECK(gronwall_delay_bound(p) == 2.0);
  GronwallParams q;
  q.eta = 1.0;
  q.L = 1.0;
  q.elapsed = 1.0;
  CHECK(gronwall_delay_bound(q) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("semilinear Gronwall bound") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    GronwallParams p;
    p.eta = v(rng);
    p.k = v(rng);
    p.L = v(rng);
    p.elapsed = v(rng);
    p.energy = v(rng);
    CHECK(gronwall_semilinear_bound(p) == gronwall_delay_bound(p));
  }
  GronwallParams p;
  p.k = 1.0;
  p.energy = 1.0;
  p.M = 2.0;
  p.w = 0.5;
  p.elapsed = 1.0;
  CHECK(gronwall_semilinear_bound(p) == doctest::Approx(2.0 * std::exp(0.5)));
  GronwallParams bad;
  bad.M = 0.5;
  CHECK(error_of([&] { (void)gronwall_semilinear_bound(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("history Gronwall bound") {
  CHECK(gronwall_history_bound(0.0, 1.0, 0.0, 3.0) == 0.0);
  CHECK(gronwall_history_bound(1.0, 1.0, 1.0, 1.0) == doctest::Approx(2.0 * std::exp(1.0)));
  // psi' = L * max psi satisfies psi(l) <= K + L int ||psi_s|| ds with equality.
  const double K = 0.7;
  const double L = 1.3;
  const double h = 1e-4;
  double psi = K;
  double integral = 0.0;
  for (double t = 0.0; t < 2.0; t += h) {
    CHECK(psi <= K + L * integral + 1e-9);
    CHECK(psi <= gronwall_history_bound(K, L, 0.0, t) + 1e-9);
    integral += psi * h;
    psi = K + L * integral;
  }
}

TEST_CASE("claim constant") {
  CHECK(claim_k_constant(NondecreasingEnvelope::constant(2.0), ComparisonFunction::identity(), 0.5, 7.0) ==
        doctest::Approx(10.0));
  CHECK(claim_k_constant(NondecreasingEnvelope::constant(1.0), ComparisonFunction::identity(), 1.0, 0.0) ==
        doctest::Approx(3.0));
  CHECK(error_of([] {
          (void)claim_k_constant(NondecreasingEnvelope::constant(1.0), ComparisonFunction::identity(), 0.0, 1.0);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("envelope form conversions") {
  const ProductForm pf{NondecreasingEnvelope::constant(1.0), ComparisonFunction::identity()};
  const auto af = to_additive_form(pf);
  CHECK(af.N_hat(3.0) == doctest::Approx(1.5));
  CHECK(af.gamma_hat(2.0) == doctest::Approx(2.0));
  CHECK(pf(1.0, 2.0) == doctest::Approx(3.0));
  CHECK(af(1.0, 2.0) == doctest::Approx(3.5));
  const auto back = to_product_form(af);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double r = 0.1 * i;
      const double mu = 0.1 * j;
      CHECK(pf(r, mu) <= af(r, mu) + 1e-12);
      CHECK(af(r, mu) <= back(r, mu) + 1e-12);
    }
  }
}

TEST_CASE("bilinear constants") {
  BilinearParams p;
  p.K = 1.0;
  p.d = 1.0;
  CHECK(bilinear_ubebs_bound(p, 0.0, 0.0) == doctest::Approx(0.5));
  BilinearParams q;
  q.K = 0.0;
  q.d = 0.0;
  CHECK(error_of([&] { (void)bilinear_constants(q); }) == ErrorCode::ZeroGain);
  CHECK(bilinear_ubebs_bound(q, 2.0, 5.0) == doctest::Approx(2.5));
  BilinearParams m;
  m.M = 1.5;
  m.K = 0.4;
  m.d = 2.0;
  const auto c = bilinear_constants(m);
  CHECK(c.c == doctest::Approx(1.125));
  CHECK(c.alpha(3.0) == doctest::Approx(4.5));
  const double r = 0.8;
  CHECK(c.rho(r) == doctest::Approx(1.5 * 1.5 * (std::exp(2 * 1.5 * 0.4 * r) - 1) / 2 + 1.5 * 2.0 * r * std::exp(1.5 * 0.4 * r)));
  for (double x : {0.0, 0.3, 2.0}) CHECK(bilinear_ubebs_bound(m, x, 0.0) == x * x / 2 + m.M * m.M / 2);
}

TEST_CASE("bound calculators are monotone") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> v(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    GronwallParams p;
    p.eta = v(rng);
    p.k = v(rng);
    p.L = v(rng);
    p.elapsed = v(rng);
    p.energy = v(rng);
    p.M = 1.0 + v(rng);
    p.w = v(rng);
    const double d0 = gronwall_delay_bound(p);
    const double s0 = gronwall_semilinear_bound(p);
    for (double GronwallParams::*field : {&GronwallParams::eta, &GronwallParams::k, &GronwallParams::L,
                                          &GronwallParams::elapsed, &GronwallParams::energy,
                                          &GronwallParams::M, &GronwallParams::w}) {
      GronwallParams b = p;
      b.*field += 0.1;
      CHECK(gronwall_delay_bound(b) >= d0);
      CHECK(gronwall_semilinear_bound(b) >= s0);
    }
    BilinearParams bp;
    bp.M = 1.0 + v(rng);
    bp.K = v(rng);
    bp.d = 0.01 + v(rng);
    const double x = v(rng);
    const double e = v(rng);
    CHECK(bilinear_ubebs_bound(bp, x + 0.1, e) >= bilinear_ubebs_bound(bp, x, e));
    CHECK(bilinear_ubebs_bound(bp, x, e + 0.1) >= bilinear_ubebs_bound(bp, x, e));
  }
}

TEST_CASE("horizon recipe trace") {
  const auto id = ComparisonFunction::identity();
  const KLFunction beta(id, id);
  const GammaOf gamma_eta = [](double, double eta, double) { return eta; };
  const double tol = 1e-9;
  const auto tr = uuag_horizon(id, id, beta, gamma_eta, 1.0, 0.5, tol);
  CHECK(tr.psi_r == doctest::Approx(1.0));
  CHECK(tr.r_tilde == doctest::Approx(2.0));
  CHECK(tr.eps_tilde == doctest::Approx(0.5));
  CHECK(tr.T_tilde > std::log(8.0));
  CHECK(tr.T_tilde <= std::log(8.0) + tol + 1e-12);
  CHECK(tr.eta == doctest::Approx(0.25));
  CHECK(tr.gamma == doctest::Approx(0.25));
  CHECK(tr.N == 4);
  CHECK(tr.T == doctest::Approx(4.0 * std::log(8.0)).epsilon(1e-8));
  CHECK(beta(tr.r_tilde, tr.T_tilde) < tr.eps_tilde / 2.0);
  CHECK(static_cast<double>(tr.N) * tr.gamma >= tr.psi_r);

  const auto eq = uuag_horizon(id, id, beta, gamma_eta, 2.0, 2.0, tol);
  CHECK(eq.eps_tilde == doctest::Approx(2.0));
  CHECK(eq.T_tilde > std::log(2.0 * eq.r_tilde / 2.0));
  CHECK(eq.T_tilde <= std::log(2.0 * eq.r_tilde / 2.0) + tol + 1e-12);
  CHECK(std::isfinite(eq.T));

  const KLFunction flat(ComparisonFunction::power(1.0, 1.0), ComparisonFunction::power(1.0, 1.0), 1.0);
  CHECK(error_of([&] { (void)uuag_horizon(id, id, flat, gamma_eta, 1.0, 0.5, tol, 1.0); }) ==
        ErrorCode::HorizonUnbounded);
}

TEST_CASE("bilinear domination sweep") {
  const auto sc = make_scenario("bilinear_scalar");
  BilinearSweepConfig cfg;
  cfg.cases = 50;
  cfg.seed = 5;
  BilinearParams bp;
  bp.K = 1.0;
  bp.d = 1.0;
  const auto rep = bilinear_domination_sweep(sc.system, bp, cfg, sc.name);
  CHECK(rep.cases == 50);
  CHECK(rep.violations == 0);
  CHECK(rep.min_margin >= -1e-6);
  CHECK(rep.pass());
}

TEST_CASE("semilinear Gronwall domination") {
  SemilinearSystem lin;
  lin.a_matrix = Mat::Constant(1, 1, -1.0);
  lin.nonlinearity = [](double, const Vec&, const Vec& u) -> Vec { return u; };
  GronwallSweepConfig cfg;
  cfg.cases = 100;
  cfg.k = 1.0;
  cfg.L = 0.0;
  cfg.M = 1.0;
  cfg.w = 0.0;
  cfg.seed = 13;
  const auto rep = gronwall_domination_sweep(lin, cfg, "scalar_semilinear");
  CHECK(rep.violations == 0);
  CHECK(rep.cases == 100);
}
