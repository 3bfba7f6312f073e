#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "iiss/bounds.hpp"
#include "iiss/estimators.hpp"
#include "iiss/scenarios.hpp"

using namespace iiss;

namespace {

Vec s1(double v) { return Vec::Constant(1, v); }

const ComparisonFunction kId = ComparisonFunction::identity();
const MeasureSpec kIntegral = MeasureSpec::integral(kId);

SystemDef linear() { return make_scenario("linear_tv").system; }

SystemDef still() {
  OdeSystem sys;
  sys.rhs = [](double, const Vec& x, const Vec&) -> Vec { return Vec::Zero(x.size()); };
  return sys;
}

SampleGrid small_grid(std::uint64_t seed = 1, double horizon = 5.0, double level = 1.0) {
  GridConfig cfg;
  cfg.n_t0 = 4;
  cfg.n_x0 = 8;
  cfg.n_u = 8;
  cfg.horizon = horizon;
  cfg.input_level = level;
  cfg.step = 1e-2;
  cfg.seed = seed;
  return make_grid(cfg, kIntegral);
}

KLFunction exp_decay(double rate, double factor = 1.0) {
  return KLFunction(ComparisonFunction::power(1.0, 1.0 / rate), ComparisonFunction::power(factor, rate));
}

}  // namespace

TEST_CASE("tolerance rule") {
  CHECK(within_tolerance(1.0, 1.0));
  CHECK(within_tolerance(1.0 + 1e-7, 1.0));
  CHECK_FALSE(within_tolerance(1.0 + 1e-5, 1.0));
  CHECK(within_tolerance(1e300, kInfinity));
  CHECK_FALSE(within_tolerance(kInfinity, kInfinity));
}

TEST_CASE("grid construction") {
  const auto g = small_grid(3);
  CHECK(g.t0_values.size() == 4);
  CHECK(g.t0_values.front() == 0.0);
  CHECK(g.x0_count() == 8);
  CHECK(g.inputs.size() == 8);
  for (const auto& x : g.x0_values) CHECK(x.norm() <= 1.0 + 1e-12);
  for (const auto& u : g.inputs) CHECK(input_measure(u, kIntegral) <= 1.0 + 1e-9);
  for (double t : g.t0_values) CHECK(t <= 50.0);
  const auto h = small_grid(3);
  CHECK(h.t0_values == g.t0_values);
  for (std::size_t i = 0; i < g.inputs.size(); ++i) CHECK(g.inputs[i] == h.inputs[i]);
}

TEST_CASE("0-GUAS examples") {
  const auto g = small_grid();
  const auto ok = check_0guas(linear(), exp_decay(1.0, 1.0 + 1e-6), g);
  CHECK(ok.pass);
  CHECK(ok.margin >= 0.0);
  const auto bad = check_0guas(linear(), exp_decay(2.0), g);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.worst_case);
  CHECK(bad.worst_case->lhs > bad.worst_case->rhs);
  CHECK(bad.worst_case->t - bad.worst_case->t0 < 2.0);
  auto origin = g;
  origin.x0_values = {s1(0.0)};
  CHECK(check_0guas(still(), exp_decay(5.0), origin).pass);
}

TEST_CASE("ISS and UGB examples") {
  const auto g = small_grid();
  const auto iss = check_iss(linear(), exp_decay(1.0), kId, kIntegral, g);
  CHECK(iss.pass);
  CHECK(iss.label == "iISS");
  auto origin = g;
  origin.x0_values = {s1(0.0)};
  CHECK(check_iss(still(), exp_decay(1.0), kId, kIntegral, origin).pass);
  const auto ugs = check_ugb(linear(), kId, kId, 0.0, kIntegral, g);
  CHECK(ugs.pass);
  CHECK(ugs.property == Property::UGS_UBEBS0);
  const auto sup = check_iss(linear(), exp_decay(1.0), kId, MeasureSpec::sup(), g);
  CHECK(sup.label == "ISS");
}

TEST_CASE("counterexample fails iISS and passes UBEBS") {
  const auto sc = make_scenario("counterexample26");
  auto g = small_grid(4, 2.0, 0.1);
  g.step_for = [sc](const Signal& u) { return recommended_step(sc, u); };
  const auto iss = check_iss(sc.system, exp_decay(1.0), kId, kIntegral, g);
  CHECK_FALSE(iss.pass);
  REQUIRE(iss.worst_case);
  CHECK(iss.worst_case->lhs > iss.worst_case->rhs);
  const auto ugb = check_ugb(sc.system, kId, kId, 2.0, kIntegral, g);
  CHECK(ugb.pass);
  CHECK(ugb.property == Property::UGB_UBEBS);
}

TEST_CASE("reports are reproducible") {
  const auto a = check_ugb(linear(), kId, kId, 0.0, kIntegral, small_grid(9));
  const auto b = check_ugb(linear(), kId, kId, 0.0, kIntegral, small_grid(9));
  CHECK(a.margin == b.margin);
  CHECK(a.csv() == b.csv());
  CHECK(a.seed == 9);
}

TEST_CASE("meta property on the linear system") {
  const auto m = check_iiss_meta(linear(), exp_decay(1.0), kId, kIntegral, small_grid());
  CHECK(m.iss.pass);
  CHECK(m.guas.pass);
  CHECK(m.ugb.pass);
  CHECK(m.holds);
}

TEST_CASE("characterization checks") {
  C123Params p;
  p.ubrs_T = 5.0;
  p.ubrs_r = 1.0;
  p.ubrs_s = 1.0;
  p.ubrs_C = 2.0;
  p.ucep_h = 5.0;
  p.ucep_eps = 1.0;
  p.ucep_delta = 0.5;
  const GammaOf gamma_eta = [](double, double eta, double) { return eta; };
  const auto tr = uuag_horizon(kId, kId, KLFunction(kId, kId), gamma_eta, 1.0, 0.5, 1e-6);
  p.uuag_nu = kId;
  p.uuag_r = 1.0;
  p.uuag_eps = 0.5;
  p.uuag_T = tr.T;
  const auto r = check_characterization_c123(linear(), kIntegral, small_grid(), p);
  CHECK(r[0].pass);
  CHECK(r[0].property == Property::UBRS);
  CHECK(r[1].pass);
  CHECK(r[2].pass);
  C123Params z = p;
  z.ubrs_C = 1.0;
  CHECK(check_characterization_c123(still(), kIntegral, small_grid(), z)[0].pass);
}

TEST_CASE("continuity modulus of the linear system") {
  ModulusGrid mg{{0.5, 1.0}, {0.0, 1.0}, {0.0, 0.01, 0.1}};
  ModulusConfig cfg;
  cfg.samples_per_cell = 6;
  cfg.step = 1e-2;
  cfg.seed = 2;
  const auto m = estimate_continuity_modulus(linear(), kIntegral, mg, cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        const double s = mg.levels[k];
        CHECK(m.at(i, j, k) <= s + 1e-5);
        CHECK(m.at(i, j, k) >= 0.9 * s * (1.0 - std::exp(-mg.ells[i])));
        if (i > 0) CHECK(m.at(i, j, k) >= m.at(i - 1, j, k));
        if (j > 0) CHECK(m.at(i, j, k) >= m.at(i, j - 1, k));
        if (k > 0) CHECK(m.at(i, j, k) >= m.at(i, j, k - 1));
        CHECK(m.at(i, j, k) >= m.raw_at(i, j, k));
      }
    }
  }
  CHECK(m.noise_floor <= 1e-9);
}

TEST_CASE("falsification search") {
  const auto sc = make_scenario("counterexample26");
  FalsifyConfig cfg;
  cfg.step_for = [sc](const Signal& u) { return recommended_step(sc, u); };
  const auto res = falsify_iiss(sc.system, kIntegral, kId, {0.01}, cfg);
  const auto* w = res.first_witness();
  REQUIRE(w != nullptr);
  CHECK(w->delta == 0.01);
  CHECK(w->measure < 0.01);
  CHECK(w->norm > 0.5);
  CHECK(w->t <= 1.0);
  REQUIRE(w->input);
  CHECK(input_measure(*w->input, kIntegral) < 0.01);
  const auto tr = simulate(sc.system, 0.0, s1(0.0), *w->input, 1.0, recommended_step(sc, *w->input));
  CHECK(tr.sup_norm() > 0.5);

  FalsifyConfig lin;
  lin.step = 1e-2;
  CHECK(falsify_iiss(linear(), kIntegral, kId, {0.1, 0.01}, lin).exhausted());
  CHECK(falsify_iiss(still(), kIntegral, kId, {0.1}, lin).exhausted());
}

TEST_CASE("UCEP delta routes") {
  UcepRoutes ugs;
  ugs.alpha = kId;
  ugs.rho = kId;
  const auto a = find_ucep_delta(ugs, 1.0);
  CHECK(a.delta == doctest::Approx(0.5));
  CHECK(a.route == "ugs");
  UcepRoutes gr;
  gr.k = 1.0;
  gr.L = 0.0;
  gr.T = 1.0;
  const auto b = find_ucep_delta(gr, 1.0);
  CHECK(b.delta == doctest::Approx(0.5));
  CHECK(b.eta <= 0.5 + 1e-15);
  double prev = 1.0;
  for (double eps = 0.9; eps > 1e-4; eps *= 0.5) {
    const double d = find_ucep_delta(ugs, eps).delta;
    CHECK(d < prev);
    prev = d;
  }
  CHECK(error_of([] { (void)find_ucep_delta(UcepRoutes{}, 1.0); }) == ErrorCode::NoRoute);

  const auto sys = linear();
  UcepVerification v;
  v.sys = &sys;
  v.spec = kIntegral;
  v.grid = small_grid();
  v.h = 5.0;
  const auto checked = find_ucep_delta(ugs, 1.0, &v);
  REQUIRE(checked.verification);
  CHECK(checked.verified());
}

TEST_CASE("sampled envelope checks") {
  const auto lin = make_scenario("linear_tv");
  EnvelopeConfig cfg;
  cfg.samples = 2000;
  const auto& meta = *bounds_meta(lin.system);
  CHECK(check_growth_envelope(lin.system, *meta.envelope_N, *meta.gain_gamma, cfg).pass);
  CHECK_FALSE(check_growth_envelope(lin.system, NondecreasingEnvelope::constant(0.1), kId, cfg).pass);

  const auto bl = make_scenario("bilinear_scalar");
  CHECK(check_bilinear_envelope(bl.system, 1.0, 1.0, kId, cfg).pass);
  CHECK_FALSE(check_bilinear_envelope(bl.system, 0.5, 0.5, kId, cfg).pass);

  const auto dl = make_scenario("delay_linear");
  const auto& dm = *bounds_meta(dl.system);
  const double delta = find_r2_delta(dl.system, 10.0, 1e-3);
  CHECK(delta > 0.0);
  CHECK(delta <= 1e-3 + 1e-9);
  const double k = claim_k_constant(*dm.envelope_N, *dm.gain_gamma, delta, 10.0);
  EnvelopeConfig c2;
  c2.samples = 10000;
  CHECK(check_claim_constant(dl.system, 1e-3, k, kId, c2).pass);
}

TEST_CASE("right-hand side evaluation") {
  const auto dl = make_scenario("delay_linear");
  const auto psi = HistorySegment::uniform(1.0, 11, [](double s) { return s1(1.0 + s); });
  const Vec f = evaluate_rhs(dl.system, 0.0, psi, s1(0.5));
  // -a x(0) + b x(-1) + mu = -1 + 0 + 0.5
  CHECK(f(0) == doctest::Approx(-0.5));
  const auto bl = make_scenario("bilinear_scalar");
  const Vec g = evaluate_rhs(bl.system, 0.0, HistorySegment::constant(0.0, s1(2.0), 2), s1(0.5));
  CHECK(g(0) == doctest::Approx(1.5));
}

TEST_CASE("parallel reduction is deterministic") {
  auto g = small_grid(17);
  g.threads = 1;
  const auto a = check_ugb(linear(), kId, kId, 0.0, kIntegral, g);
  g.threads = 4;
  const auto b = check_ugb(linear(), kId, kId, 0.0, kIntegral, g);
  CHECK(a.margin == b.margin);
  CHECK(a.csv() == b.csv());
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}
