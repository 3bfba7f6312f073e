#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "iiss/json_io.hpp"
#include "iiss/pipelines.hpp"
#include "iiss/scenarios.hpp"
#include "oracles.hpp"

using namespace iiss;

TEST_CASE("non-finite numbers round-trip") {
  CHECK(number(1.5) == Json(1.5));
  CHECK(number(kInfinity) == Json("inf"));
  CHECK(number(-kInfinity) == Json("-inf"));
  CHECK(std::isnan(to_double(number(std::nan("")))));
  CHECK(to_double(Json("inf")) == kInfinity);
  CHECK(to_double(Json(2)) == 2.0);
}

TEST_CASE("function mini-language and JSON") {
  CHECK(parse_function("identity")(3.0) == 3.0);
  CHECK(parse_function("power:1:2")(3.0) == doctest::Approx(9.0));
  CHECK(parse_function("affine_exp:2:1")(1.0) == doctest::Approx(2.0 * (std::exp(1.0) - 1.0)));
  CHECK(parse_function("pwl:0,0;1,2;3,2.5")(2.0) == doctest::Approx(2.25));
  CHECK(error_of([] { (void)parse_function("cube"); }) == ErrorCode::InvalidArgument);
  const auto f = ComparisonFunction::compose(
      ComparisonFunction::inverse(ComparisonFunction::power(2.0, 3.0)),
      ComparisonFunction::sum({ComparisonFunction::identity(), ComparisonFunction::linear_exp(1.0, 0.5)}))
                     .with_cap(100.0);
  const Json j = to_json(f);
  CHECK(j.at("kind") == "compose");
  const auto g = function_from_json(Json::parse(j.dump()));
  for (double r : {0.0, 0.3, 1.0, 7.0}) CHECK(g(r) == f(r));
  CHECK(g.domain_cap() == f.domain_cap());
  CHECK(to_json(ComparisonFunction::power(1.0, 2.0)) == Json::parse(R"({"kind":"power","a":1.0,"p":2.0})"));
}

TEST_CASE("KL mini-language and JSON") {
  const auto b = parse_kl("exp:2:0.5");
  CHECK(b(1.0, 0.0) == doctest::Approx(2.0));
  CHECK(b(1.0, 2.0) == doctest::Approx(2.0 * std::exp(-1.0)));
  const auto p = parse_kl("power:1:2:1");
  CHECK(p(3.0, 0.0) == doctest::Approx(9.0));
  const auto j = to_json(b);
  CHECK(j.contains("alpha1"));
  CHECK(j.contains("alpha2"));
  CHECK(j.contains("scale"));
  const auto c = kl_from_json(Json::parse(j.dump()));
  CHECK(c(1.3, 0.7) == b(1.3, 0.7));
}

TEST_CASE("measure spec round-trip") {
  for (const char* text : {"sup", "sup_seq:0.5,1,2", "integral:identity", "integral_seq:power:1:2@1,2,3",
                           "windowed:identity@0.5"}) {
    const auto spec = parse_spec(text);
    const auto back = spec_from_json(Json::parse(to_json(spec).dump()));
    CHECK(spec_to_string(back) == spec_to_string(spec));
    CHECK(spec_to_string(parse_spec(spec_to_string(spec))) == spec_to_string(spec));
  }
  CHECK(error_of([] { (void)parse_spec("weird"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("signal round-trip") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto u = oracle::random_scalar_signal(rng, 4.0);
    CHECK(signal_from_json(Json::parse(to_json(u).dump())) == u);
  }
  const auto c = parse_signal("const:0.1:1.0");
  CHECK(c(0.5)(0) == 0.1);
  CHECK(c(1.5)(0) == 0.0);
  CHECK(parse_signal("zero:2").dim() == 2);
  CHECK(parse_signal("const:1,2").tail()(1) == 2.0);
  const Json j = Json::parse(R"({"dim": 1, "breakpoints": [1.0, 2.0], "values": [[1.0],[2.0]], "tail": [0.0]})");
  const auto s = signal_from_json(j);
  CHECK(s(1.5)(0) == 2.0);
  const auto path = (std::filesystem::temp_directory_path() / "iiss_steps_test.json").string();
  write_file_atomic(path, j.dump());
  CHECK(parse_signal("steps:" + path) == s);
  std::remove(path.c_str());
  CHECK(error_of([] { (void)parse_signal("steps:/nonexistent/x.json"); }) == ErrorCode::Io);
  const auto csv = signal_csv(s, 2.0, 0.5);
  CHECK(csv.rfind("t,u_0\n", 0) == 0);
}

TEST_CASE("trajectory csv") {
  const auto sc = make_scenario("linear_tv");
  const auto tr = simulate(sc.system, 0.0, Vec::Constant(1, 1.0), Signal::zero(1), 0.01, 1e-3);
  const auto csv = trajectory_csv(tr);
  CHECK(csv.rfind("t,x_0\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == tr.grid().size() + 1);
}

TEST_CASE("simulate pipeline") {
  const Json cfg = Json::parse(R"({"scenario":"counterexample26","u":"const:0.1:1.0","x0":0,"t_end":1})");
  const auto r = run_pipeline("simulate", cfg);
  CHECK(r.exit_code == 0);
  CHECK(to_double(r.report.at("result").at("max_norm")) > 0.5);
  CHECK(r.report.at("tool") == "iiss-lab");
  CHECK(r.report.at("version") == version_string());
  CHECK(r.report.at("config").contains("step"));
  CHECK(r.report.contains("seed"));
  CHECK(r.csv.rfind("t,x_0\n", 0) == 0);
}

TEST_CASE("measure pipeline") {
  const auto r = run_pipeline("measure", Json::parse(R"({"signal":"zero","spec":"integral:identity"})"));
  CHECK(r.exit_code == 0);
  CHECK(to_double(r.report.at("result").at("value")) == 0.0);
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    (void)run_pipeline("measure", Json::parse(R"({"signal":"zero","bogus":1})"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK(error_of([] { (void)run_pipeline("fly", Json::object()); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([] { (void)run_pipeline("simulate", Json::parse(R"({"scenario":"nope"})")); }) ==
        ErrorCode::UnknownScenario);
}

TEST_CASE("bound-check pipeline is byte reproducible") {
  const Json cfg = Json::parse(R"({"scenario":"bilinear_scalar","cases":20,"seed":42})");
  const auto a = run_pipeline("bound-check", cfg);
  const auto b = run_pipeline("bound-check", cfg);
  CHECK(a.report.dump() == b.report.dump());
  CHECK(a.exit_code == 0);
  CHECK(a.report.at("result").at("violations") == 0);
  CHECK(a.report.at("seed") == 42);
}

TEST_CASE("estimate, falsify and horizon pipelines") {
  const auto e = run_pipeline(
      "estimate", Json::parse(R"({"scenario":"linear_tv","property":"ugb","n_t0":2,"n_x0":4,"n_u":4,"horizon":3})"));
  CHECK(e.exit_code == 0);
  CHECK(e.csv.rfind("report,t0,", 0) == 0);
  const auto f = run_pipeline("falsify", Json::parse(R"({"scenario":"counterexample26","deltas":[0.1]})"));
  CHECK(f.exit_code == 1);
  const auto h = run_pipeline("horizon", Json::parse(R"({"r":1,"eps":0.5,"tol":1e-9})"));
  CHECK(h.exit_code == 0);
  CHECK(h.report.at("result").at("N") == 4);
}

TEST_CASE("escape is reported as a numerical failure") {
  const auto r = run_pipeline(
      "simulate", Json::parse(R"({"scenario":"bilinear_scalar","u":"const:5","x0":1,"t_end":10})"));
  CHECK(r.exit_code == 3);
  REQUIRE(r.report.at("result").contains("escape"));
  CHECK(to_double(r.report.at("result").at("escape").at("time")) < 10.0);
}
