#include <doctest.h>

#include <functional>

#include "wfduality/config.hpp"

using namespace wfd;
using doctest::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

json limit_doc() {
  return json::parse(R"({
    "kernel": "geometric",
    "lambda_s": {"atoms": [[0.5, 1.0]]},
    "w": 0.0,
    "lambda_c": {"atoms": [[0.5, 1.0]]},
    "c": 1.0,
    "sigma": 0.0
  })");
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("measure and kernel parsing round-trips") {
    const auto m = parse_measure(json::parse(R"({"atoms": [[0.2, 0.5], [0.7, 1.5]]})"), "m");
    CHECK(m.total_mass() == 2.0);
    CHECK(parse_measure(measure_to_json(m), "m").total_mass() == 2.0);
    const auto d = parse_measure(json::parse(R"j({"density": "beta(2,3)", "mass": 0.5, "nodes": 32})j"), "d");
    CHECK(d.kind() == FiniteMeasure::Kind::Density);
    CHECK(d.total_mass() == Approx(0.5).epsilon(1e-12));
    CHECK(parse_kernel("binary").kind() == SelectionKernel::Kind::Binary);
    const auto t = parse_kernel(json::parse(R"({"type": "table", "entries": [{"y": 0.5, "pmf": [0.5, 0.5]}]})"));
    CHECK(t.kind() == SelectionKernel::Kind::Table);
    CHECK(parse_kernel(kernel_to_json(t)).pmf(0.5, 2) == 0.5);
  }

  TEST_CASE("config errors") {
    auto bad_atom = limit_doc();
    bad_atom["lambda_s"] = json::parse(R"({"atoms": [[0.0, 1.0]]})");
    CHECK(code_of([&] { parse_limit(bad_atom); }) == ErrorCode::ConfigError);
    auto bad_c = limit_doc();
    bad_c["lambda_c"] = json::parse(R"({"atoms": [[0.0, 0.3], [0.5, 0.7]]})");
    CHECK(code_of([&] { parse_limit(bad_c); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { parse_kernel("poisson"); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { parse_measure(json::parse(R"({"density": "gamma"})"), "m"); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { parse_config(json::parse(R"({"experiment": "bogus"})")); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { parse_config(json::parse(R"({"seed": 3})")); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { load_config("/nonexistent/config.json"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("thresholds experiment payload") {
    json doc = {{"experiment", "thresholds"}, {"params", limit_doc()}};
    const auto cfg = parse_config(doc);
    const auto res = run_experiment(cfg);
    CHECK(res.verdict_ok);
    CHECK(res.payload["beta_star"].get<double>() == Approx(2.772588722239781).epsilon(1e-12));
    CHECK(res.payload["alpha_star"].get<double>() == Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(res.payload["classification"] == "SurvivalPossible");
    doc["params"]["lambda_c"] = json::parse(R"({"atoms": [[1.0, 1.0]]})");
    const auto inf = run_experiment(parse_config(doc));
    CHECK(inf.payload["beta_star"] == "inf");
  }

  TEST_CASE("moment experiment at t=0 gives z=0") {
    json doc = {{"experiment", "duality-moment"}, {"params", limit_doc()}, {"x", 0.5}, {"n", 2}, {"t", 0.0},
                {"replicates", 200}, {"workers", 2}};
    const auto res = run_experiment(parse_config(doc));
    CHECK(res.verdict_ok);
    const auto& r = res.payload["reports"][0];
    CHECK(r["z"].get<double>() == 0.0);
    CHECK(r["lhs"]["mean"].get<double>() == 0.25);
    CHECK(r["pass"] == true);
  }

  TEST_CASE("validation rejects theorem preconditions") {
    auto params = limit_doc();
    params["sigma"] = 0.5;
    const json thresholds = {{"experiment", "thresholds"}, {"params", params}};
    CHECK(code_of([&] { validate_config(parse_config(thresholds)); }) == ErrorCode::SigmaNotZero);
    auto heavy = limit_doc();
    heavy["lambda_s"] = json::parse(R"({"atoms": [[0.5, 40.0]]})");
    heavy["sigma"] = 1.0;
    const json conv = {{"experiment", "convergence"}, {"params", heavy}, {"Ns", {2, 4}}, {"x", 0.5}, {"n", 1},
                       {"t", 0.5}};
    CHECK(code_of([&] { validate_config(parse_config(conv)); }) == ErrorCode::InvalidScaling);
    const auto shipped = load_config(std::string(WFD_CONFIG_DIR) + "/ac1_moment_duality.json");
    CHECK_FALSE(validate_config(shipped).empty());
    CHECK(shipped.opts.seed == 20240601);
  }

  TEST_CASE("payloads are deterministic and independent of workers") {
    json doc = {{"experiment", "duality-moment"}, {"params", limit_doc()}, {"x", 0.5}, {"n", 2}, {"t", 0.3},
                {"dt", 0.01}, {"replicates", 2000}, {"seed", 9}, {"workers", 1}};
    const auto a = run_experiment(parse_config(doc)).payload.dump();
    const auto b = run_experiment(parse_config(doc)).payload.dump();
    doc["workers"] = 3;
    const auto c = run_experiment(parse_config(doc)).payload.dump();
    CHECK(a == b);
    CHECK(a == c);
  }

  TEST_CASE("envelope layout") {
    const json doc = {{"experiment", "thresholds"}, {"params", limit_doc()}};
    const auto cfg = parse_config(doc);
    const auto res = run_experiment(cfg);
    const auto env = make_envelope(cfg, res, 0.5);
    CHECK(env.contains("build"));
    CHECK(env["wall_time_seconds"] == 0.5);
    CHECK(env["config"]["experiment"] == "thresholds");
    CHECK(env["payload"] == res.payload);
  }
}
