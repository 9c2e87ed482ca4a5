#include <doctest.h>

#include <string>

#include "slowfast/errors.hpp"
#include "slowfast/scenario.hpp"

using namespace slowfast;

namespace {

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

ParseError parse_failure(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a parse error");
  return ParseError("", "", 0);
}

}  // namespace

TEST_CASE("built-in scenario shapes") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  CHECK(cfg.model.dim_x() == 32);
  CHECK(cfg.model.dim_y() == 16);
  CHECK(cfg.observation.dim3() == 8);
  CHECK(cfg.observation.c_h() == doctest::Approx(std::sqrt(8.0)));
  CHECK(cfg.model.params.epsilon == 0.05);
  CHECK(cfg.model.dt() == doctest::Approx(0.005));
  CHECK(cfg.epsilon_list == std::vector<double>{0.1, 0.05, 0.025});
  CHECK(cfg.filter.dictionary_size == 16);
  CHECK(cfg.run.seed == 20240601u);
  CHECK(cfg.model.B.block(2)(0, 0) == -18.0);
  const Eigen::VectorXd x = cfg.initial_x();
  CHECK(x[0] == 1.0);
  CHECK(x[3] == 0.5);
  CHECK(cfg.initial_y()[3] == 0.25);
}

TEST_CASE("missing sigma2 names the field") {
  const auto e = parse_failure(replaced(thermoelastic_yaml(), "  sigma2: 0.5\n", ""));
  CHECK(e.field == "system.sigma2");
  CHECK(std::string(e.what()).find("system.sigma2") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their line") {
  const auto e = parse_failure(replaced(thermoelastic_yaml(), "  sigma1: 0.5\n", "  sigma1: 0.5\n  sigma3: 0.5\n"));
  CHECK(e.field == "system.sigma3");
  CHECK(e.line == 8);
  const auto top = parse_failure(thermoelastic_yaml() + "extra: 1\n");
  CHECK(top.field == "extra");
}

TEST_CASE("bad values") {
  CHECK(parse_failure(replaced(thermoelastic_yaml(), "epsilon: 0.05", "epsilon: -1")).field == "scales.epsilon");
  CHECK(parse_failure(replaced(thermoelastic_yaml(), "sigma1: 0.5", "sigma1: loud")).field == "system.sigma1");
  CHECK(parse_failure(replaced(thermoelastic_yaml(), "kind: wave", "kind: beam")).field == "system.slow.kind");
  CHECK(parse_failure(replaced(thermoelastic_yaml(), "kind: sine-of-slow", "kind: cosine")).field == "filter.h.kind");
  CHECK(parse_failure(replaced(thermoelastic_yaml(), "dim3: 8", "dim3: 40")).field == "filter.h");
  CHECK(parse_failure("system: [1, 2\n").line > 0);
}

TEST_CASE("explicit mu and gamma1") {
  auto text = replaced(thermoelastic_yaml(), "mu: auto", "mu: 0.5");
  text = replaced(text, "gamma1: auto", "gamma1: 1.5");
  const ScenarioConfig cfg = parse_scenario(text);
  CHECK_FALSE(cfg.mu_auto);
  CHECK_FALSE(cfg.gamma1_auto);
  CHECK(cfg.model.params.mu == 0.5);
  CHECK(cfg.model.params.gamma1 == 1.5);
}

TEST_CASE("user table terms") {
  const std::string text = R"(system:
  slow: {modes: 2, kind: diagonal, entries: [-1.0, -2.0]}
  fast: {modes: 2, kappa: 3.0}
  F:
    kind: user-table
    lipschitz: 0.2
    terms:
      - {out: 1, amplitude: 0.2, activation: linear, inputs: [{slot: y, index: 0, weight: 1.0}]}
  sigma1: 0.1
  sigma2: 0.1
scales: {epsilon: 0.1}
filter:
  h: {kind: bounded-linear, slope: 2.0, clip: 3.0}
  dim3: 2
)";
  const ScenarioConfig cfg = parse_scenario(text);
  CHECK(cfg.model.params.gamma1 == 2.0);
  CHECK(cfg.model.params.gamma2 == 3.0);
  CHECK(cfg.model.params.lipschitz == 0.2);
  Eigen::VectorXd x(2), y(2);
  x << 1.0, 1.0;
  y << 2.0, 0.0;
  const Eigen::VectorXd f = cfg.model.F(x, y);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(0.4));
  const Eigen::VectorXd h = cfg.observation(x * 2.0, y);
  CHECK(h[0] == 3.0);
  CHECK(parse_failure(replaced(text, "slot: y", "slot: z")).field == "system.F.terms[0].inputs[0].slot");
  CHECK(parse_failure(replaced(text, "index: 0", "index: 5")).field == "system");
}

TEST_CASE("config hash is FNV-1a") {
  CHECK(config_hash("") == 0xcbf29ce484222325ull);
  CHECK(config_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(config_hash(thermoelastic_yaml()) != config_hash(thermoelastic_yaml() + " "));
}

TEST_CASE("missing file") { CHECK_THROWS_AS(load_scenario("/nonexistent/config.yaml"), ParseError); }
