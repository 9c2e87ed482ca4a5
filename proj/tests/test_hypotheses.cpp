#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/hypotheses.hpp"
#include "slowfast/scenario.hpp"

using namespace slowfast;

TEST_CASE("contraction constant and epsilon0 against the bisection oracle") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const SystemParams& p = cfg.model.params;
  CHECK(p.gamma1 == 1.0);
  CHECK(p.gamma2 == 2.0);
  CHECK(p.lipschitz == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(p.mu == doctest::Approx(0.5 * (2.0 - 0.5 * std::sqrt(2.0))).epsilon(1e-15));
  const double eps0 = compute_epsilon0(p);
  const double ref = oracle::epsilon0_bisection(p.lipschitz, p.gamma1, p.gamma2, p.mu);
  CHECK(std::abs(eps0 - ref) <= 1e-12 * ref);
  for (double e : {0.025, 0.05, 0.1}) {
    SystemParams q = p;
    q.epsilon = e;
    CHECK(compute_contraction_constant(q) ==
          doctest::Approx(oracle::contraction(e, p.lipschitz, p.gamma1, p.gamma2, p.mu)).epsilon(1e-15));
  }
}

TEST_CASE("admissibility window") {
  SystemParams p;
  p.gamma1 = 1.0;
  p.gamma2 = 2.0;
  p.lipschitz = 0.5;
  p.mu = 0.75;
  p.epsilon = 0.05;
  CHECK_NOTHROW(check_admissible(p));
  p.epsilon = 10.0;
  CHECK_THROWS_AS(check_admissible(p), AdmissibilityError);
  p.epsilon = 0.05;
  p.mu = 1.6;
  CHECK_THROWS_AS(compute_epsilon0(p), AdmissibilityError);
  p.mu = 0.75;
  p.lipschitz = 2.5;
  CHECK_THROWS_AS(check_admissible(p), AdmissibilityError);
}

TEST_CASE("manifold Lipschitz bound") {
  SystemParams p;
  p.gamma1 = 1.0;
  p.gamma2 = 2.0;
  p.lipschitz = 0.5;
  p.mu = 0.75;
  p.epsilon = 0.05;
  const double m = oracle::contraction(0.05, 0.5, 1.0, 2.0, 0.75);
  CHECK(manifold_lipschitz_bound(p) == doctest::Approx(0.5 / (1.25 * (1.0 - m))).epsilon(1e-15));
}

TEST_CASE("default scenario passes every hypothesis") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const HypothesisReport r = check_hypotheses(cfg.model, &cfg.observation, {0.1, 0.05, 0.025});
  CHECK(r.overall);
  for (const char* name : {"H1", "H2", "H3", "H4", "H5"}) {
    REQUIRE(r.find(name) != nullptr);
    CHECK(r.find(name)->pass);
  }
  CHECK(r.h1_norm == "euclidean");
  CHECK(r.mu_upper == doctest::Approx(2.0 - 0.5 * std::sqrt(2.0)));
  REQUIRE(r.epsilons.size() == 3);
  for (const auto& e : r.epsilons) CHECK(e.admissible);
}

TEST_CASE("slow fast gap violation fails H4") {
  ScenarioConfig cfg = thermoelastic_scenario();
  std::string text = thermoelastic_yaml();
  text.replace(text.find("kappa: 2.0"), 10, "kappa: 0.4");
  cfg = parse_scenario(text);
  const HypothesisReport r = check_hypotheses(cfg.model, &cfg.observation, {0.05});
  CHECK_FALSE(r.overall);
  REQUIRE(r.find("H4") != nullptr);
  CHECK_FALSE(r.find("H4")->pass);
}

TEST_CASE("declared Lipschitz constant below the probed one fails H3") {
  ScenarioConfig cfg = thermoelastic_scenario();
  SystemModel m = cfg.model;
  m.F = Nonlinearity::sine_saturating(Role::Slow, 0.5, 0.1);
  m.finalize();
  m.params.lipschitz = 0.5 * std::sqrt(2.0);
  const HypothesisReport r = check_hypotheses(m, nullptr, {0.05});
  REQUIRE(r.find("H3") != nullptr);
  CHECK_FALSE(r.find("H3")->pass);
}

TEST_CASE("lipschitz probe of a linear map") {
  ProbeOptions opts;
  opts.pairs = 500;
  const auto probe = probe_lipschitz(
      [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        Eigen::VectorXd out(1);
        out[0] = 0.5 * x[0] - 0.25 * y[0];
        return out;
      },
      1, 1, opts);
  CHECK(probe.max_ratio <= 0.5 + 1e-12);
  CHECK(probe.max_ratio > 0.2);
  CHECK(probe.zero_at_origin);
}

TEST_CASE("energy norm of a wave block exponential is non-increasing") {
  Eigen::Matrix2d m;
  m << 0.0, 3.0, -3.0, -1.0;
  double prev = 1.0;
  for (double t = 0.1; t < 5.0; t += 0.1) {
    const double n = energy_norm_exp(m, t);
    CHECK(n <= prev + 1e-12);
    prev = n;
  }
}
