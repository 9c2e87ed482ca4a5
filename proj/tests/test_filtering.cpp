#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/filtering.hpp"

using namespace slowfast;

TEST_CASE("log weight increment") {
  Eigen::VectorXd h(2), dr(2);
  h << 1.0, -2.0;
  dr << 0.3, 0.1;
  CHECK(ks_log_weight_step(h, dr, 0.01) == doctest::Approx(0.3 - 0.2 - 0.5 * 5.0 * 0.01).epsilon(1e-15));
  CHECK_THROWS_AS(ks_log_weight_step(h, Eigen::VectorXd::Zero(3), 0.01), StructuralError);
}

TEST_CASE("dictionary order and constants") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const TestDictionary d = TestDictionary::for_space(cfg.model.A.space(), 16, 2.0);
  CHECK(d.size() == 16);
  CHECK(d.coords() == std::vector<int>{0, 2, 4, 6, 8, 10, 12, 14});
  Eigen::VectorXd x = Eigen::VectorXd::Zero(32);
  for (int i = 0; i < 32; ++i) x[i] = 0.1 * (i + 1);
  Eigen::VectorXd all(16);
  d.eval_all(x, all);
  CHECK(all[0] == doctest::Approx(std::tanh(0.1 / 2.0)));
  CHECK(all[7] == doctest::Approx(std::tanh(1.5 / 2.0)));
  CHECK(all[8] == doctest::Approx(std::tanh(0.05) * std::tanh(0.15)));
  CHECK(all[14] == doctest::Approx(std::tanh(0.05) * std::tanh(1.5 / 2.0)));
  CHECK(all[15] == doctest::Approx(std::tanh(0.15) * std::tanh(0.25)));
  for (int i = 0; i < 16; ++i) CHECK(all[i] == d.eval(i, x));
  CHECK(d.weight(0) == 0.5);
  CHECK(d.weight(15) == std::ldexp(1.0, -16));
  CHECK(d.lipschitz(0) == 0.5);
  CHECK(d.lipschitz(8) == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(d.tail_bound() == std::ldexp(1.0, -15));
  CHECK_THROWS_AS(TestDictionary({0, 1}, 5, 1.0), StructuralError);
}

TEST_CASE("distance d") {
  const TestDictionary d({0, 1, 2}, 3, 1.0);
  FilterSnapshot a, b;
  a.pi = {0.5, 0.0, 1.0};
  b.pi = {0.0, 0.0, 0.0};
  CHECK(distance_d(a, b, d) == doctest::Approx(0.25 + 0.125));
  CHECK(distance_d(a, a, d) == 0.0);
}

TEST_CASE("observation increments carry h dt on top of W3") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const auto tw = support::twin_experiment(cfg, 20, 3);
  CHECK(tw.obs.cells() == 20);
  CHECK(tw.obs.dim3() == 8);
  const Eigen::VectorXd h0 = cfg.observation(tw.truth.x.col(0), tw.truth.y.col(0));
  const Eigen::VectorXd c0 = tw.obs.coarse_increment(0, 1);
  CHECK(c0.size() == 8);
  CHECK(tw.obs.coarse_increment(0, 5).isApprox(tw.obs.increments.leftCols(5).rowwise().sum()));
  CHECK_THROWS_AS(tw.obs.coarse_increment(4, 5), DomainError);
  (void)h0;
}

TEST_CASE("filter mean of the linear Gaussian case matches the Kalman filter") {
  const ScenarioConfig cfg = load_scenario(support::config_path("linear_gaussian.yaml"));
  const int coarsen = cfg.filter.coarsen;
  const double coarse_dt = cfg.model.dt() * coarsen;
  const std::vector<double> times{0.25, 0.5};
  const auto tw = support::twin_experiment(cfg, static_cast<std::int64_t>(std::llround(0.5 / cfg.model.dt())), 21);
  FilterSettings fs;
  fs.particles = 4000;
  fs.coarsen = coarsen;
  fs.times = times;
  fs.seed = 5;
  const TestDictionary dict({0, 1, 2}, 3, 1.0);
  const FilterEstimate est =
      run_filter(cfg.model, cfg.observation, dict, tw.obs, cfg.initial_x(), cfg.initial_y(), FilterMode::Full, fs);
  std::vector<int> at;
  for (double t : times) at.push_back(static_cast<int>(std::llround(t / coarse_dt)));
  const auto ref = support::linear_gaussian_reference(cfg, tw.obs, coarsen, at);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto& s = est.snapshots[k];
    CHECK(std::abs(s.mean_x[0] - ref.mean[k][0]) <= 3.0 * s.mean_x_se[0]);
    CHECK(s.ess > 0.01 * fs.particles);
  }
}

TEST_CASE("filter output does not depend on the thread count") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const auto tw = support::twin_experiment(cfg, 40, 4);
  const TestDictionary dict = TestDictionary::for_space(cfg.model.A.space(), 16, 1.0);
  FilterSettings fs;
  fs.particles = 24;
  fs.times = {0.1, 0.2};
  fs.threads = 1;
  const auto one = run_filter_pair(cfg.model, cfg.observation, dict, tw.obs, cfg.initial_x(), cfg.initial_y(), fs);
  fs.threads = 3;
  const auto three = run_filter_pair(cfg.model, cfg.observation, dict, tw.obs, cfg.initial_x(), cfg.initial_y(), fs);
  std::ostringstream a, b;
  one.first.write_csv(a);
  one.second.write_csv(a);
  three.first.write_csv(b);
  three.second.write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, 12) == "t,pi_phi1,pi");
  // Reduced particles start on the graph, so the two filters differ.
  CHECK(distance_d(one.first.snapshots[1], one.second.snapshots[1], dict) > 0.0);
}

TEST_CASE("degenerate weights raise") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  auto tw = support::twin_experiment(cfg, 10, 4);
  tw.obs.increments.array() += 500.0;
  const TestDictionary dict = TestDictionary::for_space(cfg.model.A.space(), 16, 1.0);
  FilterSettings fs;
  fs.particles = 400;
  fs.times = {0.05};
  CHECK_THROWS_AS(
      run_filter(cfg.model, cfg.observation, dict, tw.obs, cfg.initial_x(), cfg.initial_y(), FilterMode::Full, fs),
      DegeneracyError);
}

TEST_CASE("filter input validation") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const auto tw = support::twin_experiment(cfg, 10, 4);
  const TestDictionary dict = TestDictionary::for_space(cfg.model.A.space(), 16, 1.0);
  FilterSettings fs;
  fs.particles = 4;
  fs.times = {1.0};
  CHECK_THROWS_AS(
      run_filter(cfg.model, cfg.observation, dict, tw.obs, cfg.initial_x(), cfg.initial_y(), FilterMode::Full, fs),
      StructuralError);
  fs.times = {0.0125};
  CHECK_THROWS_AS(
      run_filter(cfg.model, cfg.observation, dict, tw.obs, cfg.initial_x(), cfg.initial_y(), FilterMode::Full, fs),
      DomainError);
}

TEST_CASE("martingale report at small size") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  MartingaleSettings ms;
  ms.samples = 2000;
  ms.particles = 200;
  ms.outer_paths = 50;
  const MartingaleReport r = verify_martingale_bounds(cfg.model, cfg.observation, cfg.initial_x(), cfg.initial_y(), ms);
  CHECK(r.gamma_samples == 2000);
  CHECK(std::abs(r.gamma_mean - 1.0) <= 3.0 * r.gamma_se);
  CHECK(r.bound == doctest::Approx(std::exp(6.0 * 8.0)));
  CHECK(r.inverse_moment > 0.0);
  CHECK(r.inverse_pass);
}

TEST_CASE("scaling experiment table") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const TestDictionary dict = TestDictionary::for_space(cfg.model.A.space(), 16, 1.0);
  ScalingSettings ss;
  ss.epsilons = {0.1, 0.05};
  ss.times = {0.5};
  ss.particles = 50;
  ss.replications = 2;
  const ScalingResult r = epsilon_scaling_experiment(cfg.model, cfg.observation, dict, cfg.initial_x(), cfg.initial_y(), ss);
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.replications + row.degenerate == 2);
    CHECK(row.d_samples.size() == static_cast<std::size_t>(row.replications));
    CHECK(row.moment.size() == 16);
    const double mu = cfg.model.params.mu;
    CHECK(row.envelope == doctest::Approx(std::pow(std::exp(-4.0 * mu * 0.5 * 3.0 / row.epsilon) +
                                                       row.epsilon / (4.0 * mu * 3.0), 0.25)));
  }
  std::ostringstream csv;
  r.write_csv(csv);
  CHECK(csv.str().substr(0, 10) == "epsilon,t,");
}
