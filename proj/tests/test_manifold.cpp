#include <doctest.h>

#include <memory>

#include "slowfast/errors.hpp"
#include "slowfast/manifold.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/scenario.hpp"

using namespace slowfast;

namespace {

PathView make_path(const SystemModel& m, double t_min, double t_max, std::uint64_t seed) {
  return PathView(std::make_shared<const NoisePath>(
      NoisePath::sample(m.cov1, m.cov2, 0, Grid::covering(m.dt(), t_min, t_max), seed, 11)));
}

SystemModel decoupled() {
  SystemModel m = thermoelastic_scenario().model;
  m.F = Nonlinearity::zero(Role::Slow);
  m.G = Nonlinearity::zero(Role::Fast);
  m.params.lipschitz = 0.0;
  m.params.mu = 1.0;
  m.finalize();
  return m;
}

}  // namespace

TEST_CASE("decoupled manifold is the stationary OU convolution") {
  const SystemModel m = decoupled();
  ManifoldOptions opts;
  opts.tol = 1e-12;
  opts.truncation_tol = 1e-12;
  const double t_back = static_cast<double>(backward_cells(m.params, m.dt(), opts.truncation_tol)) * m.dt();
  const PathView path = make_path(m, -t_back - 1.0, 1.0, 4);
  const ManifoldMap H(m, path, 0.0, opts);
  const Eigen::VectorXd x0 = thermoelastic_scenario().initial_x();
  const Eigen::VectorXd h = H.evaluate(x0);
  const Eigen::VectorXd ou = ou_convolution(m.B, m.params.sigma2, m.params.epsilon, path, 0.0, t_back);
  CHECK((h - ou).norm() <= 1e-10 * (1.0 + ou.norm()));
  // Independent of x when nothing couples the components.
  CHECK((H.evaluate(2.0 * x0) - h).norm() <= 1e-12 * (1.0 + h.norm()));
  CHECK(H.lip_bound() == 0.0);
}

TEST_CASE("backward solve contracts at the rate M") {
  const SystemModel m = thermoelastic_scenario().model.with_epsilon(0.1);
  const PathView path = make_path(m, -5.0, 1.0, 5);
  const BackwardSolution sol = solve_backward(m, thermoelastic_scenario().initial_x(), std::int64_t{0}, path);
  const double M = compute_contraction_constant(m.params);
  CHECK(sol.iterations > 2);
  CHECK(sol.residual <= 1e-8);
  REQUIRE_FALSE(sol.ratios.empty());
  for (double r : sol.ratios) CHECK(r <= M + 0.05);
  CHECK((sol.x_anchor() - thermoelastic_scenario().initial_x()).norm() == 0.0);
}

TEST_CASE("iteration cap raises a convergence error with the history") {
  const SystemModel m = thermoelastic_scenario().model.with_epsilon(0.1);
  const PathView path = make_path(m, -5.0, 1.0, 5);
  ManifoldOptions opts;
  opts.max_iterations = 2;
  opts.tol = 1e-14;
  try {
    solve_backward(m, thermoelastic_scenario().initial_x(), std::int64_t{0}, path, opts);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.residuals.size() == 2);
  }
}

TEST_CASE("too short a window is reported") {
  const SystemModel m = thermoelastic_scenario().model.with_epsilon(0.1);
  const PathView path = make_path(m, -0.1, 1.0, 5);
  CHECK_THROWS_AS(solve_backward(m, thermoelastic_scenario().initial_x(), std::int64_t{0}, path), WindowExhaustedError);
}

TEST_CASE("graph is invariant under one step of the full scheme") {
  const SystemModel m = thermoelastic_scenario().model;
  const PathView path = make_path(m, -3.0, 1.0, 6);
  ManifoldOptions opts;
  opts.tol = 1e-11;
  const ManifoldMap H(m, path, 0.0, opts);
  Eigen::VectorXd x = thermoelastic_scenario().initial_x();
  Eigen::VectorXd y = H.evaluate(x);
  const Stepper st(m, m.dt());
  auto ws = st.workspace();
  for (int n = 0; n < 5; ++n) {
    st.step(x, y, path, n, ws);
    const Eigen::VectorXd on = H.evaluate_at(x, n + 1);
    CHECK((on - y).norm() <= 1e-9 * (1.0 + y.norm()));
  }
}

TEST_CASE("shift property") {
  const SystemModel m = thermoelastic_scenario().model;
  const PathView path = make_path(m, -4.0, 1.0, 7);
  const ShiftReport r = verify_shift_property(m, path, thermoelastic_scenario().initial_x(), 0.0, -0.5);
  CHECK(r.pass);
  CHECK(r.discrepancy <= r.threshold);
}

TEST_CASE("empirical Lipschitz ratio respects the bound") {
  const SystemModel m = thermoelastic_scenario().model.with_epsilon(0.1);
  const PathView path = make_path(m, -3.0, 1.0, 8);
  const ManifoldMap H(m, path, 0.0);
  CHECK(H.lip_certified());
  const double emp = H.probe_lipschitz(40, 5.0, 3);
  CHECK(emp > 0.0);
  CHECK(emp <= H.lip_bound());
  CHECK(H.memo_size() > 0);
}

TEST_CASE("memoized evaluation returns identical values") {
  const SystemModel m = thermoelastic_scenario().model;
  const PathView path = make_path(m, -3.0, 1.0, 9);
  const ManifoldMap H(m, path, 0.0);
  const Eigen::VectorXd x0 = thermoelastic_scenario().initial_x();
  const Eigen::VectorXd a = H.evaluate(x0);
  const std::size_t size = H.memo_size();
  CHECK(H.evaluate(x0) == a);
  CHECK(H.memo_size() == size);
}

TEST_CASE("random bound vanishes without noise") {
  SystemModel m = thermoelastic_scenario().model;
  m.params.sigma1 = 0.0;
  m.params.sigma2 = 0.0;
  const std::int64_t cells = random_bound_cells(m, m.dt(), {});
  const PathView path = make_path(m, -(cells + 2) * m.dt(), 1.0, 1);
  CHECK(compute_R(m, path).value == 0.0);
  SystemModel noisy = thermoelastic_scenario().model;
  CHECK(compute_R(noisy, path).value > 0.0);
}

TEST_CASE("tracking point attracts the orbit inside the envelope") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const SystemModel& m = cfg.model;
  const double dt = m.dt();
  const TrackingOptions topts;
  const PathView path = make_path(m, -(tracking_backward_cells(m, dt, topts) + 1) * dt,
                                  (tracking_forward_cells(m, dt, topts) + 1) * dt, 10);
  const TrackingSolution ts = solve_tracking(m, cfg.initial_x(), cfg.initial_y(), path, topts);
  CHECK(ts.decay_ok);
  CHECK(ts.worst_envelope_ratio <= 1.0);
  CHECK(ts.contraction == doctest::Approx(compute_contraction_constant(m.params)));
  // The tracking point lies on the graph at time 0.
  ManifoldOptions mopts;
  mopts.tol = 1e-11;
  const ManifoldMap H(m, path, 0.0, mopts);
  CHECK((H.evaluate(ts.x_tilde0) - ts.y_tilde0).norm() <= 1e-8 * (1.0 + ts.y_tilde0.norm()));
  // Correction decays to the rounding floor.
  CHECK(ts.correction_norm(ts.n_end) <= 1e-9);
}

TEST_CASE("reduced integration policies agree") {
  const ScenarioConfig cfg = thermoelastic_scenario();
  const SystemModel& m = cfg.model;
  const PathView path = make_path(m, -3.0, 1.0, 12);
  ManifoldOptions opts;
  opts.tol = 1e-11;
  const ManifoldMap H(m, path, 0.0, opts);
  const Trajectory a = integrate_reduced(m, cfg.initial_x(), H, path, 0.0, 0.1, FastSlotPolicy::Propagated);
  const Trajectory b = integrate_reduced(m, cfg.initial_x(), H, path, 0.0, 0.1, FastSlotPolicy::Exact);
  CHECK(sup_distance(a, b) <= 1e-8);
  const PathView other = make_path(m, -3.0, 1.0, 13);
  CHECK_THROWS_AS(integrate_reduced(m, cfg.initial_x(), H, other, 0.0, 0.1), StructuralError);
}
