#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/spectral.hpp"

using namespace slowfast;

namespace {

std::vector<double> squares(int n) {
  std::vector<double> v;
  for (int k = 1; k <= n; ++k) v.push_back(static_cast<double>(k * k));
  return v;
}

// int_0^1 e^{M s} ds by composite Simpson on the rotation oracle.
Eigen::Matrix2d phi1_quadrature(double w, double g, double h) {
  const int n = 2000;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  for (int i = 0; i <= n; ++i) {
    const double c = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += c * oracle::damped_rotation(w, g, h * i / n);
  }
  return acc / (3.0 * n);
}

}  // namespace

TEST_CASE("space layout offsets") {
  const SpaceSpec s(SpaceName::H1, {2, 1, 2});
  CHECK(s.dim() == 5);
  CHECK(s.block_offset(0) == 0);
  CHECK(s.block_offset(1) == 2);
  CHECK(s.block_offset(2) == 3);
  CHECK(SpaceSpec::uniform(SpaceName::H2, 4, 1).dim() == 4);
  CHECK_THROWS_AS(SpaceSpec(SpaceName::H1, {3}), StructuralError);
}

TEST_CASE("wave block exponential matches the damped rotation") {
  const auto op = SpectralOperator::wave(SpaceName::H1, squares(16), 1.0);
  for (int b = 0; b < 16; ++b) {
    const double w = b + 1.0;
    for (double t : {0.0, 1e-6, 0.013, 0.5, 1.0, 3.7}) {
      const Eigen::Matrix2d ref = oracle::damped_rotation(w, 1.0, t);
      CHECK((op.block_exp(b, t) - ref).norm() <= 1e-13 * (1.0 + ref.norm()));
    }
  }
}

TEST_CASE("undamped wave block is an isometry") {
  const auto op = SpectralOperator::wave(SpaceName::H1, squares(4), 0.0);
  for (double t : {0.1, 2.0, 50.0}) CHECK(op.exp_norm(t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("diagonal exponential") {
  const auto op = SpectralOperator::diagonal(SpaceName::H2, {-2.0, -8.0});
  Eigen::VectorXd v(2);
  v << 1.0, 3.0;
  const Eigen::VectorXd out = op.apply_exp(0.25, v);
  CHECK(out[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(3.0 * std::exp(-2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(op.semigroup_apply(0.1, HVector::zero(SpaceSpec::uniform(SpaceName::H1, 2, 1))), StructuralError);
}

TEST_CASE("semigroup composition on random draws") {
  const auto wave = SpectralOperator::wave(SpaceName::H1, squares(16), 1.0);
  const auto heat = SpectralOperator::diagonal(SpaceName::H2, [] {
    std::vector<double> v;
    for (int k = 1; k <= 16; ++k) v.push_back(-2.0 * k * k);
    return v;
  }());
  const GaussianSource src(3, make_stream_id(StreamRole::kTest, 0, 0));
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const SpectralOperator& op = i % 2 ? heat : wave;
    const double t = src.uniform(i, 0, 0) * 2.0;
    const double s = src.uniform(i, 0, 1) * 2.0;
    Eigen::VectorXd v(op.space().dim());
    src.fill(i, 1, v.data(), static_cast<std::size_t>(v.size()));
    const Eigen::VectorXd a = op.apply_exp(t + s, v);
    const Eigen::VectorXd b = op.apply_exp(t, op.apply_exp(s, v));
    worst = std::max(worst, (a - b).norm() / std::max(a.norm(), 1e-300));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("phi1 scalar and 2x2") {
  CHECK(phi1_scalar(0.0) == 1.0);
  CHECK(phi1_scalar(1e-9) == doctest::Approx(1.0 + 0.5e-9).epsilon(1e-15));
  CHECK(phi1_scalar(-3.0) == doctest::Approx(-std::expm1(-3.0) / 3.0).epsilon(1e-14));
  for (double w : {1.0, 4.0, 16.0}) {
    const double h = 0.01;
    Eigen::Matrix2d m;
    m << 0.0, w, -w, -1.0;
    const Eigen::Matrix2d ref = phi1_quadrature(w, 1.0, h);
    CHECK((phi1_2x2(m * h) - ref).norm() <= 1e-10);
  }
}

TEST_CASE("propagator step and back step are inverse") {
  const auto op = SpectralOperator::wave(SpaceName::H1, squares(6), 1.0);
  const Propagator p(op, 1.0, 0.01);
  const GaussianSource src(5, 1);
  Eigen::VectorXd v(12), f(12), xi(12), out(12), back(12);
  src.fill(0, 0, v.data(), 12);
  src.fill(0, 1, f.data(), 12);
  src.fill(0, 2, xi.data(), 12);
  p.step(v, f, 0.01, xi, out);
  p.back_step(out, f, 0.01, xi, back);
  CHECK((back - v).norm() <= 1e-13 * v.norm());
}

TEST_CASE("diagonal noise factor reproduces the exact OU step variance") {
  const double a = -40.0, dt = 0.005, k = 0.25;
  const auto op = SpectralOperator::diagonal(SpaceName::H2, {a});
  const Propagator p(op, 1.0, dt);
  const double dw = std::sqrt(k * dt);
  Eigen::VectorXd out(1);
  p.noise_apply(&dw, 1.0, out);
  CHECK(out[0] * out[0] == doctest::Approx(oracle::ou_step_variance(a, std::sqrt(k), dt)).epsilon(1e-13));
}

TEST_CASE("propagator rejects a bad step") {
  const auto op = SpectralOperator::diagonal(SpaceName::H2, {-1.0});
  CHECK_THROWS_AS(Propagator(op, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(Propagator(op, 1.0, std::nan("")), DomainError);
}
