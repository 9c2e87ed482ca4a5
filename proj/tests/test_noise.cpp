#include <doctest.h>

#include <memory>
#include <sstream>

#include "oracles.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/noise.hpp"
#include "slowfast/rng.hpp"

using namespace slowfast;

namespace {

CovarianceSpec flat(int n, double k) { return CovarianceSpec{std::vector<double>(static_cast<std::size_t>(n), k)}; }

}  // namespace

TEST_CASE("philox is a pure function of key and counter") {
  const Philox4x32 a(42), b(42), c(43);
  const Philox4x32::Counter ctr{1, 2, 3, 4};
  CHECK(a(ctr) == b(ctr));
  CHECK(a(ctr) != c(ctr));
  CHECK(a(ctr) != a({1, 2, 3, 5}));
}

TEST_CASE("gaussian source moments") {
  const GaussianSource src(9, make_stream_id(StreamRole::kTest, 0, 1));
  const int n = 200000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  std::vector<double> buf(8);
  for (int i = 0; i < n / 8; ++i) {
    src.fill(i, 0, buf.data(), buf.size());
    for (double v : buf) {
      s += v;
      s2 += v * v;
      s4 += v * v * v * v;
    }
  }
  CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
  double single[3];
  src.fill(17, 2, single, 3);
  CHECK(src.normal(17, 2, 0) == single[0]);
  CHECK(src.normal(17, 2, 2) == single[2]);
}

TEST_CASE("stream ids separate roles and replications") {
  CHECK(make_stream_id(StreamRole::kTruth, 0, 0) != make_stream_id(StreamRole::kParticle, 0, 0));
  CHECK(make_stream_id(StreamRole::kParticle, 0, 1) != make_stream_id(StreamRole::kParticle, 1, 0));
}

TEST_CASE("grid helpers") {
  const Grid g = Grid::covering(0.01, -1.0, 2.0);
  CHECK(g.first_cell == -100);
  CHECK(g.end_cell == 200);
  CHECK(cell_of(0.37, 0.01) == 37);
  CHECK_THROWS_AS(cell_of(0.375, 0.01), DomainError);
  CHECK_THROWS_AS(Grid::covering(0.01, 0.5, 1.0), DomainError);
}

TEST_CASE("wider windows reproduce narrower ones") {
  const auto c1 = flat(4, 0.5), c2 = flat(3, 1.0);
  const auto narrow = NoisePath::sample(c1, c2, 2, Grid::covering(0.01, -0.5, 0.5), 1, 77);
  const auto wide = NoisePath::sample(c1, c2, 2, Grid::covering(0.01, -2.0, 3.0), 1, 77);
  for (std::int64_t n = -50; n < 50; ++n) {
    CHECK(std::equal(narrow.w1(n), narrow.w1(n) + 4, wide.w1(n)));
    CHECK(std::equal(narrow.w2(n), narrow.w2(n) + 3, wide.w2(n)));
    if (n >= 0) CHECK(std::equal(narrow.w3(n), narrow.w3(n) + 2, wide.w3(n)));
  }
  CHECK(narrow.path_ref() == wide.path_ref());
  CHECK_THROWS_AS(narrow.w1(50), WindowExhaustedError);
  CHECK_THROWS_AS(narrow.w3(-1), WindowExhaustedError);
}

TEST_CASE("increment variance follows the covariance") {
  const double dt = 0.01, k = 0.25;
  const auto p = NoisePath::sample(flat(1, k), flat(1, 1.0), 0, Grid::covering(dt, 0.0, 400.0), 3, 1);
  const Eigen::VectorXd w = p.w1_matrix().row(0).transpose();
  const double var = w.squaredNorm() / static_cast<double>(w.size());
  CHECK(var == doctest::Approx(k * dt).epsilon(5.0 * std::sqrt(2.0 / w.size())));
}

TEST_CASE("noise path record roundtrip") {
  const auto p = NoisePath::sample(flat(2, 1.0), flat(2, 1.0), 1, Grid::covering(0.1, -1.0, 1.0), 5, 6);
  std::stringstream ss;
  p.write(ss);
  const NoisePath q = NoisePath::read(ss);
  CHECK(p == q);
  std::stringstream bad("not a record");
  CHECK_THROWS_AS(NoisePath::read(bad), StructuralError);
}

TEST_CASE("shift moves the origin") {
  auto base = std::make_shared<const NoisePath>(
      NoisePath::sample(flat(2, 1.0), flat(2, 1.0), 0, Grid::covering(0.1, -2.0, 2.0), 5, 6));
  const PathView v(base);
  const PathView s = shift(v, 0.5);
  CHECK(s.w1(0) == v.w1(5));
  CHECK(s.first_cell() == -25);
  CHECK_THROWS_AS(shift(v, 0.55), DomainError);
}

TEST_CASE("backward horizon") {
  SystemParams p;
  p.epsilon = 0.1;
  p.gamma2 = 2.0;
  p.mu = 1.0;
  CHECK(backward_horizon(p, 1e-8) == doctest::Approx(0.1 * std::log(1e8)).epsilon(1e-14));
  CHECK_THROWS_AS(backward_horizon(p, 2.0), DomainError);
}

TEST_CASE("OU convolution vanishes without noise and has the stationary variance") {
  const double eps = 0.05, sigma = 0.5, b = -2.0, dt = eps / 10.0;
  const auto op = SpectralOperator::diagonal(SpaceName::H2, {b});
  const double t_back = dt * std::ceil(eps / 2.0 * std::log(1e10) / dt);
  auto quiet = std::make_shared<const NoisePath>(
      NoisePath::sample(flat(1, 1.0), flat(1, 1.0), 0, Grid::covering(dt, -2.0, 0.0), 1, 1));
  CHECK(ou_convolution(op, 0.0, eps, PathView(quiet), 0.0, t_back).norm() == 0.0);

  const int n = 4000;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto p = std::make_shared<const NoisePath>(
        NoisePath::sample(flat(1, 1.0), flat(1, 1.0), 0, Grid::covering(dt, -t_back - dt, 0.0), 2, i));
    const double v = ou_convolution(op, sigma, eps, PathView(p), 0.0, t_back)[0];
    s2 += v * v;
  }
  // Generator b / eps with intensity sigma / sqrt(eps).
  const double ref = oracle::ou_stationary_variance(b / eps, sigma / std::sqrt(eps));
  CHECK(s2 / n == doctest::Approx(ref).epsilon(5.0 * std::sqrt(2.0 / n)));
}

TEST_CASE("slow convolution of a zero-generator block is sigma times the Brownian increment") {
  const auto op = SpectralOperator::diagonal(SpaceName::H1, {0.0});
  auto p = std::make_shared<const NoisePath>(
      NoisePath::sample(flat(1, 1.0), flat(1, 1.0), 0, Grid::covering(0.01, 0.0, 1.0), 4, 4));
  const double sum = p->w1_matrix().row(0).sum();
  CHECK(slow_convolution(op, 0.7, PathView(p), 0.0, 1.0)[0] == doctest::Approx(0.7 * sum).epsilon(1e-12));
}
