#pragma once

#include <cmath>

#include "slowfast/rng.hpp"

namespace slowfast {

// f(x, y) -> Eigen::VectorXd. Pairs are z1 with typical norm `radius` and
// z2 = z1 + delta u, u a random unit direction, delta log-uniform in [1e-4, 10].
template <typename Fn>
LipschitzProbe probe_lipschitz(Fn&& f, int dim_x, int dim_y, const ProbeOptions& probes) {
  LipschitzProbe out;
  const Eigen::VectorXd zero_x = Eigen::VectorXd::Zero(dim_x);
  const Eigen::VectorXd zero_y = Eigen::VectorXd::Zero(dim_y);
  out.zero_at_origin = f(zero_x, zero_y).cwiseAbs().maxCoeff() == 0.0;

  const GaussianSource rng(probes.seed, make_stream_id(StreamRole::kProbe, 0, 0));
  const int dim = dim_x + dim_y;
  Eigen::VectorXd z(dim), u(dim);
  for (int i = 0; i < probes.pairs; ++i) {
    rng.fill(i, 0, z.data(), static_cast<std::size_t>(dim));
    rng.fill(i, 1, u.data(), static_cast<std::size_t>(dim));
    z *= probes.radius / std::sqrt(static_cast<double>(dim));
    u /= u.norm();
    const double delta = std::pow(10.0, -4.0 + 5.0 * rng.uniform(i, 2, 0));
    const Eigen::VectorXd x1 = z.head(dim_x), y1 = z.tail(dim_y);
    const Eigen::VectorXd x2 = x1 + delta * u.head(dim_x), y2 = y1 + delta * u.tail(dim_y);
    const Eigen::VectorXd f1 = f(x1, y1);
    const Eigen::VectorXd f2 = f(x2, y2);
    const double dz = (x2 - x1).norm() + (y2 - y1).norm();
    if (dz > 0.0) out.max_ratio = std::max(out.max_ratio, (f1 - f2).norm() / dz);
    const double nz = x1.norm() + y1.norm();
    if (nz > 0.0) out.max_growth_ratio = std::max(out.max_growth_ratio, f1.norm() / nz);
    out.max_norm = std::max({out.max_norm, f1.norm(), f2.norm()});
  }
  return out;
}

}  // namespace slowfast
