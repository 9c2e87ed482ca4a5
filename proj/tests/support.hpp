#pragma once

#include <memory>
#include <string>

#include "oracles.hpp"
#include "slowfast/filtering.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/scenario.hpp"

namespace support {

inline std::string config_path(const std::string& name) { return std::string(SLOWFAST_CONFIG_DIR) + "/" + name; }

struct Twin {
  slowfast::Trajectory truth;
  slowfast::ObservationPath obs;
};

// Truth run from the configured initial state and its observation on [0, cells dt].
inline Twin twin_experiment(const slowfast::ScenarioConfig& cfg, std::int64_t cells, std::uint64_t seed) {
  using namespace slowfast;
  const SystemModel& m = cfg.model;
  Grid g;
  g.dt = m.dt();
  g.first_cell = 0;
  g.end_cell = cells;
  const PathView path(std::make_shared<const NoisePath>(NoisePath::sample(
      m.cov1, m.cov2, cfg.observation.dim3(), g, seed, make_stream_id(StreamRole::kTruth, 0, 0))));
  Twin t;
  t.truth = integrate_cells(m, cfg.initial_x(), cfg.initial_y(), path, 0, cells);
  t.obs = generate_observation(t.truth, cfg.observation, path);
  return t;
}

// Kalman reference for a diagonal slow operator with linear user-table coupling
// on x, no coupling into x from y, and an unclipped bounded-linear observation.
inline oracle::KalmanResult linear_gaussian_reference(const slowfast::ScenarioConfig& cfg,
                                                      const slowfast::ObservationPath& obs, int coarsen,
                                                      const std::vector<int>& at) {
  using namespace slowfast;
  const SystemModel& m = cfg.model;
  const int n = m.dim_x();
  const double dt = m.dt();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (const auto& term : m.F.terms()) {
    for (const auto& in : term.inputs) C(term.out_index, in.index) += term.amplitude * in.weight;
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n), Q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double a = m.A.block(i)(0, 0);
    const double e = std::exp(a * dt);
    T.row(i) = (std::expm1(a * dt) / a) * C.row(i);
    T(i, i) += e;
    Q(i, i) = oracle::ou_step_variance(a, m.params.sigma1 * std::sqrt(m.cov1.per_mode_variance[i]), dt);
  }
  const int d = cfg.observation.dim3();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, n);
  for (int i = 0; i < d; ++i) H(i, cfg.observation.observed_indices()[i]) = cfg.observation.slope();
  std::vector<Eigen::VectorXd> dr;
  for (std::int64_t c = 0; (c + 1) * coarsen <= obs.cells(); ++c) dr.push_back(obs.coarse_increment(c, coarsen));
  return oracle::kalman_coarse(T, Q, H, cfg.initial_x(), dr, dt * coarsen, coarsen, at);
}

}  // namespace support
