#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "slowfast/model.hpp"
#include "slowfast/noise.hpp"
#include "slowfast/simulate.hpp"

namespace slowfast {

struct ManifoldOptions {
  double tol = 1e-8;             // weighted sup-norm stopping tolerance
  int max_iterations = 200;
  double truncation_tol = 1e-8;  // sets T_back
};

// Discrete fixed point of the Lyapunov-Perron operator K on [s - T_back, s]
// anchored at x_s = x0. Columns are grid points n_start .. n_anchor.
struct BackwardSolution {
  double dt = 0.0;
  std::int64_t n_start = 0;
  std::int64_t n_anchor = 0;
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residuals;  // weighted sup norm of successive differences
  std::vector<double> ratios;     // residuals[k] / residuals[k-1] above the rounding floor

  Eigen::VectorXd y_anchor() const { return y.col(y.cols() - 1); }
  Eigen::VectorXd x_anchor() const { return x.col(x.cols() - 1); }
};

std::int64_t manifold_backward_cells(const SystemModel& model, double dt, const ManifoldOptions& opts);

BackwardSolution solve_backward(const SystemModel& model, const Eigen::VectorXd& x0, std::int64_t anchor_cell,
                                const PathView& path, const ManifoldOptions& opts = {},
                                const BackwardSolution* warm_start = nullptr, std::int64_t back_cells = -1);

BackwardSolution solve_backward(const SystemModel& model, const Eigen::VectorXd& x0, double s, const PathView& path,
                                const ManifoldOptions& opts = {});

// x0 -> H^{eps,s}(w, x0) for one noise path, memoized on (x0 rounded to 1e-12,
// anchor, path). Safe for concurrent evaluation.
class ManifoldMap {
 public:
  ManifoldMap(const SystemModel& model, PathView path, double s, ManifoldOptions opts = {});

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x0) const;
  // H^{eps,t}(w, x0) = H^{eps,0}(theta_t w, x0) for the grid point t = anchor_cell dt.
  Eigen::VectorXd evaluate_at(const Eigen::VectorXd& x0, std::int64_t anchor_cell) const;

  double s() const { return static_cast<double>(anchor_) * path_.dt(); }
  std::int64_t anchor_cell() const { return anchor_; }
  const PathView& path() const { return path_; }
  const SystemModel& model() const { return model_; }
  const ManifoldOptions& options() const { return opts_; }

  // L / ((gamma2 - mu)(1 - M)); certified only at s = 0.
  double lip_bound() const { return lip_bound_; }
  bool lip_certified() const { return anchor_ == 0; }

  // Max ratio ||H(x1) - H(x2)|| / ||x1 - x2|| over random pairs in a ball.
  double probe_lipschitz(int pairs = 200, double radius = 5.0, std::uint64_t seed = 7) const;
  double lip_empirical() const;

  std::size_t memo_size() const;

 private:
  SystemModel model_;
  PathView path_;
  std::int64_t anchor_;
  ManifoldOptions opts_;
  double lip_bound_ = 0.0;
  mutable double lip_empirical_ = 0.0;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<std::int64_t>, Eigen::VectorXd> memo_;
};

struct ShiftReport {
  double s = 0.0;
  double t = 0.0;
  double discrepancy = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Solves at anchor s from x0, then at anchor s on theta_{t-s} w from the solution's
// x at time t, and compares the fast value with the first solve's y at t.
ShiftReport verify_shift_property(const SystemModel& model, const PathView& path, const Eigen::VectorXd& x0, double s,
                                  double t, const ManifoldOptions& opts = {});

struct RandomBound {
  double value = 0.0;
  double slow_component = 0.0;
  double fast_component = 0.0;
};

// Cells needed before 0 by compute_R.
std::int64_t random_bound_cells(const SystemModel& model, double dt, const ManifoldOptions& opts);

RandomBound compute_R(const SystemModel& model, const PathView& path, const ManifoldOptions& opts = {});

struct TrackingOptions {
  double tol = 1e-12;  // relative weighted residual
  int max_iterations = 200;
  double truncation_tol = 1e-8;
  double forward_tol = 1e-12;  // T_fwd = (eps / mu) ln(1 / forward_tol) unless forward_horizon > 0
  double forward_horizon = 0.0;
};

struct TrackingSolution {
  double dt = 0.0;
  std::int64_t n_start = 0;  // negative
  std::int64_t n_end = 0;
  Eigen::MatrixXd X;  // correction, one column per grid point n_start .. n_end
  Eigen::MatrixXd Y;
  Trajectory base;    // full trajectory on [0, n_end]
  Eigen::VectorXd x_tilde0;
  Eigen::VectorXd y_tilde0;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residuals;
  double contraction = 0.0;  // M
  RandomBound bound;
  double envelope_constant = 0.0;  // ((2 + 2M)||z0|| + 2R) / (1 - M)
  double worst_envelope_ratio = 0.0;  // max over t >= 0 of ||Z_t|| / envelope(t)
  bool decay_ok = false;

  double envelope(double t, double mu, double eps) const { return std::exp(-mu * t / eps) * envelope_constant; }
  double correction_norm(std::int64_t n) const {
    return X.col(n - n_start).norm() + Y.col(n - n_start).norm();
  }
};

std::int64_t tracking_forward_cells(const SystemModel& model, double dt, const TrackingOptions& opts);
std::int64_t tracking_backward_cells(const SystemModel& model, double dt, const TrackingOptions& opts);

TrackingSolution solve_tracking(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                const PathView& path, const TrackingOptions& opts = {});

enum class FastSlotPolicy {
  Propagated,  // evaluate the manifold at t0, then step the fast equation (discrete invariance)
  Exact,       // evaluate H(theta_t w, x_t) at every grid point
};

// Reduced system: slow equation driven by F(x, H(theta_t w, x)); the fast slot
// holds the manifold value. y0_on_manifold overrides the initial evaluation.
Trajectory integrate_reduced(const SystemModel& model, const Eigen::VectorXd& x0, const ManifoldMap& manifold,
                             const PathView& path, double t0, double t1,
                             FastSlotPolicy policy = FastSlotPolicy::Propagated,
                             const Eigen::VectorXd* y0_on_manifold = nullptr);

}  // namespace slowfast
