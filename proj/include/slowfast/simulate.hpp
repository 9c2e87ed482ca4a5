#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <iosfwd>

#include "slowfast/model.hpp"
#include "slowfast/noise.hpp"

namespace slowfast {

struct Trajectory {
  double dt = 0.0;
  std::int64_t n_start = 0;
  Eigen::MatrixXd x;  // one column per grid point
  Eigen::MatrixXd y;
  std::uint64_t path_ref = 0;

  std::int64_t size() const { return x.cols(); }
  double time(std::int64_t i) const { return static_cast<double>(n_start + i) * dt; }
  // H-norm ||x|| + ||y|| of the state at index i.
  double norm_at(std::int64_t i) const { return x.col(i).norm() + y.col(i).norm(); }

  void write_csv(std::ostream& out) const;
  void write(std::ostream& out) const;
  static Trajectory read(std::istream& in);
};

// One exponential-Euler step of the full system:
//   x' = E_A x + dt Phi_A F(x, y) + sigma1 N_A dW1
//   y' = E_B y + (dt/eps) Phi_B G(x, y) + (sigma2/sqrt eps) N_B dW2
class Stepper {
 public:
  struct Workspace {
    Eigen::VectorXd f, g, xi1, xi2;
  };

  Stepper(const SystemModel& model, double dt);

  const SystemModel& model() const { return *model_; }
  double dt() const { return dt_; }
  const Propagator& slow() const { return slow_; }
  const Propagator& fast() const { return fast_; }
  double slow_coeff() const { return dt_; }
  double fast_coeff() const { return dt_ / model_->params.epsilon; }
  double slow_noise_scale() const { return model_->params.sigma1; }
  double fast_noise_scale() const { return model_->params.sigma2 / std::sqrt(model_->params.epsilon); }

  Workspace workspace() const;

  void injections(const PathView& path, std::int64_t cell, Eigen::Ref<Eigen::VectorXd> xi1,
                  Eigen::Ref<Eigen::VectorXd> xi2) const;

  // In-place step over `cell`.
  void step(Eigen::Ref<Eigen::VectorXd> x, Eigen::Ref<Eigen::VectorXd> y, const PathView& path, std::int64_t cell,
            Workspace& ws) const;

 private:
  const SystemModel* model_;
  double dt_;
  Propagator slow_, fast_;
};

// Step of a path used for a model: path.dt() must not exceed eps / oversample_fast.
double checked_step(const SystemModel& model, const PathView& path);

// Throws DivergenceError when the state norm exceeds 1e6 (1 + ||z0||) or is not finite.
void guard_divergence(double state_norm, double z0_norm, std::int64_t step);

Trajectory integrate_full(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                          const PathView& path, double t0, double t1);

// Same as integrate_full but on grid indices, without model validation.
Trajectory integrate_cells(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                           const PathView& path, std::int64_t n0, std::int64_t n1);

struct CocycleReport {
  double s = 0.0;
  double t = 0.0;
  double discrepancy = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// phi(t + s, w) z0 against phi(t, theta_s w) phi(s, w) z0, both from the same increments.
CocycleReport verify_cocycle(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                             const PathView& path, double s, double t);

// One application of the mild solution map J to a candidate trajectory on its own
// window: drift terms use the candidate, the initial state and noise are fixed.
Trajectory picard_apply(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                        const PathView& path, const Trajectory& candidate);

// Sup over the grid of ||x1 - x2|| + ||y1 - y2||.
double sup_distance(const Trajectory& a, const Trajectory& b);

// Contraction factor L T0 + L / gamma2 of the mild map on a window of length T0.
double picard_contraction_bound(const SystemParams& p, double window);

}  // namespace slowfast
