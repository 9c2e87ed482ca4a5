#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include "slowfast/model.hpp"

namespace slowfast {

// Uniform time grid. Cell n is the interval [n dt, (n+1) dt); the path stores
// increments for cells [first_cell, end_cell).
struct Grid {
  double dt = 0.01;
  std::int64_t first_cell = 0;
  std::int64_t end_cell = 0;

  static Grid covering(double dt, double t_min, double t_max);

  double t_min() const { return static_cast<double>(first_cell) * dt; }
  double t_max() const { return static_cast<double>(end_cell) * dt; }
  std::int64_t cells() const { return end_cell - first_cell; }
};

// Grid index of t; throws DomainError unless t is a grid point.
std::int64_t cell_of(double t, double dt);

// Increments of W1, W2 (two-sided) and W3 (one-sided, identity covariance).
// Every increment is a pure function of (seed, stream_id, cell, channel), so a
// wider window reproduces the increments of a narrower one.
class NoisePath {
 public:
  static NoisePath sample(const CovarianceSpec& cov1, const CovarianceSpec& cov2, int dim3, const Grid& grid,
                          std::uint64_t seed, std::uint64_t stream_id);

  const Grid& grid() const { return grid_; }
  double dt() const { return grid_.dt; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  // Identifier of the realization (seed, stream, dt), independent of the window.
  std::uint64_t path_ref() const;

  int dim1() const { return static_cast<int>(w1_.rows()); }
  int dim2() const { return static_cast<int>(w2_.rows()); }
  int dim3() const { return static_cast<int>(w3_.rows()); }

  // Pointers to the increment vector of one cell; throw WindowExhaustedError
  // when the cell is not stored.
  const double* w1(std::int64_t cell) const;
  const double* w2(std::int64_t cell) const;
  const double* w3(std::int64_t cell) const;

  // W1(t) - W1(0) as a prefix sum of increments.
  Eigen::VectorXd w1_value(std::int64_t cell) const;

  const Eigen::MatrixXd& w1_matrix() const { return w1_; }
  const Eigen::MatrixXd& w2_matrix() const { return w2_; }
  const Eigen::MatrixXd& w3_matrix() const { return w3_; }

  void write(std::ostream& out) const;
  static NoisePath read(std::istream& in);

  bool operator==(const NoisePath& other) const;

 private:
  Grid grid_;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  Eigen::MatrixXd w1_, w2_, w3_;  // one column per cell; w3 starts at cell max(0, first_cell)
  std::int64_t w3_first_ = 0;
};

// Read-only window on a path shifted by `offset` cells (theta_{offset dt}).
class PathView {
 public:
  PathView() = default;
  explicit PathView(std::shared_ptr<const NoisePath> base, std::int64_t offset = 0)
      : base_(std::move(base)), offset_(offset) {}

  const double* w1(std::int64_t cell) const { return base_->w1(cell + offset_); }
  const double* w2(std::int64_t cell) const { return base_->w2(cell + offset_); }
  const double* w3(std::int64_t cell) const { return base_->w3(cell + offset_); }

  PathView shifted_cells(std::int64_t cells) const { return PathView(base_, offset_ + cells); }

  double dt() const { return base_->dt(); }
  std::int64_t offset() const { return offset_; }
  std::uint64_t path_ref() const { return base_->path_ref(); }
  const NoisePath& base() const { return *base_; }
  const std::shared_ptr<const NoisePath>& base_ptr() const { return base_; }
  std::int64_t first_cell() const { return base_->grid().first_cell - offset_; }
  std::int64_t end_cell() const { return base_->grid().end_cell - offset_; }

 private:
  std::shared_ptr<const NoisePath> base_;
  std::int64_t offset_ = 0;
};

// theta_s: s must be a multiple of dt.
PathView shift(const PathView& path, double s);

// Backward truncation T_back = eps / (gamma2 - mu) * ln(1 / tol).
double backward_horizon(const SystemParams& p, double tol);
std::int64_t backward_cells(const SystemParams& p, double dt, double tol);

// Truncated int_{-inf}^t e^{(B/eps)(t-r)} (sigma2/sqrt eps) dW2(r), started from
// zero at t - T_back.
Eigen::VectorXd ou_convolution(const SpectralOperator& b, double sigma2, double eps, const PathView& path, double t,
                               double t_back);

// int_{t_from}^{t_to} e^{A(t_to - r)} sigma1 dW1(r).
Eigen::VectorXd slow_convolution(const SpectralOperator& a, double sigma1, const PathView& path, double t_from,
                                 double t_to);

}  // namespace slowfast
