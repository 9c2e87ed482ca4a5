#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace slowfast {

enum class SpaceName { H1, H2, H3 };

std::string to_string(SpaceName name);

// A truncated Hilbert space: dim coefficients grouped into mode blocks of size 1 or 2.
class SpaceSpec {
 public:
  SpaceSpec() = default;
  SpaceSpec(SpaceName name, std::vector<int> block_layout);

  static SpaceSpec uniform(SpaceName name, int blocks, int block_size);

  SpaceName name() const { return name_; }
  int dim() const { return dim_; }
  int block_count() const { return static_cast<int>(layout_.size()); }
  int block_size(int b) const { return layout_[b]; }
  int block_offset(int b) const { return offsets_[b]; }
  const std::vector<int>& block_layout() const { return layout_; }

  bool operator==(const SpaceSpec& other) const {
    return name_ == other.name_ && layout_ == other.layout_;
  }
  bool operator!=(const SpaceSpec& other) const { return !(*this == other); }

 private:
  SpaceName name_ = SpaceName::H1;
  std::vector<int> layout_;
  std::vector<int> offsets_;
  int dim_ = 0;
};

struct HVector {
  HVector() = default;
  HVector(SpaceSpec space, Eigen::VectorXd coeffs);

  static HVector zero(const SpaceSpec& space) { return HVector(space, Eigen::VectorXd::Zero(space.dim())); }

  double norm() const { return coeffs.norm(); }

  SpaceSpec space;
  Eigen::VectorXd coeffs;
};

// Closed-form exponential of a 2x2 matrix times t.
Eigen::Matrix2d expm2(const Eigen::Matrix2d& m, double t);

// phi_1(M) = M^{-1}(e^M - I), evaluated without forming M^{-1}.
double phi1_scalar(double a);
Eigen::Matrix2d phi1_2x2(const Eigen::Matrix2d& m);

double operator_norm2(const Eigen::Matrix2d& m);

// Block-diagonal generator. Blocks of size 1 store their entry at (0,0).
class SpectralOperator {
 public:
  SpectralOperator() = default;
  SpectralOperator(SpaceSpec space, std::vector<Eigen::Matrix2d> blocks);

  static SpectralOperator diagonal(SpaceName name, const std::vector<double>& entries);
  // Damped wave modes in energy coordinates (sqrt(lambda) v, v_t):
  // [[0, sqrt(lambda)], [-sqrt(lambda), -gamma]].
  static SpectralOperator wave(SpaceName name, const std::vector<double>& lambdas, double gamma);

  const SpaceSpec& space() const { return space_; }
  const Eigen::Matrix2d& block(int b) const { return blocks_[b]; }
  int block_count() const { return space_.block_count(); }

  // Exact e^{op t} restricted to block b (1x1 blocks use entry (0,0)).
  Eigen::Matrix2d block_exp(int b, double t) const;

  HVector semigroup_apply(double t, const HVector& v) const;
  Eigen::VectorXd apply_exp(double t, const Eigen::VectorXd& v) const;

  // Max over blocks of the Euclidean operator norm of e^{op t}.
  double exp_norm(double t) const;

  // Entry-wise generator applied to v.
  Eigen::VectorXd apply_generator(const Eigen::VectorXd& v) const;

  Eigen::MatrixXd dense() const;

 private:
  SpaceSpec space_;
  std::vector<Eigen::Matrix2d> blocks_;
};

// Precomputed one-step factors of the exponential-Euler scheme for generator
// rate_scale * op and step dt:
//   E = e^{h M}, Phi = phi_1(h M), noise factor Nz (exact OU filter on 1x1 blocks,
//   left-point e^{h M} on 2x2 blocks).
class Propagator {
 public:
  Propagator() = default;
  Propagator(const SpectralOperator& op, double rate_scale, double dt);

  int dim() const { return op_.space().dim(); }
  double dt() const { return dt_; }

  // out = E v
  void exp_apply(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) const;
  // out = E^{-1} v
  void inv_apply(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) const;
  // out = coeff * Phi v
  void phi_apply(const Eigen::Ref<const Eigen::VectorXd>& v, double coeff, Eigen::Ref<Eigen::VectorXd> out) const;
  // out = scale * Nz dw
  void noise_apply(const double* dw, double scale, Eigen::Ref<Eigen::VectorXd> out) const;

  // out = E v + coeff * Phi drift + xi
  void step(const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::Ref<const Eigen::VectorXd>& drift,
            double coeff, const Eigen::Ref<const Eigen::VectorXd>& xi, Eigen::Ref<Eigen::VectorXd> out) const;

  // out = E^{-1}(v - coeff * Phi drift - xi)
  void back_step(const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::Ref<const Eigen::VectorXd>& drift,
                 double coeff, const Eigen::Ref<const Eigen::VectorXd>& xi, Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  struct Block {
    int offset;
    int size;
    Eigen::Matrix2d e, e_inv, phi, noise;
  };

  SpectralOperator op_;
  double dt_ = 0.0;
  std::vector<Block> blocks_;
};

}  // namespace slowfast
