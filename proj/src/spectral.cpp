#include "slowfast/spectral.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "slowfast/errors.hpp"

namespace slowfast {

std::string to_string(SpaceName name) {
  switch (name) {
    case SpaceName::H1: return "H1";
    case SpaceName::H2: return "H2";
    case SpaceName::H3: return "H3";
  }
  return "?";
}

SpaceSpec::SpaceSpec(SpaceName name, std::vector<int> block_layout) : name_(name), layout_(std::move(block_layout)) {
  if (layout_.empty()) throw StructuralError("space " + to_string(name_) + " has no blocks");
  offsets_.reserve(layout_.size());
  for (int size : layout_) {
    if (size != 1 && size != 2) throw StructuralError("block sizes must be 1 or 2");
    offsets_.push_back(dim_);
    dim_ += size;
  }
}

SpaceSpec SpaceSpec::uniform(SpaceName name, int blocks, int block_size) {
  if (blocks <= 0) throw StructuralError("space needs at least one block");
  return SpaceSpec(name, std::vector<int>(static_cast<std::size_t>(blocks), block_size));
}

HVector::HVector(SpaceSpec s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c)) {
  if (coeffs.size() != space.dim()) throw StructuralError("coefficient length does not match space dimension");
  if (!coeffs.allFinite()) throw DomainError("HVector has non-finite coefficients");
}

Eigen::Matrix2d expm2(const Eigen::Matrix2d& m, double t) {
  const double half = 0.5 * m.trace();
  const Eigen::Matrix2d n = m - half * Eigen::Matrix2d::Identity();
  const double q = half * half - m.determinant();
  const double qt2 = q * t * t;
  double c = 0.0;
  double f = 0.0;
  if (std::abs(qt2) < 1e-6) {
    c = 1.0 + qt2 / 2.0 + qt2 * qt2 / 24.0;
    f = t * (1.0 + qt2 / 6.0 + qt2 * qt2 / 120.0);
  } else if (q > 0.0) {
    const double r = std::sqrt(q);
    c = std::cosh(r * t);
    f = std::sinh(r * t) / r;
  } else {
    const double r = std::sqrt(-q);
    c = std::cos(r * t);
    f = std::sin(r * t) / r;
  }
  return std::exp(half * t) * (c * Eigen::Matrix2d::Identity() + f * n);
}

double phi1_scalar(double a) {
  if (std::abs(a) < 1e-12) return 1.0 + 0.5 * a;
  return std::expm1(a) / a;
}

Eigen::Matrix2d phi1_2x2(const Eigen::Matrix2d& m) {
  if (m.norm() < 1e-14) return Eigen::Matrix2d::Identity() + 0.5 * m;
  Eigen::Matrix4d aug = Eigen::Matrix4d::Zero();
  aug.topLeftCorner<2, 2>() = m;
  aug.topRightCorner<2, 2>() = Eigen::Matrix2d::Identity();
  const Eigen::Matrix4d e = aug.exp();
  return e.topRightCorner<2, 2>();
}

double operator_norm2(const Eigen::Matrix2d& m) {
  const double s = m.squaredNorm();
  const double d = m.determinant();
  const double disc = std::max(0.0, s * s - 4.0 * d * d);
  return std::sqrt(0.5 * (s + std::sqrt(disc)));
}

SpectralOperator::SpectralOperator(SpaceSpec space, std::vector<Eigen::Matrix2d> blocks)
    : space_(std::move(space)), blocks_(std::move(blocks)) {
  if (static_cast<int>(blocks_.size()) != space_.block_count())
    throw StructuralError("operator block count does not match space layout");
  for (int b = 0; b < space_.block_count(); ++b) {
    if (!blocks_[b].allFinite()) throw DomainError("operator block has non-finite entries");
    if (space_.block_size(b) == 1) {
      const double a = blocks_[b](0, 0);
      blocks_[b].setZero();
      blocks_[b](0, 0) = a;
    }
  }
}

SpectralOperator SpectralOperator::diagonal(SpaceName name, const std::vector<double>& entries) {
  std::vector<Eigen::Matrix2d> blocks;
  blocks.reserve(entries.size());
  for (double a : entries) {
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    m(0, 0) = a;
    blocks.push_back(m);
  }
  return SpectralOperator(SpaceSpec::uniform(name, static_cast<int>(entries.size()), 1), std::move(blocks));
}

SpectralOperator SpectralOperator::wave(SpaceName name, const std::vector<double>& lambdas, double gamma) {
  std::vector<Eigen::Matrix2d> blocks;
  blocks.reserve(lambdas.size());
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw DomainError("wave eigenvalues must be positive");
    const double w = std::sqrt(lambda);
    Eigen::Matrix2d m;
    m << 0.0, w, -w, -gamma;
    blocks.push_back(m);
  }
  return SpectralOperator(SpaceSpec::uniform(name, static_cast<int>(lambdas.size()), 2), std::move(blocks));
}

Eigen::Matrix2d SpectralOperator::block_exp(int b, double t) const {
  if (space_.block_size(b) == 1) {
    Eigen::Matrix2d e = Eigen::Matrix2d::Zero();
    e(0, 0) = std::exp(blocks_[b](0, 0) * t);
    return e;
  }
  return expm2(blocks_[b], t);
}

Eigen::VectorXd SpectralOperator::apply_exp(double t, const Eigen::VectorXd& v) const {
  if (!std::isfinite(t)) throw DomainError("semigroup time must be finite");
  if (v.size() != space_.dim()) throw StructuralError("vector length does not match operator space");
  Eigen::VectorXd out(v.size());
  for (int b = 0; b < space_.block_count(); ++b) {
    const int o = space_.block_offset(b);
    if (space_.block_size(b) == 1) {
      out[o] = std::exp(blocks_[b](0, 0) * t) * v[o];
    } else {
      out.segment<2>(o) = expm2(blocks_[b], t) * v.segment<2>(o);
    }
  }
  return out;
}

HVector SpectralOperator::semigroup_apply(double t, const HVector& v) const {
  if (v.space != space_) throw StructuralError("vector space does not match operator space");
  return HVector(space_, apply_exp(t, v.coeffs));
}

double SpectralOperator::exp_norm(double t) const {
  double worst = 0.0;
  for (int b = 0; b < space_.block_count(); ++b) {
    const double n = space_.block_size(b) == 1 ? std::exp(blocks_[b](0, 0) * t) : operator_norm2(expm2(blocks_[b], t));
    worst = std::max(worst, n);
  }
  return worst;
}

Eigen::VectorXd SpectralOperator::apply_generator(const Eigen::VectorXd& v) const {
  return dense() * v;
}

Eigen::MatrixXd SpectralOperator::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(space_.dim(), space_.dim());
  for (int b = 0; b < space_.block_count(); ++b) {
    const int o = space_.block_offset(b);
    const int s = space_.block_size(b);
    m.block(o, o, s, s) = blocks_[b].topLeftCorner(s, s);
  }
  return m;
}

Propagator::Propagator(const SpectralOperator& op, double rate_scale, double dt) : op_(op), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step must be positive");
  blocks_.reserve(op.block_count());
  for (int b = 0; b < op.block_count(); ++b) {
    Block blk;
    blk.offset = op.space().block_offset(b);
    blk.size = op.space().block_size(b);
    const Eigen::Matrix2d m = rate_scale * op.block(b);
    blk.e.setZero();
    blk.e_inv.setZero();
    blk.phi.setZero();
    blk.noise.setZero();
    if (blk.size == 1) {
      const double a = m(0, 0) * dt;
      blk.e(0, 0) = std::exp(a);
      blk.e_inv(0, 0) = std::exp(-a);
      blk.phi(0, 0) = phi1_scalar(a);
      blk.noise(0, 0) = std::abs(2.0 * a) < 1e-12 ? 1.0 : std::sqrt(std::expm1(2.0 * a) / (2.0 * a));
    } else {
      blk.e = expm2(m, dt);
      blk.e_inv = expm2(m, -dt);
      blk.phi = phi1_2x2(m * dt);
      blk.noise = blk.e;
    }
    blocks_.push_back(blk);
  }
}

void Propagator::exp_apply(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) const {
  for (const auto& b : blocks_) {
    if (b.size == 1) {
      out[b.offset] = b.e(0, 0) * v[b.offset];
    } else {
      const double v0 = v[b.offset], v1 = v[b.offset + 1];
      out[b.offset] = b.e(0, 0) * v0 + b.e(0, 1) * v1;
      out[b.offset + 1] = b.e(1, 0) * v0 + b.e(1, 1) * v1;
    }
  }
}

void Propagator::inv_apply(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) const {
  for (const auto& b : blocks_) {
    if (b.size == 1) {
      out[b.offset] = b.e_inv(0, 0) * v[b.offset];
    } else {
      const double v0 = v[b.offset], v1 = v[b.offset + 1];
      out[b.offset] = b.e_inv(0, 0) * v0 + b.e_inv(0, 1) * v1;
      out[b.offset + 1] = b.e_inv(1, 0) * v0 + b.e_inv(1, 1) * v1;
    }
  }
}

void Propagator::phi_apply(const Eigen::Ref<const Eigen::VectorXd>& v, double coeff,
                           Eigen::Ref<Eigen::VectorXd> out) const {
  for (const auto& b : blocks_) {
    if (b.size == 1) {
      out[b.offset] = coeff * b.phi(0, 0) * v[b.offset];
    } else {
      const double v0 = v[b.offset], v1 = v[b.offset + 1];
      out[b.offset] = coeff * (b.phi(0, 0) * v0 + b.phi(0, 1) * v1);
      out[b.offset + 1] = coeff * (b.phi(1, 0) * v0 + b.phi(1, 1) * v1);
    }
  }
}

void Propagator::noise_apply(const double* dw, double scale, Eigen::Ref<Eigen::VectorXd> out) const {
  for (const auto& b : blocks_) {
    if (b.size == 1) {
      out[b.offset] = scale * b.noise(0, 0) * dw[b.offset];
    } else {
      const double w0 = dw[b.offset], w1 = dw[b.offset + 1];
      out[b.offset] = scale * (b.noise(0, 0) * w0 + b.noise(0, 1) * w1);
      out[b.offset + 1] = scale * (b.noise(1, 0) * w0 + b.noise(1, 1) * w1);
    }
  }
}

void Propagator::step(const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::Ref<const Eigen::VectorXd>& drift,
                      double coeff, const Eigen::Ref<const Eigen::VectorXd>& xi,
                      Eigen::Ref<Eigen::VectorXd> out) const {
  for (const auto& b : blocks_) {
    const int o = b.offset;
    if (b.size == 1) {
      out[o] = b.e(0, 0) * v[o] + coeff * b.phi(0, 0) * drift[o] + xi[o];
    } else {
      const double v0 = v[o], v1 = v[o + 1], d0 = drift[o], d1 = drift[o + 1];
      const double n0 = b.e(0, 0) * v0 + b.e(0, 1) * v1 + coeff * (b.phi(0, 0) * d0 + b.phi(0, 1) * d1) + xi[o];
      const double n1 = b.e(1, 0) * v0 + b.e(1, 1) * v1 + coeff * (b.phi(1, 0) * d0 + b.phi(1, 1) * d1) + xi[o + 1];
      out[o] = n0;
      out[o + 1] = n1;
    }
  }
}

void Propagator::back_step(const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::Ref<const Eigen::VectorXd>& drift,
                           double coeff, const Eigen::Ref<const Eigen::VectorXd>& xi,
                           Eigen::Ref<Eigen::VectorXd> out) const {
  for (const auto& b : blocks_) {
    const int o = b.offset;
    if (b.size == 1) {
      out[o] = b.e_inv(0, 0) * (v[o] - coeff * b.phi(0, 0) * drift[o] - xi[o]);
    } else {
      const double d0 = drift[o], d1 = drift[o + 1];
      const double r0 = v[o] - coeff * (b.phi(0, 0) * d0 + b.phi(0, 1) * d1) - xi[o];
      const double r1 = v[o + 1] - coeff * (b.phi(1, 0) * d0 + b.phi(1, 1) * d1) - xi[o + 1];
      out[o] = b.e_inv(0, 0) * r0 + b.e_inv(0, 1) * r1;
      out[o + 1] = b.e_inv(1, 0) * r0 + b.e_inv(1, 1) * r1;
    }
  }
}

}  // namespace slowfast
