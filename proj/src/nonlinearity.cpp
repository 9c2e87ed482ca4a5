#include "slowfast/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

#include "slowfast/errors.hpp"

namespace slowfast {

NonlinearityKind parse_nonlinearity_kind(const std::string& tag) {
  if (tag == "zero") return NonlinearityKind::Zero;
  if (tag == "linear-coupling") return NonlinearityKind::LinearCoupling;
  if (tag == "sine-saturating") return NonlinearityKind::SineSaturating;
  if (tag == "thermoelastic-sine") return NonlinearityKind::ThermoelasticSine;
  if (tag == "user-table") return NonlinearityKind::UserTable;
  throw DomainError("unknown nonlinearity kind '" + tag + "'");
}

std::string to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::Zero: return "zero";
    case NonlinearityKind::LinearCoupling: return "linear-coupling";
    case NonlinearityKind::SineSaturating: return "sine-saturating";
    case NonlinearityKind::ThermoelasticSine: return "thermoelastic-sine";
    case NonlinearityKind::UserTable: return "user-table";
  }
  return "?";
}

ObservationKind parse_observation_kind(const std::string& tag) {
  if (tag == "sine-of-slow") return ObservationKind::SineOfSlow;
  if (tag == "bounded-linear") return ObservationKind::BoundedLinear;
  if (tag == "user-table") return ObservationKind::UserTable;
  throw DomainError("unknown observation kind '" + tag + "'");
}

std::string to_string(ObservationKind kind) {
  switch (kind) {
    case ObservationKind::SineOfSlow: return "sine-of-slow";
    case ObservationKind::BoundedLinear: return "bounded-linear";
    case ObservationKind::UserTable: return "user-table";
  }
  return "?";
}

std::vector<int> displacement_indices(const SpaceSpec& slow) {
  std::vector<int> idx;
  idx.reserve(slow.block_count());
  for (int b = 0; b < slow.block_count(); ++b) idx.push_back(slow.block_offset(b));
  return idx;
}

namespace {

void check_terms(const std::vector<TableTerm>& terms, int out_dim, int dim_x, int dim_y) {
  for (const auto& t : terms) {
    if (t.out_index < 0 || t.out_index >= out_dim) throw StructuralError("table term output index out of range");
    for (const auto& in : t.inputs) {
      const int bound = in.slot == Slot::X ? dim_x : dim_y;
      if (in.index < 0 || in.index >= bound) throw StructuralError("table term input index out of range");
    }
  }
}

void eval_terms(const std::vector<TableTerm>& terms, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Ref<Eigen::VectorXd> out) {
  for (const auto& t : terms) {
    double s = 0.0;
    for (const auto& in : t.inputs) s += in.weight * (in.slot == Slot::X ? x[in.index] : y[in.index]);
    out[t.out_index] += t.amplitude * (t.activation == Activation::Sin ? std::sin(s) : s);
  }
}

}  // namespace

Nonlinearity Nonlinearity::zero(Role role) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::Zero;
  n.role_ = role;
  return n;
}

Nonlinearity Nonlinearity::linear_coupling(Role role, double ell) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::LinearCoupling;
  n.role_ = role;
  n.amplitude_ = ell;
  n.lipschitz_ = std::abs(ell);
  return n;
}

Nonlinearity Nonlinearity::sine_saturating(Role role, double a, double declared_lipschitz) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::SineSaturating;
  n.role_ = role;
  n.amplitude_ = a;
  n.lipschitz_ = declared_lipschitz;
  return n;
}

Nonlinearity Nonlinearity::thermoelastic_sine(Role role, double a) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::ThermoelasticSine;
  n.role_ = role;
  n.amplitude_ = a;
  n.lipschitz_ = std::abs(a) * std::sqrt(2.0);
  return n;
}

Nonlinearity Nonlinearity::user_table(Role role, std::vector<TableTerm> terms, double declared_lipschitz) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::UserTable;
  n.role_ = role;
  n.terms_ = std::move(terms);
  n.lipschitz_ = declared_lipschitz;
  return n;
}

void Nonlinearity::bind(const SpaceSpec& slow, const SpaceSpec& fast) {
  out_dim_ = role_ == Role::Slow ? slow.dim() : fast.dim();
  disp_.clear();
  vel_.clear();
  if (kind_ == NonlinearityKind::ThermoelasticSine) {
    const int modes = std::min(slow.block_count(), fast.dim());
    for (int b = 0; b < modes; ++b) {
      if (slow.block_size(b) != 2) throw StructuralError("thermoelastic-sine needs 2x2 slow blocks");
      disp_.push_back(slow.block_offset(b));
      vel_.push_back(slow.block_offset(b) + 1);
    }
  }
  if (kind_ == NonlinearityKind::UserTable) check_terms(terms_, out_dim_, slow.dim(), fast.dim());
}

void Nonlinearity::eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                        Eigen::Ref<Eigen::VectorXd> out) const {
  out.setZero();
  switch (kind_) {
    case NonlinearityKind::Zero:
      return;
    case NonlinearityKind::LinearCoupling: {
      const auto n = std::min(x.size(), y.size());
      if (role_ == Role::Slow) {
        out.head(n) = amplitude_ * y.head(n);
      } else {
        out.head(n) = amplitude_ * x.head(n);
      }
      return;
    }
    case NonlinearityKind::SineSaturating: {
      const auto& own = role_ == Role::Slow ? x : y;
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = amplitude_ * std::sin(own[i]);
      return;
    }
    case NonlinearityKind::ThermoelasticSine: {
      for (std::size_t k = 0; k < disp_.size(); ++k) {
        const double v = amplitude_ * std::sin(x[disp_[k]] + x[vel_[k]] + y[static_cast<Eigen::Index>(k)]);
        if (role_ == Role::Slow) {
          out[vel_[k]] = v;
        } else {
          out[static_cast<Eigen::Index>(k)] = v;
        }
      }
      return;
    }
    case NonlinearityKind::UserTable:
      eval_terms(terms_, x, y, out);
      return;
  }
}

Eigen::VectorXd Nonlinearity::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  const int dim = out_dim_ > 0 ? out_dim_ : static_cast<int>(role_ == Role::Slow ? x.size() : y.size());
  Eigen::VectorXd out(dim);
  eval(x, y, out);
  return out;
}

ObservationModel ObservationModel::sine_of_slow(int dim3) {
  ObservationModel h;
  h.kind_ = ObservationKind::SineOfSlow;
  h.dim3_ = dim3;
  h.c_h_ = std::sqrt(static_cast<double>(dim3));
  h.h_lip_ = 1.0;
  return h;
}

ObservationModel ObservationModel::bounded_linear(int dim3, double a, double clip) {
  if (!(clip > 0.0)) throw DomainError("bounded-linear clip must be positive");
  ObservationModel h;
  h.kind_ = ObservationKind::BoundedLinear;
  h.dim3_ = dim3;
  h.slope_ = a;
  h.clip_ = clip;
  h.c_h_ = clip * std::sqrt(static_cast<double>(dim3));
  h.h_lip_ = std::abs(a);
  return h;
}

ObservationModel ObservationModel::user_table(int dim3, std::vector<TableTerm> terms, double c_h, double h_lip) {
  ObservationModel h;
  h.kind_ = ObservationKind::UserTable;
  h.dim3_ = dim3;
  h.terms_ = std::move(terms);
  h.c_h_ = c_h;
  h.h_lip_ = h_lip;
  return h;
}

void ObservationModel::bind(const SpaceSpec& slow, const SpaceSpec& fast) {
  if (dim3_ <= 0) throw StructuralError("observation dimension must be positive");
  disp_.clear();
  if (kind_ == ObservationKind::UserTable) {
    check_terms(terms_, dim3_, slow.dim(), fast.dim());
    return;
  }
  const auto all = displacement_indices(slow);
  if (static_cast<int>(all.size()) < dim3_) throw StructuralError("dim3 exceeds the number of slow modes");
  disp_.assign(all.begin(), all.begin() + dim3_);
}

void ObservationModel::eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                            Eigen::Ref<Eigen::VectorXd> out) const {
  switch (kind_) {
    case ObservationKind::SineOfSlow:
      for (int i = 0; i < dim3_; ++i) out[i] = std::sin(x[disp_[i]]);
      return;
    case ObservationKind::BoundedLinear:
      for (int i = 0; i < dim3_; ++i) out[i] = std::clamp(slope_ * x[disp_[i]], -clip_, clip_);
      return;
    case ObservationKind::UserTable:
      out.setZero();
      eval_terms(terms_, x, y, out);
      return;
  }
}

Eigen::VectorXd ObservationModel::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  Eigen::VectorXd out(dim3_);
  eval(x, y, out);
  return out;
}

}  // namespace slowfast
