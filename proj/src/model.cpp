#include "slowfast/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "slowfast/errors.hpp"

namespace slowfast {

CovarianceSpec CovarianceSpec::power_law(const SpaceSpec& space, double k0, double decay) {
  CovarianceSpec c;
  c.per_mode_variance.reserve(space.dim());
  for (int b = 0; b < space.block_count(); ++b) {
    const double k = k0 * std::pow(static_cast<double>(b + 1), -decay);
    for (int j = 0; j < space.block_size(b); ++j) c.per_mode_variance.push_back(k);
  }
  return c;
}

double CovarianceSpec::trace() const {
  return std::accumulate(per_mode_variance.begin(), per_mode_variance.end(), 0.0);
}

void CovarianceSpec::validate(int dim) const {
  if (static_cast<int>(per_mode_variance.size()) != dim)
    throw StructuralError("covariance length does not match space dimension");
  for (double k : per_mode_variance) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("covariance variances must be positive and finite");
  }
}

double compute_contraction_constant(const SystemParams& p) {
  const double gap = p.mu - p.epsilon * p.gamma1;
  if (!(gap > 0.0)) throw AdmissibilityError("fast-slow gap violated at this epsilon (mu <= epsilon * gamma1)");
  if (!(p.mu < p.gamma2)) throw AdmissibilityError("mu must be below gamma2");
  return p.epsilon * p.lipschitz / gap + p.lipschitz / (p.gamma2 - p.mu);
}

double compute_epsilon0(const SystemParams& p) {
  if (!(p.mu > 0.0) || !(p.mu < p.gamma2 - p.lipschitz)) {
    std::ostringstream msg;
    msg << "mu = " << p.mu << " outside the admissible window (0, gamma2 - L) = (0, " << p.gamma2 - p.lipschitz
        << ")";
    throw AdmissibilityError(msg.str());
  }
  const double c = 1.0 - p.lipschitz / (p.gamma2 - p.mu);
  const double denom = p.lipschitz + c * p.gamma1;
  if (denom <= 0.0) return kUnconstrained;
  return c * p.mu / denom;
}

double manifold_lipschitz_bound(const SystemParams& p) {
  const double m = compute_contraction_constant(p);
  if (!(m < 1.0)) throw AdmissibilityError("contraction constant is not below 1");
  return p.lipschitz / ((p.gamma2 - p.mu) * (1.0 - m));
}

double default_mu(double gamma2, double lipschitz) { return 0.5 * (gamma2 - lipschitz); }

void check_admissible(const SystemParams& p) {
  if (!(p.epsilon > 0.0)) throw AdmissibilityError("epsilon must be positive");
  if (!(p.gamma2 > p.lipschitz)) throw AdmissibilityError("gamma2 must exceed the Lipschitz constant L");
  const double eps0 = compute_epsilon0(p);
  if (!(p.epsilon < eps0)) {
    std::ostringstream msg;
    msg << "epsilon = " << p.epsilon << " is not below epsilon0 = " << eps0;
    throw AdmissibilityError(msg.str());
  }
}

void SystemModel::finalize() {
  if (A.space().name() != SpaceName::H1) throw StructuralError("A must act on H1");
  if (B.space().name() != SpaceName::H2) throw StructuralError("B must act on H2");
  F.bind(A.space(), B.space());
  G.bind(A.space(), B.space());
  if (F.role() != Role::Slow || G.role() != Role::Fast) throw StructuralError("F/G roles are swapped");
}

SystemModel SystemModel::with_epsilon(double epsilon) const {
  SystemModel m = *this;
  m.params.epsilon = epsilon;
  return m;
}

void SystemModel::validate() const {
  cov1.validate(dim_x());
  cov2.validate(dim_y());
  if (oversample_fast < 1) throw DomainError("oversample_fast must be at least 1");
  if (!std::isfinite(params.sigma1) || !std::isfinite(params.sigma2)) throw DomainError("noise intensities must be finite");
  for (int b = 0; b < B.block_count(); ++b) {
    if (B.space().block_size(b) != 1) throw StructuralError("B must be diagonal");
  }
  check_admissible(params);
}

}  // namespace slowfast
