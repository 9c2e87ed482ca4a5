#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slowfast/nonlinearity.hpp"
#include "slowfast/spectral.hpp"

namespace slowfast {

struct SystemParams {
  double epsilon = 0.05;
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  double gamma1 = 0.0;
  double gamma2 = 1.0;
  double lipschitz = 0.0;
  double mu = 0.0;
  double horizon_T = 1.0;
  double c_h = 0.0;
  double h_lip = 0.0;
};

// Per-component variances k_i of a Q-Wiener process.
struct CovarianceSpec {
  std::vector<double> per_mode_variance;

  // k0 * mode^{-decay} for every component; both components of a 2x2 block share
  // the variance of their mode.
  static CovarianceSpec power_law(const SpaceSpec& space, double k0, double decay);

  double trace() const;
  void validate(int dim) const;
};

inline constexpr double kUnconstrained = std::numeric_limits<double>::infinity();

// M = eps L / (mu - eps gamma1) + L / (gamma2 - mu).
double compute_contraction_constant(const SystemParams& p);

// Supremum of eps with M(eps) < 1; kUnconstrained when no eps is excluded.
double compute_epsilon0(const SystemParams& p);

// Lipschitz bound L / ((gamma2 - mu)(1 - M)) of the manifold graph at s = 0.
double manifold_lipschitz_bound(const SystemParams& p);

// Default mu = (gamma2 - L) / 2.
double default_mu(double gamma2, double lipschitz);

// Throws AdmissibilityError unless gamma2 > L, 0 < mu < gamma2 - L and eps < eps0.
void check_admissible(const SystemParams& p);

struct SystemModel {
  SpectralOperator A;
  SpectralOperator B;
  Nonlinearity F;
  Nonlinearity G;
  CovarianceSpec cov1;
  CovarianceSpec cov2;
  SystemParams params;
  int oversample_fast = 10;

  // Binds nonlinearities to the spaces and checks shapes.
  void finalize();

  double dt() const { return params.epsilon / oversample_fast; }
  int dim_x() const { return A.space().dim(); }
  int dim_y() const { return B.space().dim(); }

  // Same model at a different scale ratio.
  SystemModel with_epsilon(double epsilon) const;

  // Structural checks plus check_admissible.
  void validate() const;
};

}  // namespace slowfast
