#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slowfast/model.hpp"

namespace slowfast {

struct Verdict {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct EpsilonVerdict {
  double epsilon = 0.0;
  double contraction = 0.0;  // M at this epsilon, NaN when undefined
  bool admissible = false;
};

struct HypothesisReport {
  std::vector<Verdict> verdicts;
  std::vector<EpsilonVerdict> epsilons;
  bool overall = false;
  std::string h1_norm;  // "euclidean" or "energy"
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double lipschitz = 0.0;
  double mu = 0.0;
  double mu_upper = 0.0;  // gamma2 - L
  double epsilon0 = 0.0;

  const Verdict* find(const std::string& name) const;
};

struct ProbeOptions {
  int pairs = 10000;
  double radius = 10.0;
  std::uint64_t seed = 1;
};

// Norm of e^{M t} in the weighted norm |P^{1/2} v| with P = diag(|c|, |b|) for
// M = [[a, b], [c, d]], b c < 0.
double energy_norm_exp(const Eigen::Matrix2d& m, double t);

// Logarithmic grid of times used for the (H1) checks, both signs.
std::vector<double> h1_time_grid();

// Runs (H1)-(H5) and the (mu, eps0) window. Failures are verdicts, never throws
// for hypothesis violations. `h` may be null when no observation is configured.
HypothesisReport check_hypotheses(const SystemModel& model, const ObservationModel* h,
                                  const std::vector<double>& epsilons, const ProbeOptions& probes = {});

struct LipschitzProbe {
  double max_ratio = 0.0;
  double max_growth_ratio = 0.0;  // ||f(z)|| / (||x|| + ||y||)
  double max_norm = 0.0;          // sup ||f(z)|| over probes
  bool zero_at_origin = false;
};

template <typename Fn>
LipschitzProbe probe_lipschitz(Fn&& f, int dim_x, int dim_y, const ProbeOptions& probes);

}  // namespace slowfast

#include "slowfast/hypotheses_impl.hpp"
