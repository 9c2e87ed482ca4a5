#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cmath>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "slowfast/manifold.hpp"
#include "slowfast/model.hpp"
#include "slowfast/nonlinearity.hpp"
#include "slowfast/simulate.hpp"
#include "slowfast/stats.hpp"

namespace slowfast {

// Observation increments dr = dW3 + h(x, y) dt on the fine grid, read in blocks
// of `coarsen` cells by the filter.
struct ObservationPath {
  double dt = 0.0;
  std::int64_t n_start = 0;
  Eigen::MatrixXd increments;  // dim3 x cells
  std::uint64_t truth_ref = 0;

  std::int64_t cells() const { return increments.cols(); }
  int dim3() const { return static_cast<int>(increments.rows()); }
  // Sum of the fine increments over coarse cell c.
  Eigen::VectorXd coarse_increment(std::int64_t c, int coarsen) const;
};

// Left-point rule on the truth grid; W3 increments come from `path`.
ObservationPath generate_observation(const Trajectory& truth, const ObservationModel& h, const PathView& path);

// <h, dr> - |h|^2 dt / 2.
double ks_log_weight_step(const Eigen::Ref<const Eigen::VectorXd>& h_val, const Eigen::Ref<const Eigen::VectorXd>& dr,
                          double dt);

// tanh(x_j / c) on the first displacement coordinates, then products of pairs in
// lexicographic order, truncated to m functions. Weights 2^-i, i = 1..m.
class TestDictionary {
 public:
  TestDictionary() = default;
  TestDictionary(std::vector<int> coords, int m, double scale);

  static TestDictionary for_space(const SpaceSpec& slow, int m, double scale);

  int size() const { return static_cast<int>(pairs_.size()); }
  double scale() const { return scale_; }
  const std::vector<int>& coords() const { return coords_; }

  double eval(int i, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void eval_all(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const;

  double sup_bound(int) const { return 1.0; }
  double lipschitz(int i) const;
  double weight(int i) const { return std::ldexp(1.0, -(i + 1)); }
  // Bound on the part of d carried by the functions beyond the truncation.
  double tail_bound() const { return std::ldexp(1.0, 1 - size()); }

  bool operator==(const TestDictionary& o) const {
    return coords_ == o.coords_ && pairs_ == o.pairs_ && scale_ == o.scale_;
  }

 private:
  std::vector<int> coords_;
  std::vector<std::pair<int, int>> pairs_;  // second == -1 for a single factor
  double scale_ = 1.0;
};

enum class FilterMode { Full, Reduced };

std::string to_string(FilterMode mode);

struct FilterSnapshot {
  double t = 0.0;
  std::vector<double> pi;  // normalized estimate per dictionary function
  double rho1 = 0.0;       // (1/N) sum of Gamma
  double ess = 0.0;
  Eigen::VectorXd mean_x;     // weighted mean of the slow state
  Eigen::VectorXd mean_x_se;  // delta-method standard error of mean_x
};

struct FilterEstimate {
  FilterMode mode = FilterMode::Full;
  int particles = 0;
  std::vector<FilterSnapshot> snapshots;

  void write_csv(std::ostream& out) const;
};

struct FilterSettings {
  int particles = 2000;
  int coarsen = 5;
  std::vector<double> times{1.0};  // multiples of the coarse step
  std::uint64_t seed = 1;
  std::uint64_t replication = 0;
  unsigned threads = 1;
  ManifoldOptions manifold;
};

// Independent signal copies weighted by the Kallianpur-Striebel likelihood of r.
// Full and reduced runs with the same settings drive particle j with the same
// noise stream. Reduced particles start at (x0, H(w_j, x0)).
FilterEstimate run_filter(const SystemModel& model, const ObservationModel& h, const TestDictionary& dict,
                          const ObservationPath& r, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                          FilterMode mode, const FilterSettings& settings);

// Both modes in one pass over the particles.
std::pair<FilterEstimate, FilterEstimate> run_filter_pair(const SystemModel& model, const ObservationModel& h,
                                                          const TestDictionary& dict, const ObservationPath& r,
                                                          const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                                          const FilterSettings& settings);

// Sum_i 2^-i |a_i - b_i| over the dictionary.
double distance_d(const FilterSnapshot& a, const FilterSnapshot& b, const TestDictionary& dict);

struct MartingaleReport {
  double p = 3.0;
  double horizon = 1.0;
  double gamma_mean = 0.0;  // E[Gamma_T]
  double gamma_se = 0.0;
  int gamma_samples = 0;
  bool gamma_pass = false;
  double inverse_moment = 0.0;  // E rho_T(1)^{-p}
  double inverse_moment_se = 0.0;
  int outer_paths = 0;
  int particles = 0;
  double bound = 0.0;  // exp{(p^2/2 + p/2) C_h^2 T}
  bool inverse_pass = false;
  bool pass = false;
};

struct MartingaleSettings {
  double p = 3.0;
  double horizon = 1.0;
  int samples = 10000;      // Gamma_T draws
  int particles = 2000;     // ensemble size inside rho_T(1)
  int outer_paths = 1000;   // observation paths for the inverse moment
  int coarsen = 5;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

// Observation replaced by an independent Brownian motion (the reference law of r).
MartingaleReport verify_martingale_bounds(const SystemModel& model, const ObservationModel& h,
                                          const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                          const MartingaleSettings& settings);

struct ScalingRow {
  double epsilon = 0.0;
  double t = 0.0;
  double p = 3.0;
  double mean_d = 0.0;
  double se_d = 0.0;
  std::vector<double> moment;     // E|pi(phi_i) - pi~(phi_i)|^p
  std::vector<double> moment_se;
  double envelope = 0.0;          // (e^{-4 mu t p / eps} + eps / (4 mu p))^{1/4}
  int replications = 0;           // completed
  int degenerate = 0;             // excluded
  std::vector<double> d_samples;  // one per completed replication
};

struct EnvelopeFit {
  double slope = 0.0;      // of log error on log envelope
  double intercept = 0.0;
  double r_squared = 0.0;
  double c_star = 0.0;     // max error / envelope
  bool pass = false;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double fitted_exponent = 0.0;  // slope of log E[d] on log eps at the largest t
  EnvelopeFit envelope_fit;      // for phi_1 at the largest t
  bool monotone = false;         // E[d] strictly decreasing as eps decreases
  bool monotone_within_se = false;

  void write_csv(std::ostream& out) const;
};

struct ScalingSettings {
  std::vector<double> epsilons{0.1, 0.05, 0.025};
  std::vector<double> times{1.0};
  double p = 3.0;
  int particles = 2000;
  int replications = 20;
  int coarsen = 5;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  ManifoldOptions manifold;
};

// Per replication: one truth and observation path, then the paired full and
// reduced filters on the same observation.
ScalingResult epsilon_scaling_experiment(const SystemModel& base, const ObservationModel& h,
                                         const TestDictionary& dict, const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& y0, const ScalingSettings& settings);

// Backward cells a filter particle path needs before 0 in each mode.
std::int64_t particle_history_cells(const SystemModel& model, FilterMode mode, const ManifoldOptions& opts);

}  // namespace slowfast
