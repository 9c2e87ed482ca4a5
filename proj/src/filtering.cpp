#include "slowfast/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "slowfast/errors.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

namespace {

constexpr std::uint32_t kChannelObservation = 2;
constexpr std::uint64_t kMartingaleTag = 0xFFFF0000ull;
constexpr double kDegeneracyFraction = 0.01;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Coarse indices of the requested times.
std::vector<std::int64_t> coarse_times(const std::vector<double>& times, double coarse_dt) {
  std::vector<std::int64_t> out;
  for (double t : times) {
    const auto c = cell_of(t, coarse_dt);
    if (c < 0) throw DomainError("filter times must be non-negative");
    out.push_back(c);
  }
  if (!std::is_sorted(out.begin(), out.end())) throw DomainError("filter times must be increasing");
  return out;
}

struct ParticleRecord {
  Eigen::MatrixXd phi;        // dictionary values, one column per requested time
  Eigen::MatrixXd x;          // slow state, one column per requested time
  std::vector<double> logw;   // log Gamma per requested time
};

Eigen::MatrixXd coarse_increments(const ObservationPath& r, int coarsen, std::int64_t count) {
  if (r.n_start != 0) throw StructuralError("observation path must start at t = 0");
  if (count * coarsen > r.cells()) throw StructuralError("observation path is shorter than the filter horizon");
  Eigen::MatrixXd out(r.dim3(), count);
  for (std::int64_t c = 0; c < count; ++c) out.col(c) = r.coarse_increment(c, coarsen);
  return out;
}

// Advances one particle over the coarse cells, accumulating log Gamma with h at
// the coarse left point.
void run_particle(const SystemModel& model, const ObservationModel& h, const TestDictionary& dict,
                  const Eigen::MatrixXd& dr, double coarse_dt, int coarsen, const std::vector<std::int64_t>& times,
                  const PathView& path, Eigen::VectorXd x, Eigen::VectorXd y, ParticleRecord& rec) {
  const Stepper st(model, path.dt());
  auto ws = st.workspace();
  Eigen::VectorXd hv(h.dim3());
  rec.phi.resize(dict.size(), static_cast<Eigen::Index>(times.size()));
  rec.x.resize(x.size(), static_cast<Eigen::Index>(times.size()));
  rec.logw.assign(times.size(), 0.0);
  const double z0 = x.norm() + y.norm();
  double logw = 0.0;
  std::size_t next = 0;
  const std::int64_t last = times.empty() ? 0 : times.back();
  for (std::int64_t c = 0;; ++c) {
    while (next < times.size() && times[next] == c) {
      dict.eval_all(x, rec.phi.col(static_cast<Eigen::Index>(next)));
      rec.x.col(static_cast<Eigen::Index>(next)) = x;
      rec.logw[next] = logw;
      ++next;
    }
    if (c >= last) break;
    h.eval(x, y, hv);
    logw += ks_log_weight_step(hv, dr.col(c), coarse_dt);
    for (int q = 0; q < coarsen; ++q) {
      st.step(x, y, path, c * coarsen + q, ws);
    }
    guard_divergence(x.norm() + y.norm(), z0, (c + 1) * coarsen);
  }
}

FilterEstimate reduce(const std::vector<ParticleRecord>& recs, const std::vector<double>& times, FilterMode mode,
                      int m) {
  FilterEstimate est;
  est.mode = mode;
  est.particles = static_cast<int>(recs.size());
  const double n = static_cast<double>(recs.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    double lmax = -std::numeric_limits<double>::infinity();
    for (const auto& r : recs) lmax = std::max(lmax, r.logw[k]);
    if (!std::isfinite(lmax)) throw DegeneracyError("all particle weights are zero or non-finite", 0.0);
    double s = 0.0, s2 = 0.0;
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd xacc = Eigen::VectorXd::Zero(recs.front().x.rows());
    for (const auto& r : recs) {
      const double w = std::exp(r.logw[k] - lmax);
      s += w;
      s2 += w * w;
      acc += w * r.phi.col(kk);
      xacc += w * r.x.col(kk);
    }
    FilterSnapshot snap;
    snap.t = times[k];
    snap.ess = s * s / s2;
    snap.rho1 = std::exp(lmax + std::log(s / n));
    snap.pi.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) snap.pi[static_cast<std::size_t>(i)] = acc[i] / s;
    snap.mean_x = xacc / s;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(xacc.size());
    for (const auto& r : recs) {
      const double w = std::exp(r.logw[k] - lmax) / s;
      var += (w * (r.x.col(kk) - snap.mean_x)).cwiseAbs2();
    }
    snap.mean_x_se = var.cwiseSqrt();
    if (snap.ess < kDegeneracyFraction * n) {
      std::ostringstream msg;
      msg << "effective sample size " << snap.ess << " fell below " << kDegeneracyFraction * n << " at t = " << times[k];
      throw DegeneracyError(msg.str(), snap.ess);
    }
    est.snapshots.push_back(std::move(snap));
  }
  return est;
}

std::shared_ptr<const NoisePath> particle_path(const SystemModel& model, std::int64_t history, std::int64_t cells,
                                               std::uint64_t seed, std::uint64_t stream) {
  Grid g;
  g.dt = model.dt();
  g.first_cell = -history;
  g.end_cell = std::max<std::int64_t>(cells, 1);
  return std::make_shared<const NoisePath>(NoisePath::sample(model.cov1, model.cov2, 0, g, seed, stream));
}

void check_observation_grid(const SystemModel& model, const ObservationPath& r) {
  if (std::abs(r.dt - model.dt()) > 1e-12 * model.dt()) throw StructuralError("observation grid does not match the model step");
}

// Shared driver: runs the selected modes with one noise path per particle.
std::vector<FilterEstimate> run_modes(const SystemModel& model, const ObservationModel& h, const TestDictionary& dict,
                                      const ObservationPath& r, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                      bool full, bool reduced, const FilterSettings& s) {
  model.validate();
  check_observation_grid(model, r);
  if (s.particles < 2) throw DomainError("a filter needs at least 2 particles");
  if (s.coarsen < 1) throw DomainError("coarsening factor must be at least 1");
  if (h.dim3() != r.dim3()) throw StructuralError("observation dimension mismatch");
  const double coarse_dt = model.dt() * s.coarsen;
  const auto times = coarse_times(s.times, coarse_dt);
  const std::int64_t n_coarse = times.empty() ? 0 : times.back();
  const Eigen::MatrixXd dr = coarse_increments(r, s.coarsen, n_coarse);
  const std::int64_t history = reduced ? particle_history_cells(model, FilterMode::Reduced, s.manifold) : 0;
  const auto n = static_cast<std::size_t>(s.particles);
  std::vector<ParticleRecord> full_recs(full ? n : 0), red_recs(reduced ? n : 0);
  parallel_for(n, s.threads, [&](std::size_t j) {
    const auto stream = make_stream_id(StreamRole::kParticle, s.replication, j);
    const PathView path(particle_path(model, history, n_coarse * s.coarsen, s.seed, stream));
    if (full) run_particle(model, h, dict, dr, coarse_dt, s.coarsen, times, path, x0, y0, full_recs[j]);
    if (reduced) {
      const BackwardSolution b = solve_backward(model, x0, std::int64_t{0}, path, s.manifold);
      run_particle(model, h, dict, dr, coarse_dt, s.coarsen, times, path, x0, b.y_anchor(), red_recs[j]);
    }
  });
  std::vector<FilterEstimate> out;
  if (full) out.push_back(reduce(full_recs, s.times, FilterMode::Full, dict.size()));
  if (reduced) out.push_back(reduce(red_recs, s.times, FilterMode::Reduced, dict.size()));
  return out;
}

}  // namespace

Eigen::VectorXd ObservationPath::coarse_increment(std::int64_t c, int coarsen) const {
  if (c < 0 || (c + 1) * coarsen > cells()) throw DomainError("coarse cell outside the observation window");
  return increments.middleCols(c * coarsen, coarsen).rowwise().sum();
}

ObservationPath generate_observation(const Trajectory& truth, const ObservationModel& h, const PathView& path) {
  if (std::abs(truth.dt - path.dt()) > 1e-12 * truth.dt) throw StructuralError("truth grid does not match the noise path");
  if (path.base().dim3() != h.dim3()) throw StructuralError("W3 dimension does not match the observation model");
  ObservationPath r;
  r.dt = truth.dt;
  r.n_start = truth.n_start;
  r.truth_ref = truth.path_ref;
  const std::int64_t cells = truth.size() - 1;
  r.increments.resize(h.dim3(), cells);
  Eigen::VectorXd hv(h.dim3());
  for (std::int64_t i = 0; i < cells; ++i) {
    h.eval(truth.x.col(i), truth.y.col(i), hv);
    r.increments.col(i) = Eigen::Map<const Eigen::VectorXd>(path.w3(truth.n_start + i), h.dim3()) + hv * truth.dt;
  }
  return r;
}

double ks_log_weight_step(const Eigen::Ref<const Eigen::VectorXd>& h_val, const Eigen::Ref<const Eigen::VectorXd>& dr,
                          double dt) {
  if (h_val.size() != dr.size()) throw StructuralError("observation increment has the wrong dimension");
  return h_val.dot(dr) - 0.5 * h_val.squaredNorm() * dt;
}

TestDictionary::TestDictionary(std::vector<int> coords, int m, double scale) : coords_(std::move(coords)), scale_(scale) {
  if (!(scale > 0.0)) throw DomainError("dictionary scale must be positive");
  if (coords_.empty()) throw StructuralError("dictionary needs at least one coordinate");
  const int k = static_cast<int>(coords_.size());
  for (int i = 0; i < k && static_cast<int>(pairs_.size()) < m; ++i) pairs_.emplace_back(i, -1);
  for (int i = 0; i < k && static_cast<int>(pairs_.size()) < m; ++i) {
    for (int j = i + 1; j < k && static_cast<int>(pairs_.size()) < m; ++j) pairs_.emplace_back(i, j);
  }
  if (static_cast<int>(pairs_.size()) < m) throw StructuralError("not enough coordinates for the requested dictionary size");
}

TestDictionary TestDictionary::for_space(const SpaceSpec& slow, int m, double scale) {
  auto idx = displacement_indices(slow);
  if (idx.size() > 8) idx.resize(8);
  return TestDictionary(idx, m, scale);
}

double TestDictionary::eval(int i, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto [a, b] = pairs_[static_cast<std::size_t>(i)];
  const double fa = std::tanh(x[coords_[static_cast<std::size_t>(a)]] / scale_);
  if (b < 0) return fa;
  return fa * std::tanh(x[coords_[static_cast<std::size_t>(b)]] / scale_);
}

void TestDictionary::eval_all(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const {
  double base[64];
  const auto k = std::min<std::size_t>(coords_.size(), 64);
  for (std::size_t i = 0; i < k; ++i) base[i] = std::tanh(x[coords_[i]] / scale_);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto [a, b] = pairs_[i];
    out[static_cast<Eigen::Index>(i)] = b < 0 ? base[a] : base[a] * base[b];
  }
}

double TestDictionary::lipschitz(int i) const {
  return pairs_[static_cast<std::size_t>(i)].second < 0 ? 1.0 / scale_ : std::sqrt(2.0) / scale_;
}

std::string to_string(FilterMode mode) { return mode == FilterMode::Full ? "full" : "reduced"; }

void FilterEstimate::write_csv(std::ostream& out) const {
  out << "t";
  const std::size_t m = snapshots.empty() ? 0 : snapshots.front().pi.size();
  for (std::size_t i = 0; i < m; ++i) out << ",pi_phi" << i + 1;
  out << ",rho1,ess\n";
  for (const auto& s : snapshots) {
    out << fmt(s.t);
    for (double v : s.pi) out << ',' << fmt(v);
    out << ',' << fmt(s.rho1) << ',' << fmt(s.ess) << "\n";
  }
}

std::int64_t particle_history_cells(const SystemModel& model, FilterMode mode, const ManifoldOptions& opts) {
  return mode == FilterMode::Reduced ? manifold_backward_cells(model, model.dt(), opts) : 0;
}

FilterEstimate run_filter(const SystemModel& model, const ObservationModel& h, const TestDictionary& dict,
                          const ObservationPath& r, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                          FilterMode mode, const FilterSettings& settings) {
  auto out = run_modes(model, h, dict, r, x0, y0, mode == FilterMode::Full, mode == FilterMode::Reduced, settings);
  return std::move(out.front());
}

std::pair<FilterEstimate, FilterEstimate> run_filter_pair(const SystemModel& model, const ObservationModel& h,
                                                          const TestDictionary& dict, const ObservationPath& r,
                                                          const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                                          const FilterSettings& settings) {
  auto out = run_modes(model, h, dict, r, x0, y0, true, true, settings);
  return {std::move(out[0]), std::move(out[1])};
}

double distance_d(const FilterSnapshot& a, const FilterSnapshot& b, const TestDictionary& dict) {
  const auto m = static_cast<std::size_t>(dict.size());
  if (a.pi.size() != m || b.pi.size() != m) throw StructuralError("estimates were not evaluated on this dictionary");
  double d = 0.0;
  for (std::size_t i = 0; i < m; ++i) d += dict.weight(static_cast<int>(i)) * std::abs(a.pi[i] - b.pi[i]);
  return d;
}

MartingaleReport verify_martingale_bounds(const SystemModel& model, const ObservationModel& h,
                                          const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                          const MartingaleSettings& s) {
  model.validate();
  MartingaleReport rep;
  rep.p = s.p;
  rep.horizon = s.horizon;
  rep.gamma_samples = s.samples;
  rep.outer_paths = s.outer_paths;
  rep.particles = s.particles;
  rep.bound = std::exp((0.5 * s.p * s.p + 0.5 * s.p) * h.c_h() * h.c_h() * s.horizon);

  const double coarse_dt = model.dt() * s.coarsen;
  const std::int64_t n_coarse = cell_of(s.horizon, coarse_dt);
  const int d3 = h.dim3();
  const auto signals = static_cast<std::size_t>(std::max(s.samples, s.particles));
  const Eigen::Index width = static_cast<Eigen::Index>(n_coarse) * d3;

  // h along each signal path at the coarse left points, flattened row-wise.
  Eigen::MatrixXd hpath(static_cast<Eigen::Index>(signals), width);
  Eigen::VectorXd half_energy(static_cast<Eigen::Index>(signals));
  parallel_for(signals, s.threads, [&](std::size_t j) {
    const PathView path(particle_path(model, 0, n_coarse * s.coarsen, s.seed,
                                      make_stream_id(StreamRole::kParticle, kMartingaleTag, j)));
    const Stepper st(model, path.dt());
    auto ws = st.workspace();
    Eigen::VectorXd x = x0, y = y0, hv(d3);
    double e = 0.0;
    for (std::int64_t c = 0; c < n_coarse; ++c) {
      h.eval(x, y, hv);
      hpath.row(static_cast<Eigen::Index>(j)).segment(c * d3, d3) = hv.transpose();
      e += 0.5 * hv.squaredNorm() * coarse_dt;
      for (int q = 0; q < s.coarsen; ++q) st.step(x, y, path, c * s.coarsen + q, ws);
    }
    half_energy[static_cast<Eigen::Index>(j)] = e;
  });

  const auto brownian = [&](std::uint64_t tag, std::size_t k, Eigen::Ref<Eigen::VectorXd> out) {
    const GaussianSource src(s.seed, make_stream_id(StreamRole::kObservationReference, tag, k));
    const double scale = std::sqrt(coarse_dt);
    for (std::int64_t c = 0; c < n_coarse; ++c) {
      src.fill(c, kChannelObservation, out.data() + c * d3, static_cast<std::size_t>(d3));
    }
    out *= scale;
  };

  // E[Gamma_T]: signal j paired with its own reference observation.
  std::vector<double> gam(static_cast<std::size_t>(s.samples));
  parallel_for(gam.size(), s.threads, [&](std::size_t j) {
    Eigen::VectorXd dr(width);
    brownian(kMartingaleTag, j, dr);
    gam[j] = std::exp(hpath.row(static_cast<Eigen::Index>(j)).dot(dr) - half_energy[static_cast<Eigen::Index>(j)]);
  });
  rep.gamma_mean = mean_of(gam);
  rep.gamma_se = se_of(gam);
  rep.gamma_pass = std::abs(rep.gamma_mean - 1.0) <= 3.0 * rep.gamma_se;

  // E rho_T(1)^{-p}: the first `particles` signals against each outer path.
  Eigen::MatrixXd dr_all(width, s.outer_paths);
  for (int k = 0; k < s.outer_paths; ++k) brownian(kMartingaleTag + 1, static_cast<std::size_t>(k), dr_all.col(k));
  const Eigen::MatrixXd logw = (hpath.topRows(s.particles) * dr_all).colwise() - half_energy.head(s.particles);
  std::vector<double> inv(static_cast<std::size_t>(s.outer_paths));
  for (int k = 0; k < s.outer_paths; ++k) {
    const double lmax = logw.col(k).maxCoeff();
    const double log_rho = lmax + std::log((logw.col(k).array() - lmax).exp().sum() / s.particles);
    inv[static_cast<std::size_t>(k)] = std::exp(-s.p * log_rho);
  }
  rep.inverse_moment = mean_of(inv);
  rep.inverse_moment_se = se_of(inv);
  const double rel = rep.inverse_moment > 0.0 ? rep.inverse_moment_se / rep.inverse_moment : 0.0;
  rep.inverse_pass = rep.inverse_moment <= rep.bound * (1.0 + 3.0 * rel);
  rep.pass = rep.gamma_pass && rep.inverse_pass;
  return rep;
}

void ScalingResult::write_csv(std::ostream& out) const {
  out << "epsilon,t,p,mean_d,se_d,moment_phi1,moment_phi1_se,envelope,replications,degenerate,fitted_exponent\n";
  for (const auto& r : rows) {
    out << fmt(r.epsilon) << ',' << fmt(r.t) << ',' << fmt(r.p) << ',' << fmt(r.mean_d) << ',' << fmt(r.se_d) << ','
        << fmt(r.moment.empty() ? 0.0 : r.moment[0]) << ',' << fmt(r.moment_se.empty() ? 0.0 : r.moment_se[0]) << ','
        << fmt(r.envelope) << ',' << r.replications << ',' << r.degenerate << ',' << fmt(fitted_exponent) << "\n";
  }
}

ScalingResult epsilon_scaling_experiment(const SystemModel& base, const ObservationModel& h,
                                         const TestDictionary& dict, const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& y0, const ScalingSettings& s) {
  if (s.epsilons.empty() || s.times.empty()) throw DomainError("scaling experiment needs epsilons and times");
  ScalingResult res;
  const double t_max = *std::max_element(s.times.begin(), s.times.end());
  const auto m = static_cast<std::size_t>(dict.size());
  for (std::size_t e = 0; e < s.epsilons.size(); ++e) {
    const SystemModel model = base.with_epsilon(s.epsilons[e]);
    model.validate();
    const double dt = model.dt();
    const std::int64_t cells = cell_of(t_max, dt * s.coarsen) * s.coarsen;
    std::vector<std::vector<double>> d(s.times.size());
    std::vector<std::vector<std::vector<double>>> mom(s.times.size(), std::vector<std::vector<double>>(m));
    int degenerate = 0;
    for (int r = 0; r < s.replications; ++r) {
      const std::uint64_t tag = (static_cast<std::uint64_t>(e) << 32) | static_cast<std::uint64_t>(r);
      Grid g;
      g.dt = dt;
      g.first_cell = 0;
      g.end_cell = cells;
      const PathView truth_path(std::make_shared<const NoisePath>(NoisePath::sample(
          model.cov1, model.cov2, h.dim3(), g, s.seed, make_stream_id(StreamRole::kTruth, tag, 0))));
      const Trajectory truth = integrate_cells(model, x0, y0, truth_path, 0, cells);
      const ObservationPath obs = generate_observation(truth, h, truth_path);
      FilterSettings fs;
      fs.particles = s.particles;
      fs.coarsen = s.coarsen;
      fs.times = s.times;
      fs.seed = s.seed;
      fs.replication = tag;
      fs.threads = s.threads;
      fs.manifold = s.manifold;
      try {
        const auto [full, red] = run_filter_pair(model, h, dict, obs, x0, y0, fs);
        for (std::size_t k = 0; k < s.times.size(); ++k) {
          d[k].push_back(distance_d(full.snapshots[k], red.snapshots[k], dict));
          for (std::size_t i = 0; i < m; ++i)
            mom[k][i].push_back(std::pow(std::abs(full.snapshots[k].pi[i] - red.snapshots[k].pi[i]), s.p));
        }
      } catch (const DegeneracyError&) {
        ++degenerate;
      }
    }
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      ScalingRow row;
      row.epsilon = s.epsilons[e];
      row.t = s.times[k];
      row.p = s.p;
      row.degenerate = degenerate;
      row.replications = static_cast<int>(d[k].size());
      row.envelope = std::pow(std::exp(-4.0 * model.params.mu * row.t * s.p / row.epsilon) +
                                  row.epsilon / (4.0 * model.params.mu * s.p),
                              0.25);
      if (!d[k].empty()) {
        row.mean_d = mean_of(d[k]);
        row.se_d = se_of(d[k]);
        for (std::size_t i = 0; i < m; ++i) {
          row.moment.push_back(mean_of(mom[k][i]));
          row.moment_se.push_back(se_of(mom[k][i]));
        }
      }
      row.d_samples = d[k];
      res.rows.push_back(std::move(row));
    }
  }

  // Summaries at the largest t, epsilons in decreasing order.
  std::vector<const ScalingRow*> last;
  for (const auto& r : res.rows) {
    if (r.t == t_max && r.replications > 0) last.push_back(&r);
  }
  std::sort(last.begin(), last.end(), [](const ScalingRow* a, const ScalingRow* b) { return a->epsilon > b->epsilon; });
  if (last.size() >= 2) {
    std::vector<double> le, ld, lenv, lm;
    bool positive = true;
    for (const auto* r : last) {
      positive = positive && r->mean_d > 0.0 && !r->moment.empty() && r->moment[0] > 0.0;
      le.push_back(std::log(r->epsilon));
      ld.push_back(std::log(std::max(r->mean_d, 1e-300)));
      lenv.push_back(std::log(r->envelope));
      lm.push_back(std::log(std::max(r->moment.empty() ? 0.0 : r->moment[0], 1e-300)));
    }
    res.fitted_exponent = fit_line(le, ld).slope;
    res.monotone = true;
    res.monotone_within_se = true;
    for (std::size_t i = 1; i < last.size(); ++i) {
      const double combined = std::hypot(last[i]->se_d, last[i - 1]->se_d);
      if (!(last[i]->mean_d < last[i - 1]->mean_d)) res.monotone = false;
      if (last[i]->mean_d > last[i - 1]->mean_d + 2.0 * combined) res.monotone_within_se = false;
    }
    const LineFit f = fit_line(lenv, lm);
    res.envelope_fit.slope = f.slope;
    res.envelope_fit.intercept = f.intercept;
    res.envelope_fit.r_squared = f.r_squared;
    for (const auto* r : last) {
      if (!r->moment.empty()) res.envelope_fit.c_star = std::max(res.envelope_fit.c_star, r->moment[0] / r->envelope);
    }
    res.envelope_fit.pass = positive && f.slope > 0.0 && f.r_squared >= 0.8 && res.envelope_fit.c_star > 0.0;
  }
  return res;
}

}  // namespace slowfast
