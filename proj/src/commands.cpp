#include "slowfast/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "slowfast/errors.hpp"
#include "slowfast/filtering.hpp"
#include "slowfast/manifold.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/simulate.hpp"
#include "slowfast/stats.hpp"

namespace slowfast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json number_or_text(double v) {
  if (std::isinf(v)) return "unconstrained";
  if (std::isnan(v)) return nullptr;
  return v;
}

// Artifacts written by one command, plus the manifest.
class RunOutput {
 public:
  RunOutput(const ScenarioConfig& cfg, const CommandOptions& opts, std::string command)
      : cfg_(cfg), command_(std::move(command)), started_(utc_now()) {
    dir_ = opts.out_dir ? *opts.out_dir : cfg.run.output_dir;
    seed_ = opts.seed ? *opts.seed : cfg.run.seed;
    threads_ = opts.threads;
    fs::create_directories(dir_);
  }

  std::uint64_t seed() const { return seed_; }
  unsigned threads() const { return threads_; }

  template <typename Writer>
  void file(const std::string& name, Writer&& writer) {
    const fs::path p = fs::path(dir_) / name;
    {
      std::ofstream out(p, std::ios::binary);
      if (!out) throw Error("cannot write " + p.string());
      writer(out);
    }
    files_.push_back(name);
  }

  void json_file(const std::string& name, const json& j) {
    file(name, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
  }

  void manifest() {
    json m;
    m["command"] = command_;
    m["version"] = kVersion;
    m["config_hash"] = hex64(config_hash(cfg_.source));
    m["seed"] = seed_;
    m["threads"] = threads_;
    const SystemParams& p = cfg_.model.params;
    json d;
    d["gamma1"] = p.gamma1;
    d["gamma2"] = p.gamma2;
    d["L"] = p.lipschitz;
    d["mu"] = p.mu;
    d["C_h"] = p.c_h;
    try {
      d["epsilon0"] = number_or_text(compute_epsilon0(p));
    } catch (const AdmissibilityError&) {
      d["epsilon0"] = nullptr;
    }
    json ms = json::array();
    std::vector<double> eps = cfg_.epsilon_list;
    eps.erase(std::remove(eps.begin(), eps.end(), p.epsilon), eps.end());
    eps.insert(eps.begin(), p.epsilon);
    for (double e : eps) {
      SystemParams q = p;
      q.epsilon = e;
      json row;
      row["epsilon"] = e;
      try {
        row["M"] = compute_contraction_constant(q);
      } catch (const AdmissibilityError&) {
        row["M"] = nullptr;
      }
      ms.push_back(row);
    }
    d["M"] = ms;
    try {
      d["lip_bound"] = manifold_lipschitz_bound(p);
    } catch (const AdmissibilityError&) {
      d["lip_bound"] = nullptr;
    }
    m["derived"] = d;
    m["started"] = started_;
    m["finished"] = utc_now();
    json inv = json::array();
    for (const auto& f : files_) {
      std::ifstream in(fs::path(dir_) / f, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string body = ss.str();
      inv.push_back({{"file", f}, {"bytes", body.size()}, {"fnv1a", hex64(config_hash(body))}});
    }
    m["files"] = inv;
    const fs::path p_manifest = fs::path(dir_) / "manifest.json";
    std::ofstream out(p_manifest);
    out << m.dump(2) << "\n";
  }

 private:
  const ScenarioConfig& cfg_;
  std::string command_;
  std::string started_;
  std::string dir_;
  std::uint64_t seed_ = 0;
  unsigned threads_ = 1;
  std::vector<std::string> files_;
};

json report_json(const HypothesisReport& r) {
  json j;
  j["overall"] = r.overall;
  j["h1_norm"] = r.h1_norm;
  j["gamma1"] = r.gamma1;
  j["gamma2"] = r.gamma2;
  j["L"] = r.lipschitz;
  j["mu"] = r.mu;
  j["mu_window"] = {0.0, r.mu_upper};
  j["epsilon0"] = number_or_text(r.epsilon0);
  json vs = json::array();
  for (const auto& v : r.verdicts) {
    vs.push_back({{"name", v.name}, {"pass", v.pass}, {"measured", number_or_text(v.measured)},
                  {"threshold", number_or_text(v.threshold)}, {"detail", v.detail}});
  }
  j["verdicts"] = vs;
  json es = json::array();
  for (const auto& e : r.epsilons) {
    es.push_back({{"epsilon", e.epsilon}, {"M", number_or_text(e.contraction)}, {"admissible", e.admissible}});
  }
  j["epsilons"] = es;
  return j;
}

void print_report(const HypothesisReport& r, std::ostream& log) {
  for (const auto& v : r.verdicts) {
    log << (v.pass ? "PASS " : "FAIL ") << v.name << "  measured=" << v.measured << "  threshold=" << v.threshold
        << "  " << v.detail << "\n";
  }
  log << "gamma1=" << r.gamma1 << " gamma2=" << r.gamma2 << " L=" << r.lipschitz << " mu=" << r.mu
      << " mu window=(0, " << r.mu_upper << ") epsilon0=";
  if (std::isinf(r.epsilon0)) {
    log << "unconstrained";
  } else {
    log << r.epsilon0;
  }
  log << " (" << r.h1_norm << " norm for H1)\n";
  for (const auto& e : r.epsilons) log << "  epsilon=" << e.epsilon << " M=" << e.contraction << (e.admissible ? "" : " (inadmissible)") << "\n";
  log << (r.overall ? "hypotheses: pass" : "hypotheses: FAIL") << "\n";
}

std::vector<double> check_epsilons(const ScenarioConfig& cfg) {
  std::vector<double> eps{cfg.model.params.epsilon};
  for (double e : cfg.epsilon_list) {
    if (e != cfg.model.params.epsilon) eps.push_back(e);
  }
  return eps;
}

// Noise path for the truth of a simulate run: history for the tracking solve.
std::shared_ptr<const NoisePath> truth_path(const ScenarioConfig& cfg, std::uint64_t seed, double horizon) {
  const SystemModel& m = cfg.model;
  const double dt = m.dt();
  Grid g;
  g.dt = dt;
  g.first_cell = -tracking_backward_cells(m, dt, cfg.tracking);
  g.end_cell = std::max(cell_of(horizon, dt), tracking_forward_cells(m, dt, cfg.tracking)) + 1;
  return std::make_shared<const NoisePath>(NoisePath::sample(m.cov1, m.cov2, cfg.observation.dim3(), g, seed,
                                                             make_stream_id(StreamRole::kTruth, 0, 0)));
}

}  // namespace

HypothesisReport check_scenario(const ScenarioConfig& cfg) {
  return check_hypotheses(cfg.model, &cfg.observation, check_epsilons(cfg));
}

int cmd_check(const ScenarioConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  RunOutput out(cfg, opts, "check");
  const HypothesisReport r = check_scenario(cfg);
  print_report(r, log);
  out.json_file("check.json", report_json(r));
  out.manifest();
  return r.overall ? kExitPass : kExitHypothesis;
}

int cmd_simulate(const ScenarioConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  RunOutput out(cfg, opts, "simulate");
  const HypothesisReport r = check_scenario(cfg);
  if (!r.overall) {
    print_report(r, log);
    out.json_file("check.json", report_json(r));
    out.manifest();
    return kExitHypothesis;
  }
  const SystemModel& m = cfg.model;
  const double horizon = cfg.simulate.horizon;
  const auto base = truth_path(cfg, out.seed(), horizon);
  const PathView path(base);
  const Eigen::VectorXd x0 = cfg.initial_x(), y0 = cfg.initial_y();

  const Trajectory full = integrate_full(m, x0, y0, path, 0.0, horizon);
  const ManifoldMap manifold(m, path, 0.0, cfg.manifold);
  Eigen::VectorXd xr = x0, yr;
  json info;
  if (cfg.simulate.reduced_init == ReducedInit::Tracking) {
    const TrackingSolution ts = solve_tracking(m, x0, y0, path, cfg.tracking);
    xr = ts.x_tilde0;
    yr = ts.y_tilde0;
    info["reduced_init"] = "tracking";
    info["tracking_iterations"] = ts.iterations;
    info["tracking_residual"] = ts.residual;
    info["R"] = ts.bound.value;
    info["M"] = ts.contraction;
    info["envelope_constant"] = ts.envelope_constant;
    info["worst_envelope_ratio"] = ts.worst_envelope_ratio;
  } else {
    yr = manifold.evaluate(x0);
    info["reduced_init"] = "slow";
  }
  const Trajectory reduced = integrate_reduced(m, xr, manifold, path, 0.0, horizon, FastSlotPolicy::Propagated, &yr);

  std::vector<double> ts, gap;
  for (std::int64_t i = 0; i < full.size(); ++i) {
    ts.push_back(full.time(i));
    gap.push_back((full.x.col(i) - reduced.x.col(i)).norm() + (full.y.col(i) - reduced.y.col(i)).norm());
  }
  const double fit_end = std::min(horizon, 10.0 * m.params.epsilon / m.params.mu);
  const double floor = 1e-12 * (1.0 + x0.norm() + y0.norm());
  info["fit_window"] = {0.0, fit_end};
  info["rounding_floor"] = floor;
  info["slope_target"] = -0.8 * m.params.mu / m.params.epsilon;
  try {
    const LineFit f = fit_log_decay(ts, gap, fit_end, floor);
    info["gap_slope"] = f.slope;
    info["gap_fit_points"] = f.points;
    info["gap_slope_ok"] = f.slope <= -0.8 * m.params.mu / m.params.epsilon;
    log << "gap slope " << f.slope << " over [0, " << fit_end << "] (target <= " << -0.8 * m.params.mu / m.params.epsilon
        << ")\n";
  } catch (const DomainError&) {
    info["gap_slope"] = nullptr;
    log << "gap below the rounding floor on the whole fit window\n";
  }
  info["epsilon"] = m.params.epsilon;
  info["mu"] = m.params.mu;
  info["horizon"] = horizon;
  info["gap_initial"] = gap.front();
  info["gap_final"] = gap.back();

  out.file("full.csv", [&](std::ostream& o) { full.write_csv(o); });
  out.file("reduced.csv", [&](std::ostream& o) { reduced.write_csv(o); });
  out.file("gap.csv", [&](std::ostream& o) {
    o << "t,gap\n";
    char buf[64];
    for (std::size_t i = 0; i < ts.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", ts[i], gap[i]);
      o << buf;
    }
  });
  out.file("noise_path.bin", [&](std::ostream& o) { base->write(o); });
  out.file("full.bin", [&](std::ostream& o) { full.write(o); });
  out.json_file("simulate.json", info);
  out.manifest();
  log << "full and reduced trajectories written (" << full.size() << " grid points)\n";
  return kExitPass;
}

int cmd_filter(const ScenarioConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  RunOutput out(cfg, opts, "filter");
  const HypothesisReport r = check_scenario(cfg);
  if (!r.overall) {
    print_report(r, log);
    out.json_file("check.json", report_json(r));
    out.manifest();
    return kExitHypothesis;
  }
  const SystemModel& m = cfg.model;
  const FilterOptions& fo = cfg.filter;
  const Eigen::VectorXd x0 = cfg.initial_x(), y0 = cfg.initial_y();
  const TestDictionary dict = TestDictionary::for_space(m.A.space(), fo.dictionary_size, fo.dictionary_scale);
  const double t_max = *std::max_element(fo.times.begin(), fo.times.end());

  // Time series of one paired run at the configured epsilon.
  const double coarse_dt = m.dt() * fo.coarsen;
  const std::int64_t n_coarse = cell_of(t_max, coarse_dt);
  Grid g;
  g.dt = m.dt();
  g.first_cell = 0;
  g.end_cell = n_coarse * fo.coarsen;
  const PathView tpath(std::make_shared<const NoisePath>(NoisePath::sample(
      m.cov1, m.cov2, cfg.observation.dim3(), g, out.seed(), make_stream_id(StreamRole::kTruth, 0, 0))));
  const Trajectory truth = integrate_cells(m, x0, y0, tpath, 0, g.end_cell);
  const ObservationPath obs = generate_observation(truth, cfg.observation, tpath);
  FilterSettings fs;
  fs.particles = fo.particles;
  fs.coarsen = fo.coarsen;
  fs.seed = out.seed();
  fs.threads = out.threads();
  fs.manifold = cfg.manifold;
  fs.times.clear();
  for (std::int64_t c = 0; c <= n_coarse; ++c) fs.times.push_back(static_cast<double>(c) * coarse_dt);
  const auto [full, reduced] = run_filter_pair(m, cfg.observation, dict, obs, x0, y0, fs);
  out.file("filter_full.csv", [&](std::ostream& o) { full.write_csv(o); });
  out.file("filter_reduced.csv", [&](std::ostream& o) { reduced.write_csv(o); });
  out.file("observation.csv", [&](std::ostream& o) {
    o << "t";
    for (int i = 0; i < obs.dim3(); ++i) o << ",dr" << i;
    o << "\n";
    char buf[32];
    for (std::int64_t c = 0; c < obs.cells(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(c) * obs.dt);
      o << buf;
      for (int i = 0; i < obs.dim3(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", obs.increments(i, c));
        o << ',' << buf;
      }
      o << "\n";
    }
  });

  ScalingSettings ss;
  ss.epsilons = cfg.epsilon_list;
  ss.times = fo.times;
  ss.p = fo.p;
  ss.particles = fo.particles;
  ss.replications = cfg.run.replications;
  ss.coarsen = fo.coarsen;
  ss.seed = out.seed();
  ss.threads = out.threads();
  ss.manifold = cfg.manifold;
  const ScalingResult sc = epsilon_scaling_experiment(m, cfg.observation, dict, x0, y0, ss);
  out.file("scaling.csv", [&](std::ostream& o) { sc.write_csv(o); });
  json sj;
  json rows = json::array();
  for (const auto& row : sc.rows) {
    rows.push_back({{"epsilon", row.epsilon}, {"t", row.t}, {"p", row.p}, {"mean_d", row.mean_d}, {"se_d", row.se_d},
                    {"moment", row.moment}, {"moment_se", row.moment_se}, {"envelope", row.envelope},
                    {"replications", row.replications}, {"degenerate", row.degenerate}});
  }
  sj["rows"] = rows;
  sj["fitted_exponent"] = sc.fitted_exponent;
  sj["monotone"] = sc.monotone;
  sj["monotone_within_2se"] = sc.monotone_within_se;
  sj["envelope_fit"] = {{"slope", sc.envelope_fit.slope}, {"intercept", sc.envelope_fit.intercept},
                        {"r_squared", sc.envelope_fit.r_squared}, {"c_star", sc.envelope_fit.c_star},
                        {"pass", sc.envelope_fit.pass}};
  sj["dictionary_tail_bound"] = dict.tail_bound();
  out.json_file("scaling.json", sj);

  MartingaleSettings ms;
  ms.p = fo.p;
  ms.horizon = m.params.horizon_T;
  ms.samples = fo.martingale_samples;
  ms.particles = fo.particles;
  ms.outer_paths = fo.martingale_paths;
  ms.coarsen = fo.coarsen;
  ms.seed = out.seed();
  ms.threads = out.threads();
  const MartingaleReport mr = verify_martingale_bounds(m, cfg.observation, x0, y0, ms);
  out.json_file("martingale.json",
                {{"p", mr.p}, {"T", mr.horizon}, {"gamma_mean", mr.gamma_mean}, {"gamma_se", mr.gamma_se},
                 {"gamma_samples", mr.gamma_samples}, {"gamma_pass", mr.gamma_pass},
                 {"inverse_moment", mr.inverse_moment}, {"inverse_moment_se", mr.inverse_moment_se},
                 {"outer_paths", mr.outer_paths}, {"particles", mr.particles}, {"bound", mr.bound},
                 {"inverse_pass", mr.inverse_pass}, {"pass", mr.pass}});
  out.manifest();

  for (const auto& row : sc.rows) {
    log << "epsilon=" << row.epsilon << " t=" << row.t << " E[d]=" << row.mean_d << " +- " << row.se_d
        << " (" << row.replications << " runs, " << row.degenerate << " degenerate)\n";
  }
  log << "fitted exponent " << sc.fitted_exponent << ", strictly decreasing: " << (sc.monotone ? "yes" : "no") << "\n";
  log << "E[Gamma_T]=" << mr.gamma_mean << " +- " << mr.gamma_se << ", E rho_T(1)^-p=" << mr.inverse_moment
      << " (bound " << mr.bound << ")\n";
  return kExitPass;
}

int run_command(const std::string& command, const std::string& config_path, const CommandOptions& opts,
                std::ostream& log, std::ostream& err) {
  try {
    const ScenarioConfig cfg = config_path.empty() ? thermoelastic_scenario() : load_scenario(config_path);
    if (command == "check") return cmd_check(cfg, opts, log);
    if (command == "simulate") return cmd_simulate(cfg, opts, log);
    if (command == "filter") return cmd_filter(cfg, opts, log);
    err << "unknown command " << command << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const AdmissibilityError& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return kExitHypothesis;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const ConvergenceError& e) {
    err << "no convergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DegeneracyError& e) {
    err << "filter degeneracy: " << e.what() << "\n";
    return kExitDegeneracy;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace slowfast
