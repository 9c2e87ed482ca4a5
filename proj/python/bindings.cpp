#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <sstream>

#include "slowfast/commands.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/filtering.hpp"
#include "slowfast/hypotheses.hpp"
#include "slowfast/manifold.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/scenario.hpp"
#include "slowfast/simulate.hpp"

namespace py = pybind11;
using namespace slowfast;

namespace {

PathView truth_path(const ScenarioConfig& cfg, const SystemModel& m, std::int64_t first, std::int64_t end,
                    std::uint64_t seed) {
  Grid g;
  g.dt = m.dt();
  g.first_cell = first;
  g.end_cell = end;
  return PathView(std::make_shared<const NoisePath>(NoisePath::sample(
      m.cov1, m.cov2, cfg.observation.dim3(), g, seed, make_stream_id(StreamRole::kTruth, 0, 0))));
}

SystemModel model_at(const ScenarioConfig& cfg, std::optional<double> epsilon) {
  return epsilon ? cfg.model.with_epsilon(*epsilon) : cfg.model;
}

py::dict check(const ScenarioConfig& cfg) {
  const HypothesisReport r = check_scenario(cfg);
  py::list verdicts;
  for (const auto& v : r.verdicts) {
    py::dict d;
    d["name"] = v.name;
    d["pass"] = v.pass;
    d["measured"] = v.measured;
    d["threshold"] = v.threshold;
    d["detail"] = v.detail;
    verdicts.append(d);
  }
  py::dict out;
  out["overall"] = r.overall;
  out["gamma1"] = r.gamma1;
  out["gamma2"] = r.gamma2;
  out["L"] = r.lipschitz;
  out["mu"] = r.mu;
  out["mu_upper"] = r.mu_upper;
  out["epsilon0"] = r.epsilon0;
  out["h1_norm"] = r.h1_norm;
  out["verdicts"] = verdicts;
  return out;
}

py::dict simulate(const ScenarioConfig& cfg, double horizon, std::uint64_t seed, const std::string& reduced_init) {
  const SystemModel& m = cfg.model;
  const double dt = m.dt();
  const std::int64_t first = -tracking_backward_cells(m, dt, cfg.tracking);
  const std::int64_t end = std::max(cell_of(horizon, dt), tracking_forward_cells(m, dt, cfg.tracking)) + 1;
  const PathView path = truth_path(cfg, m, first, end, seed);
  const Eigen::VectorXd x0 = cfg.initial_x(), y0 = cfg.initial_y();
  const Trajectory full = integrate_full(m, x0, y0, path, 0.0, horizon);
  const ManifoldMap manifold(m, path, 0.0, cfg.manifold);
  Eigen::VectorXd xr = x0, yr;
  if (reduced_init == "tracking") {
    const TrackingSolution ts = solve_tracking(m, x0, y0, path, cfg.tracking);
    xr = ts.x_tilde0;
    yr = ts.y_tilde0;
  } else if (reduced_init == "slow") {
    yr = manifold.evaluate(x0);
  } else {
    throw py::value_error("reduced_init must be 'tracking' or 'slow'");
  }
  const Trajectory red = integrate_reduced(m, xr, manifold, path, 0.0, horizon, FastSlotPolicy::Propagated, &yr);
  Eigen::VectorXd t(full.size()), gap(full.size());
  for (std::int64_t i = 0; i < full.size(); ++i) {
    t[i] = full.time(i);
    gap[i] = (full.x.col(i) - red.x.col(i)).norm() + (full.y.col(i) - red.y.col(i)).norm();
  }
  py::dict out;
  out["t"] = t;
  out["x"] = Eigen::MatrixXd(full.x.transpose());
  out["y"] = Eigen::MatrixXd(full.y.transpose());
  out["x_reduced"] = Eigen::MatrixXd(red.x.transpose());
  out["y_reduced"] = Eigen::MatrixXd(red.y.transpose());
  out["gap"] = gap;
  return out;
}

py::dict manifold_point(const ScenarioConfig& cfg, const Eigen::VectorXd& x0, std::uint64_t seed,
                        std::optional<double> epsilon) {
  const SystemModel m = model_at(cfg, epsilon);
  const std::int64_t nb = manifold_backward_cells(m, m.dt(), cfg.manifold);
  const PathView path = truth_path(cfg, m, -nb - 1, 1, seed);
  const BackwardSolution sol = solve_backward(m, x0, std::int64_t{0}, path, cfg.manifold);
  py::dict out;
  out["y"] = sol.y_anchor();
  out["iterations"] = sol.iterations;
  out["residual"] = sol.residual;
  out["ratios"] = sol.ratios;
  out["contraction"] = compute_contraction_constant(m.params);
  out["lipschitz_bound"] = manifold_lipschitz_bound(m.params);
  return out;
}

py::dict filter_pair(const ScenarioConfig& cfg, std::uint64_t seed, std::optional<int> particles,
                     std::vector<double> times, unsigned threads) {
  const SystemModel& m = cfg.model;
  const FilterOptions& fo = cfg.filter;
  if (times.empty()) times = fo.times;
  const double t_max = *std::max_element(times.begin(), times.end());
  const std::int64_t cells = cell_of(t_max, m.dt() * fo.coarsen) * fo.coarsen;
  const PathView path = truth_path(cfg, m, 0, cells, seed);
  const Trajectory truth = integrate_cells(m, cfg.initial_x(), cfg.initial_y(), path, 0, cells);
  const ObservationPath obs = generate_observation(truth, cfg.observation, path);
  const TestDictionary dict = TestDictionary::for_space(m.A.space(), fo.dictionary_size, fo.dictionary_scale);
  FilterSettings fs;
  fs.particles = particles.value_or(fo.particles);
  fs.coarsen = fo.coarsen;
  fs.times = times;
  fs.seed = seed;
  fs.threads = threads;
  fs.manifold = cfg.manifold;
  const auto [full, reduced] = run_filter_pair(m, cfg.observation, dict, obs, cfg.initial_x(), cfg.initial_y(), fs);
  const auto pack = [](const FilterEstimate& e) {
    const auto k = static_cast<Eigen::Index>(e.snapshots.size());
    const auto mdim = static_cast<Eigen::Index>(e.snapshots.front().pi.size());
    Eigen::MatrixXd pi(k, mdim), mean(k, e.snapshots.front().mean_x.size());
    Eigen::VectorXd ess(k), rho1(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& s = e.snapshots[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < mdim; ++j) pi(i, j) = s.pi[static_cast<std::size_t>(j)];
      mean.row(i) = s.mean_x.transpose();
      ess[i] = s.ess;
      rho1[i] = s.rho1;
    }
    py::dict d;
    d["pi"] = pi;
    d["mean_x"] = mean;
    d["ess"] = ess;
    d["rho1"] = rho1;
    return d;
  };
  Eigen::VectorXd dist(static_cast<Eigen::Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i)
    dist[static_cast<Eigen::Index>(i)] = distance_d(full.snapshots[i], reduced.snapshots[i], dict);
  py::dict out;
  out["t"] = times;
  out["full"] = pack(full);
  out["reduced"] = pack(reduced);
  out["distance"] = dist;
  return out;
}

int run(const std::string& command, const std::string& config, std::optional<std::uint64_t> seed,
        std::optional<std::string> out, unsigned threads) {
  CommandOptions opts;
  opts.seed = seed;
  opts.out_dir = std::move(out);
  opts.threads = threads;
  std::ostringstream log, err;
  const int code = run_command(command, config, opts, log, err);
  py::print(log.str(), py::arg("end") = "");
  if (!err.str().empty()) py::print(err.str(), py::arg("end") = "", py::arg("file") = py::module_::import("sys").attr("stderr"));
  return code;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Slow-fast stochastic systems: invariant manifold reduction and particle filtering.";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "SlowfastError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<AdmissibilityError>(m, "AdmissibilityError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<DegeneracyError>(m, "DegeneracyError", base.ptr());

  py::class_<ScenarioConfig>(m, "Scenario")
      .def_static("from_yaml", &parse_scenario, py::arg("text"))
      .def_static("load", &load_scenario, py::arg("path"))
      .def_static("default", &thermoelastic_scenario)
      .def_property_readonly("epsilon", [](const ScenarioConfig& c) { return c.model.params.epsilon; })
      .def_property_readonly("epsilon_list", [](const ScenarioConfig& c) { return c.epsilon_list; })
      .def_property_readonly("mu", [](const ScenarioConfig& c) { return c.model.params.mu; })
      .def_property_readonly("gamma1", [](const ScenarioConfig& c) { return c.model.params.gamma1; })
      .def_property_readonly("gamma2", [](const ScenarioConfig& c) { return c.model.params.gamma2; })
      .def_property_readonly("lipschitz", [](const ScenarioConfig& c) { return c.model.params.lipschitz; })
      .def_property_readonly("sigma1", [](const ScenarioConfig& c) { return c.model.params.sigma1; })
      .def_property_readonly("sigma2", [](const ScenarioConfig& c) { return c.model.params.sigma2; })
      .def_property_readonly("dt", [](const ScenarioConfig& c) { return c.model.dt(); })
      .def_property_readonly("dim_x", [](const ScenarioConfig& c) { return c.model.dim_x(); })
      .def_property_readonly("dim_y", [](const ScenarioConfig& c) { return c.model.dim_y(); })
      .def_property_readonly("dim3", [](const ScenarioConfig& c) { return c.observation.dim3(); })
      .def_property_readonly("seed", [](const ScenarioConfig& c) { return c.run.seed; })
      .def_property_readonly("config_hash", [](const ScenarioConfig& c) { return config_hash(c.source); })
      .def("initial_x", &ScenarioConfig::initial_x)
      .def("initial_y", &ScenarioConfig::initial_y)
      .def("contraction", [](const ScenarioConfig& c, std::optional<double> eps) {
        return compute_contraction_constant(model_at(c, eps).params);
      }, py::arg("epsilon") = py::none())
      .def("epsilon0", [](const ScenarioConfig& c) { return compute_epsilon0(c.model.params); })
      .def("lipschitz_bound", [](const ScenarioConfig& c, std::optional<double> eps) {
        return manifold_lipschitz_bound(model_at(c, eps).params);
      }, py::arg("epsilon") = py::none())
      .def("__repr__", [](const ScenarioConfig& c) {
        std::ostringstream s;
        s << "<Scenario eps=" << c.model.params.epsilon << " dim_x=" << c.model.dim_x() << " dim_y=" << c.model.dim_y()
          << ">";
        return s.str();
      });

  m.def("default_yaml", &thermoelastic_yaml);
  m.def("check", &check, py::arg("scenario"), "Hypothesis verdicts and derived constants.");
  m.def("simulate", &simulate, py::arg("scenario"), py::arg("horizon") = 1.0, py::arg("seed") = 1,
        py::arg("reduced_init") = "tracking", "Full and reduced trajectories on one noise path (rows are times).");
  m.def("manifold_point", &manifold_point, py::arg("scenario"), py::arg("x0"), py::arg("seed") = 1,
        py::arg("epsilon") = py::none(), "Fast value of the invariant graph over x0 at time 0.");
  m.def("filter_pair", &filter_pair, py::arg("scenario"), py::arg("seed") = 1, py::arg("particles") = py::none(),
        py::arg("times") = std::vector<double>{}, py::arg("threads") = 1,
        "Full and reduced particle filters on one synthetic observation path.");
  m.def("run_command", &run, py::arg("command"), py::arg("config") = "", py::arg("seed") = py::none(),
        py::arg("out") = py::none(), py::arg("threads") = 1, "Runs a CLI command and returns its exit code.");
}
