#include "slowfast/manifold.hpp"

#include <cmath>
#include <sstream>

#include "slowfast/errors.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

namespace {

constexpr double kRatioFloor = 1e-13;

double weighted_gap(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, const Eigen::MatrixXd& ya,
                    const Eigen::MatrixXd& yb, const std::vector<double>& w) {
  double r = 0.0;
  for (Eigen::Index m = 0; m < xa.cols(); ++m)
    r = std::max(r, w[static_cast<std::size_t>(m)] * ((xa.col(m) - xb.col(m)).norm() + (ya.col(m) - yb.col(m)).norm()));
  return r;
}

}  // namespace

std::int64_t manifold_backward_cells(const SystemModel& model, double dt, const ManifoldOptions& opts) {
  return backward_cells(model.params, dt, opts.truncation_tol);
}

BackwardSolution solve_backward(const SystemModel& model, const Eigen::VectorXd& x0, std::int64_t anchor,
                                const PathView& path, const ManifoldOptions& opts, const BackwardSolution* warm,
                                std::int64_t back_cells) {
  check_admissible(model.params);
  if (x0.size() != model.dim_x()) throw StructuralError("anchor has the wrong dimension");
  const double dt = checked_step(model, path);
  const std::int64_t nb = back_cells >= 0 ? back_cells : manifold_backward_cells(model, dt, opts);
  const int dx = model.dim_x(), dy = model.dim_y();
  const Stepper st(model, dt);
  const double eps = model.params.epsilon, mu = model.params.mu;

  Eigen::MatrixXd xi1(dx, nb), xi2(dy, nb);
  for (std::int64_t m = 0; m < nb; ++m) st.injections(path, anchor - nb + m, xi1.col(m), xi2.col(m));
  std::vector<double> w(static_cast<std::size_t>(nb + 1));
  for (std::int64_t m = 0; m <= nb; ++m) w[static_cast<std::size_t>(m)] = std::exp(-mu * static_cast<double>(nb - m) * dt / eps);

  BackwardSolution sol;
  sol.dt = dt;
  sol.n_start = anchor - nb;
  sol.n_anchor = anchor;
  Eigen::MatrixXd& x = sol.x;
  Eigen::MatrixXd& y = sol.y;
  const bool use_warm = warm != nullptr && warm->n_start == sol.n_start && warm->n_anchor == anchor &&
                        warm->x.rows() == dx && warm->y.rows() == dy;
  const Eigen::VectorXd zx = Eigen::VectorXd::Zero(dx), zy = Eigen::VectorXd::Zero(dy);
  if (use_warm) {
    x = warm->x;
    y = warm->y;
  } else {
    x.resize(dx, nb + 1);
    y.resize(dy, nb + 1);
    x.col(nb) = x0;
    for (std::int64_t m = nb - 1; m >= 0; --m) st.slow().back_step(x.col(m + 1), zx, 0.0, xi1.col(m), x.col(m));
    y.col(0).setZero();
    for (std::int64_t m = 0; m < nb; ++m) st.fast().step(y.col(m), zy, 0.0, xi2.col(m), y.col(m + 1));
  }

  Eigen::MatrixXd f(dx, nb), g(dy, nb), xn(dx, nb + 1), yn(dy, nb + 1);
  const double floor = kRatioFloor * (1.0 + x0.norm());
  for (int k = 1; k <= opts.max_iterations; ++k) {
    for (std::int64_t m = 0; m < nb; ++m) {
      model.F.eval(x.col(m), y.col(m), f.col(m));
      model.G.eval(x.col(m), y.col(m), g.col(m));
    }
    xn.col(nb) = x0;
    for (std::int64_t m = nb - 1; m >= 0; --m)
      st.slow().back_step(xn.col(m + 1), f.col(m), st.slow_coeff(), xi1.col(m), xn.col(m));
    yn.col(0).setZero();
    for (std::int64_t m = 0; m < nb; ++m)
      st.fast().step(yn.col(m), g.col(m), st.fast_coeff(), xi2.col(m), yn.col(m + 1));
    const double res = weighted_gap(xn, x, yn, y, w);
    x.swap(xn);
    y.swap(yn);
    if (!sol.residuals.empty() && sol.residuals.back() > floor) sol.ratios.push_back(res / sol.residuals.back());
    sol.residuals.push_back(res);
    if (!std::isfinite(res)) throw DivergenceError("backward iteration produced non-finite values", k);
    if (res <= opts.tol) {
      sol.iterations = k;
      sol.residual = res;
      return sol;
    }
  }
  std::ostringstream msg;
  msg << "backward fixed-point iteration did not reach tolerance " << opts.tol << " in " << opts.max_iterations
      << " iterations (last residual " << sol.residuals.back() << ")";
  throw ConvergenceError(msg.str(), sol.residuals);
}

BackwardSolution solve_backward(const SystemModel& model, const Eigen::VectorXd& x0, double s, const PathView& path,
                                const ManifoldOptions& opts) {
  return solve_backward(model, x0, cell_of(s, path.dt()), path, opts);
}

ManifoldMap::ManifoldMap(const SystemModel& model, PathView path, double s, ManifoldOptions opts)
    : model_(model), path_(std::move(path)), anchor_(cell_of(s, path_.dt())), opts_(opts) {
  check_admissible(model_.params);
  checked_step(model_, path_);
  lip_bound_ = manifold_lipschitz_bound(model_.params);
}

Eigen::VectorXd ManifoldMap::evaluate(const Eigen::VectorXd& x0) const { return evaluate_at(x0, anchor_); }

Eigen::VectorXd ManifoldMap::evaluate_at(const Eigen::VectorXd& x0, std::int64_t anchor_cell) const {
  std::vector<std::int64_t> key;
  key.reserve(static_cast<std::size_t>(x0.size()) + 3);
  key.push_back(anchor_cell);
  key.push_back(path_.offset());
  key.push_back(static_cast<std::int64_t>(path_.path_ref()));
  for (Eigen::Index i = 0; i < x0.size(); ++i) key.push_back(std::llround(x0[i] * 1e12));
  {
    std::lock_guard lock(mutex_);
    const auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  const BackwardSolution sol = solve_backward(model_, x0, anchor_cell, path_, opts_);
  Eigen::VectorXd value = sol.y_anchor();
  std::lock_guard lock(mutex_);
  return memo_.emplace(std::move(key), std::move(value)).first->second;
}

double ManifoldMap::probe_lipschitz(int pairs, double radius, std::uint64_t seed) const {
  const GaussianSource rng(seed, make_stream_id(StreamRole::kProbe, 1, 0));
  const int dx = model_.dim_x();
  Eigen::VectorXd u(dx);
  const auto draw = [&](std::int64_t cell, std::uint32_t channel) {
    rng.fill(cell, channel, u.data(), static_cast<std::size_t>(dx));
    const double r = radius * std::pow(rng.uniform(cell, channel + 8, 0), 1.0 / dx);
    return Eigen::VectorXd(u * (r / u.norm()));
  };
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Eigen::VectorXd x1 = draw(i, 0);
    const Eigen::VectorXd x2 = draw(i, 1);
    const double dx_norm = (x1 - x2).norm();
    if (dx_norm == 0.0) continue;
    worst = std::max(worst, (evaluate(x1) - evaluate(x2)).norm() / dx_norm);
  }
  std::lock_guard lock(mutex_);
  lip_empirical_ = std::max(lip_empirical_, worst);
  return worst;
}

double ManifoldMap::lip_empirical() const {
  std::lock_guard lock(mutex_);
  return lip_empirical_;
}

std::size_t ManifoldMap::memo_size() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

ShiftReport verify_shift_property(const SystemModel& model, const PathView& path, const Eigen::VectorXd& x0, double s,
                                  double t, const ManifoldOptions& opts) {
  const double dt = checked_step(model, path);
  const std::int64_t ns = cell_of(s, dt), nt = cell_of(t, dt);
  if (nt > ns) throw DomainError("shift property needs t <= s");
  const std::int64_t nb = manifold_backward_cells(model, dt, opts);
  const BackwardSolution outer = solve_backward(model, x0, ns, path, opts, nullptr, nb + (ns - nt));
  const std::int64_t idx = nt - outer.n_start;
  const Eigen::VectorXd xt = outer.x.col(idx);
  const Eigen::VectorXd yt = outer.y.col(idx);
  const PathView shifted = path.shifted_cells(nt - ns);
  const BackwardSolution inner = solve_backward(model, xt, ns, shifted, opts);
  ShiftReport r;
  r.s = s;
  r.t = t;
  r.discrepancy = (inner.y_anchor() - yt).norm();
  r.threshold = 10.0 * opts.tol;
  r.pass = r.discrepancy <= r.threshold;
  return r;
}

std::int64_t random_bound_cells(const SystemModel& model, double dt, const ManifoldOptions& opts) {
  const SystemParams& p = model.params;
  const double horizon = std::max(backward_horizon(p, opts.truncation_tol),
                                  p.epsilon / p.mu * std::log(1.0 / opts.truncation_tol));
  const auto weight_cells = static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-9));
  return weight_cells + backward_cells(p, dt, opts.truncation_tol);
}

RandomBound compute_R(const SystemModel& model, const PathView& path, const ManifoldOptions& opts) {
  const double dt = checked_step(model, path);
  const SystemParams& p = model.params;
  const std::int64_t nb = backward_cells(p, dt, opts.truncation_tol);
  const std::int64_t nr = random_bound_cells(model, dt, opts) - nb;
  const Stepper st(model, dt);
  const int dx = model.dim_x(), dy = model.dim_y();
  RandomBound r;
  Eigen::VectorXd xi1(dx), xi2(dy), c = Eigen::VectorXd::Zero(dx), tmp(dx);
  if (p.sigma1 != 0.0) {
    for (std::int64_t m = -1; m >= -nr; --m) {
      st.slow().noise_apply(path.w1(m), st.slow_noise_scale(), xi1);
      st.slow().inv_apply(c + xi1, tmp);
      c = tmp;
      r.slow_component = std::max(r.slow_component, std::exp(p.mu * static_cast<double>(m) * dt / p.epsilon) * c.norm());
    }
  }
  if (p.sigma2 != 0.0) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dy), next(dy);
    for (std::int64_t m = -nr - nb; m < 0; ++m) {
      st.fast().noise_apply(path.w2(m), st.fast_noise_scale(), xi2);
      st.fast().exp_apply(v, next);
      v = next + xi2;
      if (m + 1 >= -nr)
        r.fast_component =
            std::max(r.fast_component, std::exp(p.mu * static_cast<double>(m + 1) * dt / p.epsilon) * v.norm());
    }
  }
  r.value = r.slow_component + r.fast_component;
  return r;
}

std::int64_t tracking_forward_cells(const SystemModel& model, double dt, const TrackingOptions& opts) {
  const SystemParams& p = model.params;
  const double horizon =
      opts.forward_horizon > 0.0 ? opts.forward_horizon : p.epsilon / p.mu * std::log(1.0 / opts.forward_tol);
  return static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-9));
}

std::int64_t tracking_backward_cells(const SystemModel& model, double dt, const TrackingOptions& opts) {
  ManifoldOptions m;
  m.truncation_tol = opts.truncation_tol;
  return std::max(backward_cells(model.params, dt, opts.truncation_tol), random_bound_cells(model, dt, m));
}

TrackingSolution solve_tracking(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                const PathView& path, const TrackingOptions& opts) {
  check_admissible(model.params);
  const SystemParams& p = model.params;
  const double dt = checked_step(model, path);
  const double eps = p.epsilon, mu = p.mu;
  const std::int64_t nb = backward_cells(p, dt, opts.truncation_tol);
  const std::int64_t nf = tracking_forward_cells(model, dt, opts);
  const std::int64_t np = nb + nf + 1;
  const int dx = model.dim_x(), dy = model.dim_y();
  const Stepper st(model, dt);

  TrackingSolution sol;
  sol.dt = dt;
  sol.n_start = -nb;
  sol.n_end = nf;
  sol.base = integrate_cells(model, x0, y0, path, 0, nf);

  // Base trajectory z on the two-sided grid: the proof's extension for t <= 0.
  Eigen::MatrixXd zx(dx, np), zy(dy, np);
  for (std::int64_t m = -nb; m <= 0; ++m) {
    const double at = std::abs(static_cast<double>(m) * dt);
    zx.col(m + nb) = x0;
    for (int i = 0; i < dy; ++i) zy(i, m + nb) = y0[i] / (1.0 - at * model.B.block(i)(0, 0));
  }
  zx.rightCols(nf + 1) = sol.base.x;
  zy.rightCols(nf + 1) = sol.base.y;
  // z_0 is (x0, y0) from both definitions.

  Eigen::MatrixXd xi1(dx, np - 1), xi2(dy, np - 1), f0(dx, np - 1), g0(dy, np - 1);
  for (std::int64_t i = 0; i + 1 < np; ++i) {
    st.injections(path, -nb + i, xi1.col(i), xi2.col(i));
    model.F.eval(zx.col(i), zy.col(i), f0.col(i));
    model.G.eval(zx.col(i), zy.col(i), g0.col(i));
  }

  // Z_0(t): K(z) on t <= 0, forward semigroup of K_2(z)(0) - y0 on t > 0.
  Eigen::MatrixXd x_init = Eigen::MatrixXd::Zero(dx, np), y_init = Eigen::MatrixXd::Zero(dy, np);
  {
    Eigen::VectorXd k1 = x0;
    x_init.col(nb).setZero();
    for (std::int64_t i = nb - 1; i >= 0; --i) {
      Eigen::VectorXd prev(dx);
      st.slow().back_step(k1, f0.col(i), st.slow_coeff(), xi1.col(i), prev);
      k1 = prev;
      x_init.col(i) = k1 - x0;
    }
    Eigen::VectorXd k2 = Eigen::VectorXd::Zero(dy), next(dy);
    y_init.col(0) = k2 - zy.col(0);
    for (std::int64_t i = 0; i < nb; ++i) {
      st.fast().step(k2, g0.col(i), st.fast_coeff(), xi2.col(i), next);
      k2 = next;
      y_init.col(i + 1) = k2 - zy.col(i + 1);
    }
    Eigen::VectorXd v = k2 - y0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dy);
    for (std::int64_t i = nb + 1; i < np; ++i) {
      st.fast().exp_apply(v, next);
      v = next;
      y_init.col(i) = v;
    }
  }

  std::vector<double> w(static_cast<std::size_t>(np));
  for (std::int64_t i = 0; i < np; ++i)
    w[static_cast<std::size_t>(i)] = std::exp(mu * static_cast<double>(i - nb) * dt / eps);

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(dx, np), Y = Eigen::MatrixXd::Zero(dy, np);
  Eigen::MatrixXd Xn(dx, np), Yn(dy, np), df(dx, np - 1), dg(dy, np - 1);
  Eigen::VectorXd zxv(dx), zyv(dy), s(dx), u(dy), tmp(dx), tmpy(dy);
  bool converged = false;
  int stagnant = 0;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    for (std::int64_t i = 0; i + 1 < np; ++i) {
      zxv = zx.col(i) + X.col(i);
      zyv = zy.col(i) + Y.col(i);
      model.F.eval(zxv, zyv, df.col(i));
      model.G.eval(zxv, zyv, dg.col(i));
      df.col(i) -= f0.col(i);
      dg.col(i) -= g0.col(i);
    }
    s.setZero();
    Xn.col(np - 1) = x_init.col(np - 1) - s;
    for (std::int64_t i = np - 2; i >= 0; --i) {
      st.slow().phi_apply(df.col(i), st.slow_coeff(), tmp);
      st.slow().inv_apply(s + tmp, s);
      Xn.col(i) = x_init.col(i) - s;
    }
    u.setZero();
    Yn.col(0) = y_init.col(0) + u;
    for (std::int64_t i = 0; i + 1 < np; ++i) {
      st.fast().step(u, dg.col(i), st.fast_coeff(), Eigen::VectorXd::Zero(dy), tmpy);
      u = tmpy;
      Yn.col(i + 1) = y_init.col(i + 1) + u;
    }
    const double res = weighted_gap(Xn, X, Yn, Y, w);
    X.swap(Xn);
    Y.swap(Yn);
    sol.residuals.push_back(res);
    if (!std::isfinite(res)) throw DivergenceError("tracking iteration produced non-finite values", k);
    double znorm = 0.0;
    for (std::int64_t i = 0; i < np; ++i)
      znorm = std::max(znorm, w[static_cast<std::size_t>(i)] * (X.col(i).norm() + Y.col(i).norm()));
    const double target = opts.tol * std::max(1.0, znorm);
    sol.iterations = k;
    sol.residual = res;
    if (res <= target) {
      converged = true;
      break;
    }
    // Rounding-level stagnation: the weights amplify cancellation in F(z + Z) - F(z)
    // at late times, so accept once the residual stops shrinking near the floor.
    if (sol.residuals.size() >= 2 && res >= sol.residuals[sol.residuals.size() - 2] && res <= 1e-6 * std::max(1.0, znorm)) {
      if (++stagnant >= 5) {
        converged = true;
        break;
      }
    } else {
      stagnant = 0;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "tracking iteration did not converge in " << opts.max_iterations << " iterations";
    throw ConvergenceError(msg.str(), sol.residuals);
  }
  sol.X = std::move(X);
  sol.Y = std::move(Y);
  sol.x_tilde0 = x0 + sol.X.col(nb);
  sol.y_tilde0 = y0 + sol.Y.col(nb);

  ManifoldOptions mopts;
  mopts.truncation_tol = opts.truncation_tol;
  sol.contraction = compute_contraction_constant(p);
  sol.bound = compute_R(model, path, mopts);
  const double m = sol.contraction;
  sol.envelope_constant = ((2.0 + 2.0 * m) * (x0.norm() + y0.norm()) + 2.0 * sol.bound.value) / (1.0 - m);
  sol.decay_ok = true;
  for (std::int64_t n = 0; n <= nf; ++n) {
    const double ratio = sol.correction_norm(n) / sol.envelope(static_cast<double>(n) * dt, mu, eps);
    sol.worst_envelope_ratio = std::max(sol.worst_envelope_ratio, ratio);
  }
  sol.decay_ok = sol.worst_envelope_ratio <= 1.0;
  return sol;
}

Trajectory integrate_reduced(const SystemModel& model, const Eigen::VectorXd& x0, const ManifoldMap& manifold,
                             const PathView& path, double t0, double t1, FastSlotPolicy policy,
                             const Eigen::VectorXd* y0_on_manifold) {
  model.validate();
  if (manifold.path().path_ref() != path.path_ref() || manifold.path().offset() != path.offset())
    throw StructuralError("manifold map was built on a different noise path");
  if (!(t0 < t1)) throw DomainError("integrate_reduced needs t0 < t1");
  const double dt = checked_step(model, path);
  const std::int64_t n0 = cell_of(t0, dt), n1 = cell_of(t1, dt);
  const Eigen::VectorXd y0 = y0_on_manifold != nullptr ? *y0_on_manifold : manifold.evaluate_at(x0, n0);
  if (policy == FastSlotPolicy::Propagated) return integrate_cells(model, x0, y0, path, n0, n1);

  const Stepper st(model, dt);
  auto ws = st.workspace();
  Trajectory tr;
  tr.dt = dt;
  tr.n_start = n0;
  tr.path_ref = path.path_ref();
  tr.x.resize(model.dim_x(), n1 - n0 + 1);
  tr.y.resize(model.dim_y(), n1 - n0 + 1);
  Eigen::VectorXd x = x0, y = y0;
  const double z0 = x0.norm() + y0.norm();
  for (std::int64_t n = n0; n <= n1; ++n) {
    if (n > n0) y = manifold.evaluate_at(x, n);
    tr.x.col(n - n0) = x;
    tr.y.col(n - n0) = y;
    if (n == n1) break;
    st.slow().noise_apply(path.w1(n), st.slow_noise_scale(), ws.xi1);
    model.F.eval(x, y, ws.f);
    st.slow().step(x, ws.f, st.slow_coeff(), ws.xi1, x);
    guard_divergence(x.norm() + y.norm(), z0, n - n0 + 1);
  }
  return tr;
}

}  // namespace slowfast
