#include "slowfast/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "slowfast/errors.hpp"
#include "slowfast/records.hpp"

namespace slowfast {

void Trajectory::write_csv(std::ostream& out) const {
  out << "t";
  for (Eigen::Index i = 0; i < x.rows(); ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < y.rows(); ++i) out << ",y" << i;
  out << "\n";
  char buf[32];
  for (std::int64_t n = 0; n < size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g", time(n));
    out << buf;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, n));
      out << ',' << buf;
    }
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", y(i, n));
      out << ',' << buf;
    }
    out << "\n";
  }
}

void Trajectory::write(std::ostream& out) const {
  RecordWriter w(out, RecordKind::Trajectory);
  w.f64(dt);
  w.i64(n_start);
  w.u64(path_ref);
  w.matrix(x);
  w.matrix(y);
}

Trajectory Trajectory::read(std::istream& in) {
  RecordReader r(in, RecordKind::Trajectory);
  Trajectory t;
  t.dt = r.f64();
  t.n_start = r.i64();
  t.path_ref = r.u64();
  t.x = r.matrix();
  t.y = r.matrix();
  if (t.x.cols() != t.y.cols()) throw StructuralError("trajectory record has inconsistent lengths");
  return t;
}

Stepper::Stepper(const SystemModel& model, double dt)
    : model_(&model), dt_(dt), slow_(model.A, 1.0, dt), fast_(model.B, 1.0 / model.params.epsilon, dt) {}

Stepper::Workspace Stepper::workspace() const {
  Workspace ws;
  ws.f.resize(slow_.dim());
  ws.xi1.resize(slow_.dim());
  ws.g.resize(fast_.dim());
  ws.xi2.resize(fast_.dim());
  return ws;
}

void Stepper::injections(const PathView& path, std::int64_t cell, Eigen::Ref<Eigen::VectorXd> xi1,
                         Eigen::Ref<Eigen::VectorXd> xi2) const {
  slow_.noise_apply(path.w1(cell), slow_noise_scale(), xi1);
  fast_.noise_apply(path.w2(cell), fast_noise_scale(), xi2);
}

void Stepper::step(Eigen::Ref<Eigen::VectorXd> x, Eigen::Ref<Eigen::VectorXd> y, const PathView& path,
                   std::int64_t cell, Workspace& ws) const {
  injections(path, cell, ws.xi1, ws.xi2);
  model_->F.eval(x, y, ws.f);
  model_->G.eval(x, y, ws.g);
  slow_.step(x, ws.f, slow_coeff(), ws.xi1, x);
  fast_.step(y, ws.g, fast_coeff(), ws.xi2, y);
}

double checked_step(const SystemModel& model, const PathView& path) {
  const double dt = path.dt();
  if (dt > model.dt() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "path step " << dt << " exceeds eps / oversample_fast = " << model.dt();
    throw StructuralError(msg.str());
  }
  return dt;
}

void guard_divergence(double state_norm, double z0_norm, std::int64_t step) {
  if (!std::isfinite(state_norm) || state_norm > 1e6 * (1.0 + z0_norm)) {
    std::ostringstream msg;
    msg << "state norm " << state_norm << " exceeded the divergence guard at step " << step;
    throw DivergenceError(msg.str(), step);
  }
}

Trajectory integrate_cells(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                           const PathView& path, std::int64_t n0, std::int64_t n1) {
  if (x0.size() != model.dim_x() || y0.size() != model.dim_y()) throw StructuralError("initial state has wrong size");
  if (n1 < n0) throw DomainError("integration window is reversed");
  const double dt = checked_step(model, path);
  const Stepper stepper(model, dt);
  auto ws = stepper.workspace();
  Trajectory tr;
  tr.dt = dt;
  tr.n_start = n0;
  tr.path_ref = path.path_ref();
  tr.x.resize(model.dim_x(), n1 - n0 + 1);
  tr.y.resize(model.dim_y(), n1 - n0 + 1);
  tr.x.col(0) = x0;
  tr.y.col(0) = y0;
  const double z0 = x0.norm() + y0.norm();
  Eigen::VectorXd x = x0, y = y0;
  for (std::int64_t n = n0; n < n1; ++n) {
    stepper.step(x, y, path, n, ws);
    guard_divergence(x.norm() + y.norm(), z0, n - n0 + 1);
    tr.x.col(n - n0 + 1) = x;
    tr.y.col(n - n0 + 1) = y;
  }
  return tr;
}

Trajectory integrate_full(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                          const PathView& path, double t0, double t1) {
  model.validate();
  if (!(t0 < t1)) throw DomainError("integrate_full needs t0 < t1");
  const double dt = checked_step(model, path);
  return integrate_cells(model, x0, y0, path, cell_of(t0, dt), cell_of(t1, dt));
}

CocycleReport verify_cocycle(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                             const PathView& path, double s, double t) {
  const double dt = checked_step(model, path);
  const std::int64_t ns = cell_of(s, dt);
  const std::int64_t nt = cell_of(t, dt);
  if (ns < 0 || nt < 0) throw DomainError("cocycle check needs s, t >= 0");
  const Trajectory whole = integrate_cells(model, x0, y0, path, 0, ns + nt);
  const Trajectory first = integrate_cells(model, x0, y0, path, 0, ns);
  const PathView shifted = path.shifted_cells(ns);
  const Trajectory second =
      integrate_cells(model, first.x.col(first.size() - 1), first.y.col(first.size() - 1), shifted, 0, nt);
  CocycleReport r;
  r.s = s;
  r.t = t;
  r.discrepancy = (whole.x.col(whole.size() - 1) - second.x.col(second.size() - 1)).cwiseAbs().maxCoeff();
  r.discrepancy = std::max(r.discrepancy,
                           (whole.y.col(whole.size() - 1) - second.y.col(second.size() - 1)).cwiseAbs().maxCoeff());
  r.threshold = 1e-10 * (1.0 + x0.norm() + y0.norm());
  r.pass = r.discrepancy <= r.threshold;
  return r;
}

Trajectory picard_apply(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                        const PathView& path, const Trajectory& candidate) {
  const double dt = checked_step(model, path);
  if (std::abs(candidate.dt - dt) > 1e-15 * dt) throw StructuralError("candidate grid does not match the path");
  const Stepper stepper(model, dt);
  auto ws = stepper.workspace();
  Trajectory out = candidate;
  out.x.col(0) = x0;
  out.y.col(0) = y0;
  Eigen::VectorXd x = x0, y = y0;
  for (std::int64_t i = 0; i + 1 < candidate.size(); ++i) {
    const std::int64_t cell = candidate.n_start + i;
    stepper.injections(path, cell, ws.xi1, ws.xi2);
    model.F.eval(candidate.x.col(i), candidate.y.col(i), ws.f);
    model.G.eval(candidate.x.col(i), candidate.y.col(i), ws.g);
    stepper.slow().step(x, ws.f, stepper.slow_coeff(), ws.xi1, x);
    stepper.fast().step(y, ws.g, stepper.fast_coeff(), ws.xi2, y);
    out.x.col(i + 1) = x;
    out.y.col(i + 1) = y;
  }
  return out;
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw StructuralError("trajectories have different lengths");
  double d = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i)
    d = std::max(d, (a.x.col(i) - b.x.col(i)).norm() + (a.y.col(i) - b.y.col(i)).norm());
  return d;
}

double picard_contraction_bound(const SystemParams& p, double window) {
  return p.lipschitz * window + p.lipschitz / p.gamma2;
}

}  // namespace slowfast
