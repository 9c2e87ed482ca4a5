#include "slowfast/hypotheses.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "slowfast/errors.hpp"

namespace slowfast {

const Verdict* HypothesisReport::find(const std::string& name) const {
  for (const auto& v : verdicts) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

double energy_norm_exp(const Eigen::Matrix2d& m, double t) {
  const double p0 = std::sqrt(std::abs(m(1, 0)));
  const double p1 = std::sqrt(std::abs(m(0, 1)));
  const Eigen::Matrix2d e = expm2(m, t);
  Eigen::Matrix2d w;
  w << e(0, 0), e(0, 1) * p0 / p1, e(1, 0) * p1 / p0, e(1, 1);
  return operator_norm2(w);
}

std::vector<double> h1_time_grid() {
  std::vector<double> ts{0.0};
  for (int k = 0; k <= 40; ++k) {
    const double t = std::pow(10.0, -3.0 + 0.1 * k);
    ts.push_back(t);
    ts.push_back(-t);
  }
  return ts;
}

namespace {

constexpr double kNormSlack = 1e-12;
constexpr double kProbeSlack = 1e-6;

bool block_ok(const std::vector<double>& ts, double gamma1, const std::function<double(double)>& norm_at,
              double& worst) {
  bool ok = true;
  for (double t : ts) {
    const double bound = t <= 0.0 ? std::exp(-gamma1 * t) : 1.0;
    const double n = norm_at(t);
    worst = std::max(worst, n / bound);
    if (n > bound * (1.0 + kNormSlack)) ok = false;
  }
  return ok;
}

Verdict check_h1(const SpectralOperator& a, double gamma1, std::string& norm_used) {
  const auto ts = h1_time_grid();
  Verdict v{"H1", true, 0.0, 1.0, ""};
  bool used_energy = false;
  for (int b = 0; b < a.block_count(); ++b) {
    double worst = 0.0;
    const auto euclid = [&](double t) { return operator_norm2(a.block_exp(b, t)); };
    if (block_ok(ts, gamma1, euclid, worst)) {
      v.measured = std::max(v.measured, worst);
      continue;
    }
    const Eigen::Matrix2d& m = a.block(b);
    if (a.space().block_size(b) == 2 && m(0, 1) * m(1, 0) < 0.0) {
      double worst_energy = 0.0;
      const auto energy = [&](double t) { return energy_norm_exp(m, t); };
      if (block_ok(ts, gamma1, energy, worst_energy)) {
        used_energy = true;
        v.measured = std::max(v.measured, worst_energy);
        continue;
      }
      worst = std::min(worst, worst_energy);
    }
    v.pass = false;
    v.measured = std::max(v.measured, worst);
    std::ostringstream msg;
    msg << "block " << b << " violates the semigroup bound (ratio " << worst << ")";
    v.detail = msg.str();
  }
  norm_used = used_energy ? "energy" : "euclidean";
  if (v.pass) v.detail = "semigroup bound holds in the " + norm_used + " norm";
  return v;
}

Verdict check_h2(const SpectralOperator& b, double gamma2) {
  Verdict v{"H2", true, 0.0, -gamma2, ""};
  double max_entry = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < b.block_count(); ++k) {
    if (b.space().block_size(k) != 1) {
      v.pass = false;
      v.detail = "B has a non-diagonal block";
      return v;
    }
    max_entry = std::max(max_entry, b.block(k)(0, 0));
  }
  v.measured = max_entry;
  v.pass = gamma2 > 0.0 && max_entry <= -gamma2 * (1.0 - kNormSlack);
  v.detail = v.pass ? "B is dissipative" : "B has an entry above -gamma2";
  return v;
}

Verdict lipschitz_verdict(const std::string& name, const LipschitzProbe& probe, double declared, double bound) {
  Verdict v{name, true, probe.max_ratio, declared, ""};
  std::ostringstream msg;
  if (!probe.zero_at_origin) {
    v.pass = false;
    msg << "nonzero at the origin; ";
  }
  if (declared > bound * (1.0 + kProbeSlack)) {
    v.pass = false;
    msg << "declared Lipschitz " << declared << " exceeds system L " << bound << "; ";
  }
  if (probe.max_ratio > declared * (1.0 + kProbeSlack)) {
    v.pass = false;
    msg << "probe ratio " << probe.max_ratio << " exceeds declared " << declared << "; ";
  }
  if (probe.max_growth_ratio > declared * (1.0 + kProbeSlack)) {
    v.pass = false;
    msg << "linear growth ratio " << probe.max_growth_ratio << " exceeds declared; ";
  }
  v.detail = v.pass ? "probe ratios within the declared constant" : msg.str();
  return v;
}

}  // namespace

HypothesisReport check_hypotheses(const SystemModel& model, const ObservationModel* h,
                                  const std::vector<double>& epsilons, const ProbeOptions& probes) {
  HypothesisReport r;
  const SystemParams& p = model.params;
  r.gamma1 = p.gamma1;
  r.gamma2 = p.gamma2;
  r.lipschitz = p.lipschitz;
  r.mu = p.mu;
  r.mu_upper = p.gamma2 - p.lipschitz;

  r.verdicts.push_back(check_h1(model.A, p.gamma1, r.h1_norm));
  r.verdicts.push_back(check_h2(model.B, p.gamma2));

  const int dx = model.dim_x(), dy = model.dim_y();
  const auto f_probe = probe_lipschitz([&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return model.F(x, y); },
                                       dx, dy, probes);
  ProbeOptions g_opts = probes;
  g_opts.seed = probes.seed + 1;
  const auto g_probe = probe_lipschitz([&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return model.G(x, y); },
                                       dx, dy, g_opts);
  auto h3f = lipschitz_verdict("H3.F", f_probe, model.F.declared_lipschitz(), p.lipschitz);
  auto h3g = lipschitz_verdict("H3.G", g_probe, model.G.declared_lipschitz(), p.lipschitz);
  Verdict h3{"H3", h3f.pass && h3g.pass, std::max(f_probe.max_ratio, g_probe.max_ratio), p.lipschitz,
             "F: " + h3f.detail + " | G: " + h3g.detail};
  r.verdicts.push_back(h3);
  r.verdicts.push_back(h3f);
  r.verdicts.push_back(h3g);

  Verdict h4{"H4", p.gamma2 > p.lipschitz, p.lipschitz, p.gamma2, ""};
  h4.detail = h4.pass ? "gamma2 > L" : "gamma2 <= L: fast dissipation does not dominate the coupling";
  r.verdicts.push_back(h4);

  Verdict window{"mu-window", p.mu > 0.0 && p.mu < p.gamma2 - p.lipschitz, p.mu, p.gamma2 - p.lipschitz, ""};
  window.detail = window.pass ? "0 < mu < gamma2 - L" : "mu outside (0, gamma2 - L)";
  r.verdicts.push_back(window);

  r.epsilon0 = std::numeric_limits<double>::quiet_NaN();
  if (h4.pass && window.pass) r.epsilon0 = compute_epsilon0(p);
  Verdict eps_v{"epsilon", h4.pass && window.pass, 0.0, r.epsilon0, ""};
  for (double e : epsilons) {
    EpsilonVerdict ev;
    ev.epsilon = e;
    ev.contraction = std::numeric_limits<double>::quiet_NaN();
    if (h4.pass && window.pass) {
      SystemParams q = p;
      q.epsilon = e;
      try {
        ev.contraction = compute_contraction_constant(q);
      } catch (const AdmissibilityError&) {
      }
      ev.admissible = e > 0.0 && e < r.epsilon0 && ev.contraction < 1.0;
    }
    eps_v.measured = std::max(eps_v.measured, e);
    if (!ev.admissible) eps_v.pass = false;
    r.epsilons.push_back(ev);
  }
  eps_v.detail = eps_v.pass ? "every epsilon is strictly below epsilon0" : "some epsilon is not below epsilon0";
  r.verdicts.push_back(eps_v);

  if (h != nullptr) {
    ProbeOptions h_opts = probes;
    h_opts.seed = probes.seed + 2;
    const auto hp = probe_lipschitz([&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return (*h)(x, y); }, dx,
                                    dy, h_opts);
    Verdict h5{"H5", true, hp.max_norm, h->c_h(), ""};
    std::ostringstream msg;
    if (hp.max_norm > h->c_h() * (1.0 + kProbeSlack)) {
      h5.pass = false;
      msg << "sup probe " << hp.max_norm << " exceeds C_h " << h->c_h() << "; ";
    }
    if (hp.max_ratio > h->h_lip() * (1.0 + kProbeSlack)) {
      h5.pass = false;
      msg << "Lipschitz probe " << hp.max_ratio << " exceeds " << h->h_lip() << "; ";
    }
    h5.detail = h5.pass ? "h bounded by C_h and Lipschitz" : msg.str();
    r.verdicts.push_back(h5);
  }

  r.overall = true;
  for (const auto& v : r.verdicts) r.overall = r.overall && v.pass;
  return r;
}

}  // namespace slowfast
