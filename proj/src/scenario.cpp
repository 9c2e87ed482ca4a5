#include "slowfast/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

[[noreturn]] void fail(const std::string& what, const std::string& field, const YAML::Node& n) {
  const int line = line_of(n);
  std::ostringstream msg;
  msg << field << ": " << what;
  if (line > 0) msg << " (line " << line << ")";
  throw ParseError(msg.str(), field, line);
}

// A mapping whose keys are checked against an allow-list.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_ || node_.IsNull()) return;
    if (!node_.IsMap()) fail("expected a mapping", path_, node_);
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail("unknown key", field(key), kv.first);
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }
  YAML::Node node(const std::string& key) const { return has(key) ? node_[key] : YAML::Node(); }
  const YAML::Node& self() const { return node_; }

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T required(const std::string& key) const {
    if (!has(key)) fail("required field is missing", field(key), node_);
    return convert<T>(key);
  }

  bool is_auto(const std::string& key) const {
    return !has(key) || (node_[key].IsScalar() && node_[key].Scalar() == "auto");
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const YAML::Node n = node_[key];
    if (!n.IsSequence()) fail("expected a list of numbers", field(key), n);
    std::vector<double> out;
    for (const auto& v : n) {
      try {
        out.push_back(v.as<double>());
      } catch (const YAML::Exception&) {
        fail("expected a number", field(key), v);
      }
    }
    return out;
  }

 private:
  template <typename T>
  T convert(const std::string& key) const {
    const YAML::Node n = node_[key];
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail("value has the wrong type", field(key), n);
    }
  }

  YAML::Node node_;
  std::string path_;
};

double positive(double v, const Section& s, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) fail("must be positive", s.field(key), s.node(key));
  return v;
}

std::vector<TableTerm> parse_terms(const YAML::Node& n, const std::string& path) {
  if (!n || !n.IsSequence()) fail("expected a list of terms", path, n);
  std::vector<TableTerm> terms;
  int i = 0;
  for (const auto& item : n) {
    const std::string tp = path + "[" + std::to_string(i++) + "]";
    Section s(item, tp, {"out", "amplitude", "activation", "inputs"});
    TableTerm t;
    t.out_index = s.required<int>("out");
    t.amplitude = s.get<double>("amplitude", 1.0);
    const auto act = s.get<std::string>("activation", "sin");
    if (act == "sin") {
      t.activation = Activation::Sin;
    } else if (act == "linear") {
      t.activation = Activation::Linear;
    } else {
      fail("activation must be sin or linear", s.field("activation"), s.node("activation"));
    }
    const YAML::Node inputs = s.node("inputs");
    if (!inputs || !inputs.IsSequence()) fail("expected a list of inputs", s.field("inputs"), item);
    int j = 0;
    for (const auto& in : inputs) {
      Section is(in, s.field("inputs") + "[" + std::to_string(j++) + "]", {"slot", "index", "weight"});
      TableTerm::Input input;
      const auto slot = is.required<std::string>("slot");
      if (slot == "x") {
        input.slot = Slot::X;
      } else if (slot == "y") {
        input.slot = Slot::Y;
      } else {
        fail("slot must be x or y", is.field("slot"), is.node("slot"));
      }
      input.index = is.required<int>("index");
      input.weight = is.get<double>("weight", 1.0);
      t.inputs.push_back(input);
    }
    terms.push_back(std::move(t));
  }
  return terms;
}

Nonlinearity parse_nonlinearity(const Section& parent, const std::string& key, Role role) {
  Section s(parent.node(key), parent.field(key), {"kind", "amplitude", "lipschitz", "terms"});
  if (!parent.has(key)) return Nonlinearity::zero(role);
  const auto tag = s.required<std::string>("kind");
  NonlinearityKind kind;
  try {
    kind = parse_nonlinearity_kind(tag);
  } catch (const DomainError& e) {
    fail(e.what(), s.field("kind"), s.node("kind"));
  }
  switch (kind) {
    case NonlinearityKind::Zero:
      return Nonlinearity::zero(role);
    case NonlinearityKind::LinearCoupling:
      return Nonlinearity::linear_coupling(role, s.required<double>("amplitude"));
    case NonlinearityKind::SineSaturating: {
      const double a = s.required<double>("amplitude");
      return Nonlinearity::sine_saturating(role, a, s.get<double>("lipschitz", std::abs(a)));
    }
    case NonlinearityKind::ThermoelasticSine:
      return Nonlinearity::thermoelastic_sine(role, s.required<double>("amplitude"));
    case NonlinearityKind::UserTable:
      return Nonlinearity::user_table(role, parse_terms(s.node("terms"), s.field("terms")),
                                      s.required<double>("lipschitz"));
  }
  return Nonlinearity::zero(role);
}

std::vector<double> ladder(int modes, double scale) {
  std::vector<double> v;
  for (int k = 1; k <= modes; ++k) v.push_back(scale * k * k);
  return v;
}

}  // namespace

Eigen::VectorXd ScenarioConfig::initial_x() const {
  const SpaceSpec& sp = model.A.space();
  Eigen::VectorXd x(sp.dim());
  for (int b = 0; b < sp.block_count(); ++b) {
    for (int j = 0; j < sp.block_size(b); ++j) x[sp.block_offset(b) + j] = x0_amplitude / (b + 1);
  }
  return x;
}

Eigen::VectorXd ScenarioConfig::initial_y() const {
  Eigen::VectorXd y(model.dim_y());
  for (int i = 0; i < y.size(); ++i) y[i] = y0_amplitude / (i + 1);
  return y;
}

ScenarioConfig parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(std::string("malformed config: ") + e.what(), "", e.mark.line + 1);
  }
  ScenarioConfig cfg;
  cfg.source = yaml_text;
  Section top(root, "", {"system", "scales", "manifold", "simulate", "filter", "run"});
  if (!top.has("system")) fail("required section is missing", "system", root);
  if (!top.has("scales")) fail("required section is missing", "scales", root);

  // system
  Section sys(top.node("system"), "system",
              {"slow", "fast", "gamma1", "F", "G", "sigma1", "sigma2", "covariance", "initial"});
  Section slow(sys.node("slow"), "system.slow", {"modes", "kind", "gamma", "entries", "rate"});
  Section fast(sys.node("fast"), "system.fast", {"modes", "kappa", "entries"});
  const int slow_modes = slow.get<int>("modes", 16);
  if (slow_modes < 1) fail("must be at least 1", slow.field("modes"), slow.node("modes"));
  const auto slow_kind = slow.get<std::string>("kind", "wave");
  SystemModel& m = cfg.model;
  double auto_gamma1 = 0.0;
  if (slow_kind == "wave") {
    const double gamma = slow.get<double>("gamma", 1.0);
    if (gamma < 0.0) fail("damping must be non-negative", slow.field("gamma"), slow.node("gamma"));
    m.A = SpectralOperator::wave(SpaceName::H1, ladder(slow_modes, 1.0), gamma);
    auto_gamma1 = gamma;
  } else if (slow_kind == "diagonal") {
    std::vector<double> entries;
    if (slow.has("entries")) {
      entries = slow.numbers("entries", {});
      if (static_cast<int>(entries.size()) != slow_modes) fail("needs one entry per mode", slow.field("entries"), slow.node("entries"));
    } else {
      entries = ladder(slow_modes, -slow.get<double>("rate", 1.0));
    }
    m.A = SpectralOperator::diagonal(SpaceName::H1, entries);
    for (double e : entries) auto_gamma1 = std::max(auto_gamma1, std::abs(e));
  } else {
    fail("kind must be wave or diagonal", slow.field("kind"), slow.node("kind"));
  }

  const int fast_modes = fast.get<int>("modes", 16);
  if (fast_modes < 1) fail("must be at least 1", fast.field("modes"), fast.node("modes"));
  std::vector<double> fast_entries;
  if (fast.has("entries")) {
    fast_entries = fast.numbers("entries", {});
    if (static_cast<int>(fast_entries.size()) != fast_modes) fail("needs one entry per mode", fast.field("entries"), fast.node("entries"));
  } else {
    fast_entries = ladder(fast_modes, -fast.get<double>("kappa", 2.0));
  }
  m.B = SpectralOperator::diagonal(SpaceName::H2, fast_entries);
  double gamma2 = std::numeric_limits<double>::infinity();
  for (double e : fast_entries) gamma2 = std::min(gamma2, -e);

  m.F = parse_nonlinearity(sys, "F", Role::Slow);
  m.G = parse_nonlinearity(sys, "G", Role::Fast);
  try {
    m.finalize();
  } catch (const StructuralError& e) {
    fail(e.what(), "system", sys.self());
  }

  SystemParams& p = m.params;
  p.sigma1 = sys.required<double>("sigma1");
  p.sigma2 = sys.required<double>("sigma2");
  cfg.gamma1_auto = sys.is_auto("gamma1");
  p.gamma1 = cfg.gamma1_auto ? auto_gamma1 : sys.get<double>("gamma1", auto_gamma1);
  p.gamma2 = gamma2;
  p.lipschitz = std::max(m.F.declared_lipschitz(), m.G.declared_lipschitz());

  Section cov(sys.node("covariance"), "system.covariance", {"k0", "decay"});
  const double k0 = positive(cov.get<double>("k0", 1.0), cov, "k0");
  const double decay = cov.get<double>("decay", 2.0);
  m.cov1 = CovarianceSpec::power_law(m.A.space(), k0, decay);
  m.cov2 = CovarianceSpec::power_law(m.B.space(), k0, decay);

  Section init(sys.node("initial"), "system.initial", {"x0_amplitude", "y0_amplitude"});
  cfg.x0_amplitude = init.get<double>("x0_amplitude", 1.0);
  cfg.y0_amplitude = init.get<double>("y0_amplitude", 1.0);

  // scales
  Section sc(top.node("scales"), "scales", {"epsilon", "epsilon_list", "mu", "T", "oversample_fast"});
  p.epsilon = positive(sc.required<double>("epsilon"), sc, "epsilon");
  cfg.epsilon_list = sc.numbers("epsilon_list", {0.1, 0.05, 0.025});
  for (double e : cfg.epsilon_list) {
    if (!(e > 0.0)) fail("every epsilon must be positive", sc.field("epsilon_list"), sc.node("epsilon_list"));
  }
  cfg.mu_auto = sc.is_auto("mu");
  p.mu = cfg.mu_auto ? default_mu(p.gamma2, p.lipschitz) : sc.get<double>("mu", 0.0);
  p.horizon_T = positive(sc.get<double>("T", 1.0), sc, "T");
  m.oversample_fast = sc.get<int>("oversample_fast", 10);
  if (m.oversample_fast < 1) fail("must be at least 1", sc.field("oversample_fast"), sc.node("oversample_fast"));

  // manifold
  Section mf(top.node("manifold"), "manifold", {"tol", "max_iterations", "tracking_tol"});
  cfg.manifold.tol = positive(mf.get<double>("tol", 1e-8), mf, "tol");
  cfg.manifold.truncation_tol = cfg.manifold.tol;
  cfg.manifold.max_iterations = mf.get<int>("max_iterations", 200);
  if (cfg.manifold.max_iterations < 1) fail("must be at least 1", mf.field("max_iterations"), mf.node("max_iterations"));
  cfg.tracking.tol = positive(mf.get<double>("tracking_tol", 1e-12), mf, "tracking_tol");
  cfg.tracking.truncation_tol = cfg.manifold.truncation_tol;
  cfg.tracking.max_iterations = cfg.manifold.max_iterations;

  // simulate
  Section sim(top.node("simulate"), "simulate", {"horizon", "reduced_init"});
  cfg.simulate.horizon = positive(sim.get<double>("horizon", 5.0), sim, "horizon");
  const auto init_kind = sim.get<std::string>("reduced_init", "tracking");
  if (init_kind == "tracking") {
    cfg.simulate.reduced_init = ReducedInit::Tracking;
  } else if (init_kind == "slow") {
    cfg.simulate.reduced_init = ReducedInit::Slow;
  } else {
    fail("must be tracking or slow", sim.field("reduced_init"), sim.node("reduced_init"));
  }

  // filter
  Section fl(top.node("filter"), "filter",
             {"h", "dim3", "particles", "coarsen", "p", "dictionary_size", "dictionary_scale", "times",
              "martingale_paths", "martingale_samples"});
  const int dim3 = fl.get<int>("dim3", 8);
  if (dim3 < 1) fail("must be at least 1", fl.field("dim3"), fl.node("dim3"));
  Section hs(fl.node("h"), "filter.h", {"kind", "slope", "clip", "terms", "c_h", "h_lip"});
  const auto h_tag = hs.get<std::string>("kind", "sine-of-slow");
  ObservationKind h_kind;
  try {
    h_kind = parse_observation_kind(h_tag);
  } catch (const DomainError& e) {
    fail(e.what(), hs.field("kind"), hs.node("kind"));
  }
  try {
    switch (h_kind) {
      case ObservationKind::SineOfSlow:
        cfg.observation = ObservationModel::sine_of_slow(dim3);
        break;
      case ObservationKind::BoundedLinear:
        cfg.observation = ObservationModel::bounded_linear(dim3, hs.get<double>("slope", 1.0), hs.get<double>("clip", 1.0));
        break;
      case ObservationKind::UserTable:
        cfg.observation = ObservationModel::user_table(dim3, hs.has("terms") ? parse_terms(hs.node("terms"), hs.field("terms"))
                                                                             : std::vector<TableTerm>{},
                                                       hs.required<double>("c_h"), hs.required<double>("h_lip"));
        break;
    }
    cfg.observation.bind(m.A.space(), m.B.space());
  } catch (const Error& e) {
    if (dynamic_cast<const ParseError*>(&e)) throw;
    fail(e.what(), "filter.h", hs.self() ? hs.self() : fl.self());
  }
  p.c_h = cfg.observation.c_h();
  p.h_lip = cfg.observation.h_lip();
  FilterOptions& fo = cfg.filter;
  fo.particles = fl.get<int>("particles", 2000);
  if (fo.particles < 2) fail("needs at least 2 particles", fl.field("particles"), fl.node("particles"));
  fo.coarsen = fl.get<int>("coarsen", 5);
  if (fo.coarsen < 1) fail("must be at least 1", fl.field("coarsen"), fl.node("coarsen"));
  fo.p = positive(fl.get<double>("p", 3.0), fl, "p");
  fo.dictionary_size = fl.get<int>("dictionary_size", 16);
  if (fo.dictionary_size < 8) fail("must be at least 8", fl.field("dictionary_size"), fl.node("dictionary_size"));
  fo.dictionary_scale = positive(fl.get<double>("dictionary_scale", 1.0), fl, "dictionary_scale");
  fo.times = fl.numbers("times", {1.0});
  for (double t : fo.times) {
    if (!(t > 0.0)) fail("filter times must be positive", fl.field("times"), fl.node("times"));
  }
  fo.martingale_paths = fl.get<int>("martingale_paths", 1000);
  fo.martingale_samples = fl.get<int>("martingale_samples", 10000);
  if (fo.martingale_paths < 1) fail("must be at least 1", fl.field("martingale_paths"), fl.node("martingale_paths"));
  if (fo.martingale_samples < 2) fail("must be at least 2", fl.field("martingale_samples"), fl.node("martingale_samples"));

  // run
  Section rn(top.node("run"), "run", {"seed", "replications", "output_dir"});
  cfg.run.seed = rn.get<std::uint64_t>("seed", cfg.run.seed);
  cfg.run.replications = rn.get<int>("replications", 20);
  if (cfg.run.replications < 1) fail("must be at least 1", rn.field("replications"), rn.node("replications"));
  cfg.run.output_dir = rn.get<std::string>("output_dir", "out");
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path, "", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string thermoelastic_yaml() {
  return R"(system:
  slow: {modes: 16, kind: wave, gamma: 1.0}
  fast: {modes: 16, kappa: 2.0}
  gamma1: auto
  F: {kind: thermoelastic-sine, amplitude: 0.5}
  G: {kind: thermoelastic-sine, amplitude: 0.5}
  sigma1: 0.5
  sigma2: 0.5
  covariance: {k0: 1.0, decay: 2.0}
  initial: {x0_amplitude: 1.0, y0_amplitude: 1.0}
scales:
  epsilon: 0.05
  epsilon_list: [0.1, 0.05, 0.025]
  mu: auto
  T: 1.0
  oversample_fast: 10
manifold: {tol: 1.0e-8, max_iterations: 200, tracking_tol: 1.0e-12}
simulate: {horizon: 5.0, reduced_init: tracking}
filter:
  h: {kind: sine-of-slow}
  dim3: 8
  particles: 2000
  coarsen: 5
  p: 3
  dictionary_size: 16
  dictionary_scale: 1.0
  times: [1.0]
  martingale_paths: 1000
  martingale_samples: 10000
run: {seed: 20240601, replications: 20, output_dir: out}
)";
}

ScenarioConfig thermoelastic_scenario() { return parse_scenario(thermoelastic_yaml()); }

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace slowfast
