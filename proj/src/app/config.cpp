#include "rliq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rliq/json_util.hpp"

namespace rliq {

ConfigError::ConfigError(std::string field, int line, const std::string& what)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + field + ": " + what),
      field_(std::move(field)),
      line_(line) {}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) s[i] = digits[x & 0xf];
  return s;
}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <class T>
T scalar_as(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError(path, line_of(n), "expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, line_of(n), "cannot read '" + n.Scalar() + "'");
  }
}

/// A mapping whose keys must all be consumed.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_, line_of(node_), "expected a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return has(key) ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
  }

  std::string path(const std::string& key) const { return join(path_, key); }
  int line(const std::string& key) const { return has(key) ? line_of(node_[key]) : line_of(node_); }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    YAML::Node n = raw(key);
    if (!n) return fallback;
    return scalar_as<T>(n, path(key));
  }

  template <class T>
  T require(const std::string& key) {
    YAML::Node n = raw(key);
    if (!n) throw ConfigError(path(key), line_of(node_), "missing required key");
    return scalar_as<T>(n, path(key));
  }

  template <class T>
  std::vector<T> list(const std::string& key, const std::vector<T>& fallback) {
    YAML::Node n = raw(key);
    if (!n) return fallback;
    if (!n.IsSequence()) throw ConfigError(path(key), line_of(n), "expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < n.size(); ++i)
      out.push_back(scalar_as<T>(n[i], path(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  Section sub(const std::string& key) { return Section(raw(key), path(key)); }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!used_.count(k)) throw ConfigError(join(path_, k), line_of(kv.first), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

nlohmann::json yaml_to_json(const YAML::Node& n) {
  if (n.IsMap()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& kv : n) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
    return j;
  }
  if (n.IsSequence()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : n) j.push_back(yaml_to_json(e));
    return j;
  }
  if (n.IsNull()) return nullptr;
  const std::string s = n.Scalar();
  long long i;
  double d;
  bool b;
  if (YAML::convert<long long>::decode(n, i)) return i;
  if (YAML::convert<double>::decode(n, d)) return d;
  if (YAML::convert<bool>::decode(n, b)) return b;
  return s;
}

ScalarField read_field(Section& s, const std::string& key, int dim, const ScalarField* fallback = nullptr) {
  YAML::Node n = s.raw(key);
  if (!n) {
    if (fallback) return *fallback;
    throw ConfigError(s.path(key), s.line(key), "missing required key");
  }
  try {
    return field_from_json(yaml_to_json(n), dim);
  } catch (const DomainError& e) {
    throw ConfigError(s.path(key) + "." + e.field(), line_of(n), e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(s.path(key), line_of(n), e.what());
  }
}

Point read_point(Section& s, const std::string& key, int dim, const Point& fallback) {
  const auto v = s.list<double>(key, std::vector<double>(fallback.data(), fallback.data() + fallback.size()));
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError(s.path(key), s.line(key), "needs " + std::to_string(dim) + " entries");
  Point p(dim);
  for (int i = 0; i < dim; ++i) p[i] = v[i];
  return p;
}

FactorModel read_model(Section s) {
  const std::string id = s.require<std::string>("id");
  FactorModel m;
  if (id == "ex1") {
    const ScalarField st = default_sigma_tilde_sq();
    const double mu = s.get<double>("mu", 0.0);
    const double sigma = s.get<double>("sigma", 1.0);
    const ScalarField sts = read_field(s, "sigma_tilde_sq", 2, &st);
    m = example_ex1_model(mu, sigma, sts);
  } else if (id == "constant") {
    const int dim = s.get<int>("dim", 1);
    if (dim < 1 || dim > kMaxDim) throw ConfigError(s.path("dim"), s.line("dim"), "must be 1 or 2");
    const double eta = s.require<double>("eta");
    const double lambda = s.get<double>("lambda", 0.0);
    const Point drift = read_point(s, "drift", dim, Point::Zero(dim));
    const Point sigma = read_point(s, "sigma", dim, Point::Ones(dim));
    m = constant_model(dim, eta, lambda, drift, sigma);
  } else if (id == "ou_liquidity") {
    const double kappa = s.get<double>("kappa", 1.0);
    const double sigma = s.get<double>("sigma", 1.0);
    const double lambda = s.get<double>("lambda", 0.0);
    m = ou_liquidity_model(kappa, sigma, lambda);
  } else if (id == "custom") {
    const int dim = s.require<int>("dim");
    if (dim < 1 || dim > kMaxDim) throw ConfigError(s.path("dim"), s.line("dim"), "must be 1 or 2");
    m.id = s.get<std::string>("name", "custom");
    m.dim = dim;
    for (const char* key : {"drift", "vol"}) {
      YAML::Node n = s.raw(key);
      if (!n || !n.IsSequence() || static_cast<int>(n.size()) != dim)
        throw ConfigError(s.path(key), n ? line_of(n) : s.line(key), "needs a list of " + std::to_string(dim) + " fields");
      for (std::size_t i = 0; i < n.size(); ++i) {
        try {
          (std::string(key) == "drift" ? m.drift : m.vol).push_back(field_from_json(yaml_to_json(n[i]), dim));
        } catch (const DomainError& e) {
          throw ConfigError(s.path(key) + "[" + std::to_string(i) + "]." + e.field(), line_of(n[i]), e.what());
        }
      }
    }
    m.eta = read_field(s, "eta", dim);
    m.lambda = read_field(s, "lambda", dim);
    m.declares_bounded_costs = s.get<bool>("bounded_costs", true);
    m.declares_elliptic = s.get<bool>("elliptic", true);
  } else {
    throw ConfigError(s.path("id"), s.line("id"), "unknown model '" + id + "' (ex1, constant, ou_liquidity, custom)");
  }
  if (s.has("constants")) {
    Section c = s.sub("constants");
    m.constants.c_lower = c.get<double>("c_lower", m.constants.c_lower);
    m.constants.c_upper = c.get<double>("c_upper", m.constants.c_upper);
    m.constants.k0 = c.get<double>("k0", m.constants.k0);
    c.finish();
  }
  s.finish();
  check_model(m);
  return m;
}

Box read_box(Section& s, const std::string& key, int dim, const std::optional<Box>& fallback) {
  if (!s.has(key)) {
    if (fallback) return *fallback;
    throw ConfigError(s.path(key), s.line(key), "missing required key");
  }
  Section b = s.sub(key);
  Box box;
  box.lo = read_point(b, "lo", dim, Point::Zero(dim));
  box.hi = read_point(b, "hi", dim, Point::Zero(dim));
  for (int i = 0; i < dim; ++i)
    if (!(box.lo[i] < box.hi[i])) throw ConfigError(s.path(key), s.line(key), "lo must be below hi in every axis");
  b.finish();
  return box;
}

template <class Fn>
auto guarded(const std::string& field, int line, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError& e) {
    throw ConfigError(field + "." + e.field(), line, e.what());
  }
}

}  // namespace

SpaceTimeGrid ExperimentConfig::make_space_time_grid() const {
  return make_grid(params.T, grid.tau_min, grid.n_time, grid.box, grid.n_space, grid.step_ratio);
}

nlohmann::json ExperimentConfig::solution_key() const {
  nlohmann::json j;
  j["model"] = model.to_json();
  j["params"] = {{"p", params.p}, {"m", params.m}, {"T", params.T}, {"theta", params.theta}};
  j["grid"] = {{"lo", json_point(grid.box.lo)},
               {"hi", json_point(grid.box.hi)},
               {"n_space", grid.n_space},
               {"n_time", grid.n_time},
               {"tau_min", grid.tau_min},
               {"step_ratio", grid.step_ratio}};
  const LayerOptions& l = solver.layer;
  j["solver"] = {{"max_newton", solver.max_newton},     {"newton_tol", solver.newton_tol},
                 {"linear_tol", solver.linear_tol},     {"layer_nodes", l.n_nodes},
                 {"layer_ratio", l.ratio},              {"layer_max_iterations", l.max_iterations},
                 {"layer_tol", l.tol},                  {"layer_linear_tol", l.linear_tol}};
  return j;
}

std::uint64_t ExperimentConfig::solution_hash() const { return fnv1a(solution_key().dump()); }

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("(syntax)", e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ConfigError("(root)", 1, "expected a mapping of sections");
  Section top(root, "");
  ExperimentConfig cfg;
  cfg.text = text;

  if (!top.has("model")) throw ConfigError("model", 0, "missing required section");
  cfg.model_spec = yaml_to_json(root["model"]);
  cfg.model = guarded("model", top.line("model"), [&] { return read_model(top.sub("model")); });
  const int d = cfg.model.dim;

  {
    Section p = top.sub("params");
    const double pp = p.require<double>("p"), m = p.require<double>("m");
    const double T = p.get<double>("T", 1.0), th = p.get<double>("theta", 0.0);
    const int line = p.line("p");
    cfg.params = guarded("params", line, [&] { return make_params(pp, m, T, th); });
    p.finish();
  }
  {
    Section g = top.sub("grid");
    cfg.grid.box = read_box(g, "box", d, std::nullopt);
    cfg.grid.n_space = g.list<int>("n_space", std::vector<int>(d, 41));
    if (static_cast<int>(cfg.grid.n_space.size()) != d)
      throw ConfigError("grid.n_space", g.line("n_space"), "needs one entry per factor");
    for (int n : cfg.grid.n_space)
      if (n < 5) throw ConfigError("grid.n_space", g.line("n_space"), "needs at least 5 nodes per axis");
    cfg.grid.n_time = g.get<int>("n_time", cfg.grid.n_time);
    cfg.grid.tau_min = g.get<double>("tau_min", cfg.grid.tau_min);
    cfg.grid.step_ratio = g.get<double>("step_ratio", cfg.grid.step_ratio);
    if (cfg.grid.n_time < 3) throw ConfigError("grid.n_time", g.line("n_time"), "needs at least 3 time nodes");
    if (!(cfg.grid.tau_min > 0.0 && cfg.grid.tau_min < cfg.params.T))
      throw ConfigError("grid.tau_min", g.line("tau_min"), "must lie in (0, T)");
    if (!(cfg.grid.step_ratio >= 1.0)) throw ConfigError("grid.step_ratio", g.line("step_ratio"), "must be >= 1");
    g.finish();
    guarded("grid", top.line("grid"), [&] { return cfg.make_space_time_grid(); });
  }
  {
    Section s = top.sub("solver");
    cfg.solver.max_newton = s.get<int>("max_newton", cfg.solver.max_newton);
    cfg.solver.newton_tol = s.get<double>("newton_tol", cfg.solver.newton_tol);
    cfg.solver.linear_tol = s.get<double>("linear_tol", cfg.solver.linear_tol);
    LayerOptions& l = cfg.solver.layer;
    l.n_nodes = s.get<int>("layer_nodes", l.n_nodes);
    l.ratio = s.get<double>("layer_ratio", l.ratio);
    l.max_iterations = s.get<int>("layer_max_iterations", l.max_iterations);
    l.tol = s.get<double>("layer_tol", l.tol);
    l.linear_tol = s.get<double>("layer_linear_tol", l.linear_tol);
    s.finish();
  }
  {
    Section a = top.sub("assumptions");
    cfg.assumption_samples = a.get<int>("n_samples", cfg.assumption_samples);
    if (cfg.assumption_samples < 1) throw ConfigError("assumptions.n_samples", a.line("n_samples"), "must be >= 1");
    cfg.assumption_box = read_box(a, "box", d, cfg.grid.box);
    a.finish();
  }
  {
    Section v = top.sub("verify");
    BoundsOptions& b = cfg.verify.bounds;
    b.n_samples = v.get<int>("n_samples", b.n_samples);
    b.n_time_samples = v.get<int>("n_time_samples", b.n_time_samples);
    b.inflation = v.get<double>("inflation", b.inflation);
    cfg.verify.slack_factor = v.get<double>("slack_factor", cfg.verify.slack_factor);
    cfg.verify.n_dyadic = v.get<int>("n_dyadic", cfg.verify.n_dyadic);
    cfg.verify.rate_margin = v.get<double>("rate_margin", cfg.verify.rate_margin);
    if (!(b.inflation >= 1.0)) throw ConfigError("verify.inflation", v.line("inflation"), "must be >= 1");
    if (cfg.verify.n_dyadic < 2) throw ConfigError("verify.n_dyadic", v.line("n_dyadic"), "needs at least 2 times");
    v.finish();
  }
  {
    Section s = top.sub("simulation");
    SimulationSpec& sp = cfg.simulation.spec;
    sp.t0 = s.get<double>("t0", 0.0);
    sp.y0 = read_point(s, "y0", d, Point::Zero(d));
    sp.x0 = s.get<double>("x0", sp.x0);
    const long long n_paths = s.get<long long>("n_paths", static_cast<long long>(sp.n_paths));
    if (n_paths < 1) throw ConfigError("simulation.n_paths", s.line("n_paths"), "must be >= 1");
    sp.n_paths = static_cast<std::size_t>(n_paths);
    sp.n_steps = s.get<int>("n_steps", sp.n_steps);
    if (sp.n_steps < 10) throw ConfigError("simulation.n_steps", s.line("n_steps"), "must be >= 10");
    sp.step_ratio = s.get<double>("step_ratio", sp.step_ratio);
    sp.h_end = s.get<double>("h_end", sp.h_end);
    if (!(sp.h_end > 0.0 && sp.h_end < 1.0)) throw ConfigError("simulation.h_end", s.line("h_end"), "must lie in (0, 1)");
    sp.probe_s = s.list<double>("probe_s", {});
    sp.stream = s.get<std::uint64_t>("stream", sp.stream);
    cfg.simulation.gammas = s.list<double>("gammas", cfg.simulation.gammas);
    cfg.simulation.rhos = s.list<double>("rhos", cfg.simulation.rhos);
    for (double g : cfg.simulation.gammas)
      if (!(g > 0.0)) throw ConfigError("simulation.gammas", s.line("gammas"), "scalings must be positive");
    for (double r : cfg.simulation.rhos)
      if (!(r >= 0.0)) throw ConfigError("simulation.rhos", s.line("rhos"), "scalings must be nonnegative");
    cfg.simulation.dump_paths = s.get<std::size_t>("dump_paths", 0);
    if (!(sp.t0 >= 0.0 && sp.t0 < cfg.params.T)) throw ConfigError("simulation.t0", s.line("t0"), "must lie in [0, T)");
    s.finish();
  }
  {
    Section a = top.sub("asymptotics");
    cfg.asymptotics.thetas = a.list<double>("thetas", {});
    for (double th : cfg.asymptotics.thetas)
      if (!(th > 0.0)) throw ConfigError("asymptotics.thetas", a.line("thetas"), "values must be positive");
    cfg.asymptotics.fk_paths = a.get<std::size_t>("fk_paths", 0);
    cfg.asymptotics.fk.step_ratio = a.get<double>("fk_step_ratio", cfg.asymptotics.fk.step_ratio);
    cfg.asymptotics.fk.max_dt = a.get<double>("fk_max_dt", cfg.asymptotics.fk.max_dt);
    cfg.asymptotics.fk.stream = a.get<std::uint64_t>("fk_stream", cfg.asymptotics.fk.stream);
    cfg.asymptotics.refit = a.get<bool>("refit", true);
    YAML::Node pts = a.raw("fk_points");
    if (pts) {
      if (!pts.IsSequence()) throw ConfigError("asymptotics.fk_points", line_of(pts), "expected a list of [s, y...]");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string path = "asymptotics.fk_points[" + std::to_string(i) + "]";
        if (!pts[i].IsSequence() || static_cast<int>(pts[i].size()) != d + 1)
          throw ConfigError(path, line_of(pts[i]), "expected [s, y1" + std::string(d == 2 ? ", y2]" : "]"));
        Point y(d);
        for (int k = 0; k < d; ++k) y[k] = scalar_as<double>(pts[i][k + 1], path);
        cfg.asymptotics.fk_points.push_back({scalar_as<double>(pts[i][0], path), y});
      }
    }
    a.finish();
  }
  {
    Section o = top.sub("output");
    cfg.output_dir = o.get<std::string>("dir", cfg.output_dir);
    o.finish();
  }
  cfg.seed = top.get<std::uint64_t>("seed", cfg.seed);
  cfg.simulation.spec.seed = cfg.seed;
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", 0, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rliq
