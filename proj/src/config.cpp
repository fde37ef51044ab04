#include "tumorctl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "tumorctl/errors.hpp"

namespace tumorctl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

// Family shape parameters reachable as model.<name>.
std::vector<std::pair<const char*, double LogisticFamily::*>> family_keys() {
  return {{"p_star", &LogisticFamily::p_star},     {"eta_p", &LogisticFamily::eta_p},
          {"p_shift", &LogisticFamily::p_shift},   {"p_z", &LogisticFamily::p_z},
          {"g_star", &LogisticFamily::g_star},     {"eta_g", &LogisticFamily::eta_g},
          {"g_shift", &LogisticFamily::g_shift},   {"g_z", &LogisticFamily::g_z},
          {"k1_star", &LogisticFamily::k1_star},   {"k1_shift", &LogisticFamily::k1_shift},
          {"k1_phi", &LogisticFamily::k1_phi},     {"k1_z", &LogisticFamily::k1_z},
          {"k2_low", &LogisticFamily::k2_low},     {"k2_star", &LogisticFamily::k2_star},
          {"k2_shift", &LogisticFamily::k2_shift}, {"k2_phi", &LogisticFamily::k2_phi},
          {"k2_z", &LogisticFamily::k2_z},         {"s_star", &LogisticFamily::s_star},
          {"eta_s", &LogisticFamily::eta_s},       {"s_shift", &LogisticFamily::s_shift},
          {"s_z", &LogisticFamily::s_z},           {"mu_min", &LogisticFamily::mu_min},
          {"mu_max", &LogisticFamily::mu_max},     {"lam_min", &LogisticFamily::lam_min},
          {"lam_max", &LogisticFamily::lam_max},   {"a_b", &LogisticFamily::a_b},
          {"b_b", &LogisticFamily::b_b},           {"c_b", &LogisticFamily::c_b},
          {"psi_max", &LogisticFamily::psi_max},   {"a_psi", &LogisticFamily::a_psi},
          {"b_psi", &LogisticFamily::b_psi},       {"gamma0", &LogisticFamily::gamma0},
          {"gamma_slope", &LogisticFamily::gamma_slope}};
}

std::string format_default(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<RunConfig::Entry> make_schema() {
  std::vector<RunConfig::Entry> s = {
      {"seed", "20240601", "seed of every randomized draw"},
      {"grid.nx", "48", "cells along x"},
      {"grid.ny", "48", "cells along y"},
      {"grid.lx", "1", "domain length along x"},
      {"grid.ly", "1", "domain length along y"},
      {"time.T", "1", "final time"},
      {"time.steps", "400", "number of uniform time steps"},
      {"model.N", "1", "carrying capacity"},
      {"model.M0", "1", "bound of the initial and boundary lactate"},
      {"model.C1", "1", "coefficient of the logarithmic part of the potential"},
      {"model.C2", "0.5", "coefficient of the concave quadratic part"},
      {"model.A_mu", "1", "viscous tensor, shear coefficient"},
      {"model.A_lam", "0.5", "viscous tensor, bulk coefficient"},
      {"model.k2_variable", "false", "use the phi,z-dependent k2 instead of the constant"},
      {"model.phi0", "gauss(0.6, 0.5, 0.5, 0.15)", "initial tumor fraction"},
      {"model.sigma0", "0.5", "initial lactate"},
      {"model.z0", "gauss(0.1, 0.5, 0.5, 0.2, 0.3)", "initial damage"},
      {"model.u0.x", "0", "initial displacement, x component"},
      {"model.u0.y", "0", "initial displacement, y component"},
      {"model.iota", "0.1", "damage source"},
      {"model.sigma_gamma", "0.5", "boundary lactate datum"},
      {"model.f.x", "0", "body force, x component"},
      {"model.f.y", "gauss(-1, 0.5, 0.5, 0.2)", "body force, y component"},
      {"model.gamma_weight", "1", "spatial factor of gamma(x, phi)"},
      {"cost.alpha1", "1", "running tumor tracking"},
      {"cost.alpha2", "1", "final tumor tracking"},
      {"cost.alpha3", "0.1", "final tumor mass"},
      {"cost.alpha4", "1", "running lactate tracking"},
      {"cost.alpha5", "1", "final lactate tracking"},
      {"cost.alpha6", "0.1", "elastic energy"},
      {"cost.alpha7", "1", "running damage tracking"},
      {"cost.alpha8", "0.1", "final damage mass"},
      {"cost.alpha9", "0.01", "control cost"},
      {"cost.targets", "expressions", "expressions | synthetic"},
      {"cost.phi_Q", "0.2", "running tumor target"},
      {"cost.sigma_Q", "0.3", "running lactate target"},
      {"cost.z_Q", "0.4", "running damage target"},
      {"cost.phi_Omega", "0", "final tumor target"},
      {"cost.sigma_Omega", "0.3", "final lactate target"},
      {"cost.true_chi1", "0.5", "chi1 generating synthetic targets"},
      {"cost.true_chi2", "0.5", "chi2 generating synthetic targets"},
      {"control.chi1", "0.2", "initial chi1"},
      {"control.chi2", "0.3", "initial chi2"},
      {"admissible.chi1_low", "0", "lower bound of chi1"},
      {"admissible.chi1_high", "1", "upper bound of chi1"},
      {"admissible.chi2_low", "0", "lower bound of chi2"},
      {"admissible.chi2_high", "1", "upper bound of chi2"},
      {"admissible.C_ad", "10", "radius of the L2(V) ball for chi1"},
      {"optimizer.lambda0", "1", "initial Armijo step"},
      {"optimizer.lambda_max", "1000", "largest Armijo trial step"},
      {"optimizer.shrink", "0.5", "Armijo step reduction"},
      {"optimizer.armijo", "1e-4", "sufficient decrease constant"},
      {"optimizer.tol", "1e-6", "stationarity tolerance relative to the initial measure"},
      {"optimizer.max_iter", "200", "iteration limit"},
      {"optimizer.vi_probes", "16", "random probes of the variational inequality"},
      {"check.samples", "10000", "draws per hypothesis"},
      {"check.directions", "5", "random directions of the gradient check"},
      {"check.direction", "random", "random, or a field expression used for both components"},
      {"check.fd_eps", "1e-3", "central difference step"},
      {"check.taylor_eps", "1e-1,1e-2,1e-3,1e-4", "Taylor test ladder"},
      {"output.dir", "out", "output directory"},
      {"output.stride", "10", "snapshot every n-th time node"},
      {"output.format", "csv", "csv | binary | both"},
  };
  const LogisticFamily def;
  for (const auto& [name, member] : family_keys())
    s.push_back({std::string("model.") + name, format_default(def.*member), "logistic family parameter"});
  return s;
}

const RunConfig::Entry* find_entry(const std::string& key) {
  for (const auto& e : RunConfig::schema())
    if (e.key == key) return &e;
  return nullptr;
}

std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double term_value(const std::string& name, const std::vector<double>& a, double x, double y, const Grid& g) {
  const double pi = std::numbers::pi;
  if (name == "gauss") {
    const double r2 = (x - a[1]) * (x - a[1]) + (y - a[2]) * (y - a[2]);
    return (a.size() > 4 ? a[4] : 0.0) + a[0] * std::exp(-r2 / (2.0 * a[3] * a[3]));
  }
  if (name == "tanh_front") {
    const double r = std::hypot(x - a[2], y - a[3]);
    return a[1] + (a[0] - a[1]) * 0.5 * (1.0 - std::tanh((r - a[4]) / a[5]));
  }
  if (name == "cosine")
    return (a.size() > 3 ? a[3] : 0.0) + a[0] * std::cos(a[1] * pi * x / g.lx()) * std::cos(a[2] * pi * y / g.ly());
  return (a.size() > 3 ? a[3] : 0.0) + a[0] * std::sin(a[1] * pi * x / g.lx()) * std::sin(a[2] * pi * y / g.ly());
}

ScalarField eval_term(const std::string& term, const Grid& g, const std::string& base_dir) {
  double value = 0.0;
  if (parse_double(term, value)) return ScalarField(g, value);
  const auto open = term.find('(');
  if (open == std::string::npos || term.back() != ')')
    throw ConfigError("expression: cannot parse term '" + term + "'");
  const std::string name = trim(term.substr(0, open));
  const std::string inside = term.substr(open + 1, term.size() - open - 2);
  if (name == "snapshot") {
    std::filesystem::path p(trim(inside));
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    ScalarField f = p.extension() == ".csv" ? read_snapshot_csv(p.string()) : read_snapshot_binary(p.string());
    if (f.grid != g) throw ConfigError("expression: snapshot " + p.string() + " is on a different grid");
    return f;
  }
  struct Arity {
    const char* name;
    std::size_t min, max;
  };
  static const Arity known[] = {{"gauss", 4, 5}, {"tanh_front", 6, 6}, {"cosine", 3, 4}, {"sine", 3, 4}};
  const Arity* arity = nullptr;
  for (const auto& k : known)
    if (name == k.name) arity = &k;
  if (!arity) throw ConfigError("expression: unknown function '" + name + "'");
  std::vector<double> args;
  for (const auto& s : split_args(inside)) {
    if (!parse_double(s, value)) throw ConfigError("expression: bad argument '" + s + "' in '" + term + "'");
    args.push_back(value);
  }
  if (args.size() < arity->min || args.size() > arity->max)
    throw ConfigError("expression: wrong number of arguments in '" + term + "'");
  if ((name == "gauss" && args[3] <= 0.0) || (name == "tanh_front" && args[5] <= 0.0))
    throw ConfigError("expression: width must be positive in '" + term + "'");
  return ScalarField::from_function(g, [&](double x, double y) { return term_value(name, args, x, y, g); });
}

ScalarField field(const RunConfig& cfg, const std::string& key, const Grid& g) {
  try {
    return eval_field_expression(cfg.get(key), g, cfg.base_dir());
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::vector<ScalarField> repeated(const ScalarField& f, std::size_t nodes) { return std::vector<ScalarField>(nodes, f); }

}  // namespace

const std::vector<RunConfig::Entry>& RunConfig::schema() {
  static const std::vector<Entry> s = make_schema();
  return s;
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (const auto& e : schema()) c.values_[e.key] = e.default_value;
  return c;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c = defaults();
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!find_entry(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig c = parse(buf.str(), path);
  c.base_dir_ = std::filesystem::path(path).parent_path().string();
  if (c.base_dir_.empty()) c.base_dir_ = ".";
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!find_entry(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  double v = 0.0;
  if (!parse_double(get(key), v)) throw ConfigError(key + ": expected a number, got '" + get(key) + "'");
  return v;
}

int RunConfig::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key + ": expected an integer");
  return static_cast<int>(v);
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false");
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_args(get(key))) {
    double v = 0.0;
    if (!parse_double(s, v)) throw ConfigError(key + ": bad list entry '" + s + "'");
    out.push_back(v);
  }
  return out;
}

std::uint64_t RunConfig::seed() const {
  const double v = number("seed");
  if (v < 0 || v != std::floor(v)) throw ConfigError("seed: expected a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& e : schema()) out += e.key + " = " + values_.at(e.key) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

ScalarField eval_field_expression(const std::string& expr, const Grid& grid, const std::string& base_dir) {
  // Split on top-level " + " so exponents like 1e+3 stay intact.
  std::vector<std::string> terms;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    if (expr[i] == '(') ++depth;
    if (expr[i] == ')') --depth;
    if (depth == 0 && expr[i] == '+' && i > 0 && i + 1 < expr.size() && expr[i - 1] == ' ' && expr[i + 1] == ' ') {
      terms.push_back(trim(expr.substr(start, i - start)));
      start = i + 1;
    }
  }
  terms.push_back(trim(expr.substr(start)));
  if (depth != 0) throw ConfigError("expression: unbalanced parentheses in '" + expr + "'");
  ScalarField sum(grid);
  for (const auto& t : terms) {
    if (t.empty()) throw ConfigError("expression: empty term in '" + expr + "'");
    sum.v += eval_term(t, grid, base_dir).v;
  }
  return sum;
}

Grid build_grid(const RunConfig& cfg) {
  try {
    return Grid::on_rectangle(cfg.integer("grid.nx"), cfg.integer("grid.ny"), cfg.number("grid.lx"),
                              cfg.number("grid.ly"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

int build_steps(const RunConfig& cfg) {
  const int steps = cfg.integer("time.steps");
  if (steps < 1) throw ConfigError("time.steps must be positive");
  return steps;
}

LogisticFamily build_family(const RunConfig& cfg) {
  LogisticFamily f;
  f.n_cap = cfg.number("model.N");
  f.k2_variable = cfg.flag("model.k2_variable");
  for (const auto& [name, member] : family_keys()) f.*member = cfg.number(std::string("model.") + name);
  return f;
}

ModelSpec build_model(const RunConfig& cfg) {
  ModelSpec m;
  m.grid = build_grid(cfg);
  const LogisticFamily fam = build_family(cfg);
  if (!(fam.n_cap > 0.0)) throw ConfigError("model.N must be positive");
  m.fn = fam.make();
  m.bounds = fam.declared_bounds();
  m.n_cap = fam.n_cap;
  m.a_mu = cfg.number("model.A_mu");
  m.a_lam = cfg.number("model.A_lam");
  if (!(m.a_mu > 0.0) || !(m.a_mu + m.a_lam > 0.0)) throw ConfigError("model.A_mu, model.A_lam: viscous tensor must be positive definite");
  m.potential = {cfg.number("model.C1"), cfg.number("model.C2")};
  if (!(m.potential.c1 > 0.0)) throw ConfigError("model.C1 must be positive");
  m.m0 = cfg.number("model.M0");
  m.t_final = cfg.number("time.T");
  if (!(m.t_final > 0.0)) throw ConfigError("time.T must be positive");

  const Grid& g = m.grid;
  m.force = VectorField(g);
  m.force.u1 = field(cfg, "model.f.x", g).v;
  m.force.u2 = field(cfg, "model.f.y", g).v;
  m.iota = field(cfg, "model.iota", g);
  m.sigma_gamma = field(cfg, "model.sigma_gamma", g);
  m.gamma_weight = field(cfg, "model.gamma_weight", g);
  m.phi0 = field(cfg, "model.phi0", g);
  m.sigma0 = field(cfg, "model.sigma0", g);
  m.z0 = field(cfg, "model.z0", g);
  m.u0 = VectorField(g);
  m.u0.u1 = field(cfg, "model.u0.x", g).v;
  m.u0.u2 = field(cfg, "model.u0.y", g).v;
  return m;
}

Control control_from_fields(const ScalarField& chi1, const ScalarField& chi2, std::size_t time_nodes) {
  Control c;
  c.chi1 = repeated(chi1, time_nodes);
  c.chi2 = repeated(chi2, time_nodes);
  return c;
}

Control build_initial_control(const RunConfig& cfg, const ModelSpec& spec) {
  const std::size_t nodes = static_cast<std::size_t>(build_steps(cfg)) + 1;
  return control_from_fields(field(cfg, "control.chi1", spec.grid), field(cfg, "control.chi2", spec.grid), nodes);
}

Control build_true_control(const RunConfig& cfg, const ModelSpec& spec) {
  const std::size_t nodes = static_cast<std::size_t>(build_steps(cfg)) + 1;
  return control_from_fields(field(cfg, "cost.true_chi1", spec.grid), field(cfg, "cost.true_chi2", spec.grid),
                             nodes);
}

CostSpec build_cost(const RunConfig& cfg, const ModelSpec& spec) {
  const int steps = build_steps(cfg);
  const std::size_t nodes = static_cast<std::size_t>(steps) + 1;
  CostSpec c = CostSpec::zero(spec.grid, nodes);
  for (int i = 1; i <= 9; ++i) c.a(i) = cfg.number("cost.alpha" + std::to_string(i));
  const std::string& mode = cfg.get("cost.targets");
  if (mode == "expressions") {
    c.phi_q = repeated(field(cfg, "cost.phi_Q", spec.grid), nodes);
    c.sigma_q = repeated(field(cfg, "cost.sigma_Q", spec.grid), nodes);
    c.z_q = repeated(field(cfg, "cost.z_Q", spec.grid), nodes);
    c.phi_omega = field(cfg, "cost.phi_Omega", spec.grid);
    c.sigma_omega = field(cfg, "cost.sigma_Omega", spec.grid);
  } else if (mode == "synthetic") {
    const StateTrajectory truth = solve_state(build_true_control(cfg, spec), spec, steps);
    c.phi_q = truth.phi;
    c.sigma_q = truth.sigma;
    c.z_q = truth.z;
    c.phi_omega = truth.phi.back();
    c.sigma_omega = truth.sigma.back();
  } else {
    throw ConfigError("cost.targets: expected 'expressions' or 'synthetic'");
  }
  c.validate(spec.grid, nodes);
  return c;
}

CostHypothesisInput build_cost_hypothesis_input(const CostSpec& cost) {
  CostHypothesisInput in;
  in.alpha = cost.alpha;
  auto finite = [](const std::vector<ScalarField>& f) {
    return std::all_of(f.begin(), f.end(), [](const ScalarField& s) { return s.all_finite(); });
  };
  in.targets_finite = finite(cost.phi_q) && finite(cost.sigma_q) && finite(cost.z_q) &&
                      cost.phi_omega.all_finite() && cost.sigma_omega.all_finite();
  return in;
}

AdmissibleBox build_box(const RunConfig& cfg, const ModelSpec& spec) {
  const std::size_t nodes = static_cast<std::size_t>(build_steps(cfg)) + 1;
  AdmissibleBox b;
  b.chi1_low = repeated(field(cfg, "admissible.chi1_low", spec.grid), nodes);
  b.chi1_high = repeated(field(cfg, "admissible.chi1_high", spec.grid), nodes);
  b.chi2_low = repeated(field(cfg, "admissible.chi2_low", spec.grid), nodes);
  b.chi2_high = repeated(field(cfg, "admissible.chi2_high", spec.grid), nodes);
  b.c_ad = cfg.number("admissible.C_ad");
  b.validate(spec.grid, nodes);
  return b;
}

OptimizerOptions build_optimizer_options(const RunConfig& cfg) {
  OptimizerOptions o;
  o.lambda0 = cfg.number("optimizer.lambda0");
  o.lambda_max = cfg.number("optimizer.lambda_max");
  o.shrink = cfg.number("optimizer.shrink");
  o.armijo = cfg.number("optimizer.armijo");
  o.tol = cfg.number("optimizer.tol");
  o.max_iterations = cfg.integer("optimizer.max_iter");
  if (!(o.lambda0 > 0.0) || !(o.lambda_max >= o.lambda0) || !(o.shrink > 0.0 && o.shrink < 1.0) || o.max_iterations < 0)
    throw ConfigError("optimizer: need 0 < lambda0 <= lambda_max, 0 < shrink < 1, max_iter >= 0");
  return o;
}

Control random_smooth_direction(const Grid& g, std::size_t time_nodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  std::uniform_real_distribution<double> offset(0.5, 1.0);
  auto one = [&] {
    const double base = offset(rng);
    double a[3][3];
    for (auto& row : a)
      for (auto& v : row) v = coef(rng);
    const double time_amp = coef(rng);
    const ScalarField space = ScalarField::from_function(g, [&](double x, double y) {
      double s = base;
      for (int kx = 0; kx < 3; ++kx)
        for (int ky = 0; ky < 3; ++ky)
          if (kx + ky > 0)
            s += a[kx][ky] * std::cos(kx * std::numbers::pi * x / g.lx()) * std::cos(ky * std::numbers::pi * y / g.ly());
      return s;
    });
    std::vector<ScalarField> out;
    out.reserve(time_nodes);
    for (std::size_t n = 0; n < time_nodes; ++n) {
      const double t = time_nodes > 1 ? static_cast<double>(n) / static_cast<double>(time_nodes - 1) : 0.0;
      out.emplace_back(g, space.v * (1.0 + time_amp * std::cos(std::numbers::pi * t)));
    }
    return out;
  };
  Control c;
  c.chi1 = one();
  c.chi2 = one();
  return c;
}

}  // namespace tumorctl
