#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "tumorctl/adjoint.hpp"
#include "tumorctl/control.hpp"
#include "tumorctl/errors.hpp"
#include "tumorctl/linearized.hpp"
#include "tumorctl/model.hpp"
#include "tumorctl/ode_oracle.hpp"
#include "tumorctl/state.hpp"

namespace tumorctl::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kTaylorSlopeMin = 1.25;
constexpr double kGradientTol = 1e-2;
constexpr double kSeparationSlack = 1e-12;
constexpr int kSeparationSamples = 1000;
constexpr double kOracleFactor = 5.0;
constexpr double kViTol = 1e-6;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string node_tag(std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", n);
  return buf;
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir = cfg.get("output.dir");
  fs::create_directories(dir);
  return dir;
}

// Writes one field in the configured format(s); returns the file names.
std::vector<std::string> write_field(const fs::path& dir, const std::string& stem, const ScalarField& f,
                                     double t, const std::string& format) {
  std::vector<std::string> files;
  if (format == "csv" || format == "both") {
    write_snapshot_csv((dir / (stem + ".csv")).string(), f, t);
    files.push_back(stem + ".csv");
  }
  if (format == "binary" || format == "both") {
    write_snapshot_binary((dir / (stem + ".tcf")).string(), f, t);
    files.push_back(stem + ".tcf");
  }
  return files;
}

std::string snapshot_format(const RunConfig& cfg) {
  const std::string& f = cfg.get("output.format");
  if (f != "csv" && f != "binary" && f != "both") throw ConfigError("output.format: expected csv, binary or both");
  return f;
}

int snapshot_stride(const RunConfig& cfg) {
  const int s = cfg.integer("output.stride");
  if (s < 1) throw ConfigError("output.stride must be positive");
  return s;
}

// Node indices to snapshot: every stride-th node plus the last one.
std::vector<std::size_t> snapshot_nodes(std::size_t nodes, int stride) {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < nodes; n += static_cast<std::size_t>(stride)) out.push_back(n);
  if (out.back() != nodes - 1) out.push_back(nodes - 1);
  return out;
}

class Manifest {
 public:
  void add(const std::string& key, const std::string& value) { lines_.push_back(key + " = " + value); }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  void write(const fs::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (const auto& l : lines_) os << l << "\n";
  }

 private:
  std::vector<std::string> lines_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void add_run_keys(Manifest& m, const std::string& command, const RunConfig& cfg, const ModelSpec& spec, int steps) {
  m.add("command", command);
  m.add("seed", std::to_string(cfg.seed()));
  m.add("grid", std::to_string(spec.grid.nx()) + "x" + std::to_string(spec.grid.ny()));
  m.add("steps", std::to_string(steps));
  m.add("tau", spec.t_final / steps);
}

// Runs the hypothesis sampler and returns the failing ids, empty when all pass.
std::vector<std::string> failed_hypotheses(const RunConfig& cfg, const ModelSpec& spec,
                                           const CostHypothesisInput* cost, HypothesisReport* keep = nullptr) {
  const int samples = cfg.integer("check.samples");
  if (samples < 1) throw ConfigError("check.samples must be positive");
  HypothesisReport rep = check_hypotheses(spec, samples, cfg.seed(), cost);
  std::vector<std::string> out;
  for (const auto& r : rep.results)
    if (!r.passed) out.push_back(r.id + " (" + r.description + "; worst " + fmt(r.worst) + " at " + r.witness + ")");
  if (keep) *keep = std::move(rep);
  return out;
}

bool spatially_constant(const Control& c) {
  for (std::size_t n = 0; n < c.time_nodes(); ++n)
    if (c.chi1[n].max() != c.chi1[n].min() || c.chi2[n].max() != c.chi2[n].min() ||
        c.chi1[n].v[0] != c.chi1[0].v[0] || c.chi2[n].v[0] != c.chi2[0].v[0])
      return false;
  return true;
}

std::vector<Control> gradient_directions(const RunConfig& cfg, const ModelSpec& spec, std::size_t nodes) {
  const std::string& spec_dir = cfg.get("check.direction");
  std::vector<Control> out;
  if (spec_dir == "random") {
    const int count = cfg.integer("check.directions");
    if (count < 1) throw ConfigError("check.directions must be positive");
    for (int d = 0; d < count; ++d)
      out.push_back(random_smooth_direction(spec.grid, nodes, cfg.seed() + static_cast<std::uint64_t>(d)));
  } else {
    const ScalarField f = eval_field_expression(spec_dir, spec.grid, cfg.base_dir());
    out.push_back(control_from_fields(f, f, nodes));
  }
  const double tau = spec.t_final / static_cast<double>(nodes - 1);
  for (const Control& h : out)
    if (!(norm_l2(h, tau) > 0.0)) throw ConfigError("check.direction: degenerate direction h = 0");
  return out;
}

}  // namespace

RunConfig resolve_config(const Options& opt) {
  RunConfig cfg = opt.config_path.empty() ? RunConfig::defaults() : RunConfig::load(opt.config_path);
  if (!opt.out_dir.empty()) cfg.set("output.dir", opt.out_dir);
  if (opt.refine != 0) {
    auto scale = [&](const std::string& key) {
      long v = cfg.integer(key);
      if (opt.refine > 0) {
        v <<= opt.refine;
      } else {
        const long d = 1L << (-opt.refine);
        if (v % d != 0) throw ConfigError("--refine " + std::to_string(opt.refine) + ": " + key + " not divisible");
        v /= d;
      }
      cfg.set(key, std::to_string(v));
    };
    scale("grid.nx");
    scale("grid.ny");
    scale("time.steps");
  }
  return cfg;
}

int cmd_simulate(const RunConfig& cfg, const Options& opt, std::ostream& log) {
  ModelSpec spec = build_model(cfg);
  const int steps = build_steps(cfg);
  const Control control = build_initial_control(cfg, spec);
  const std::string format = snapshot_format(cfg);
  const int stride = snapshot_stride(cfg);

  std::unique_ptr<HomogeneousOracle> oracle;
  if (opt.oracle) {
    double iota = 0.0;
    HomogeneousOracle::State y0;
    try {
      y0 = homogeneous_initial_state(spec, &iota);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!spatially_constant(control)) throw ConfigError("ODE oracle: control must be constant in space and time");
    oracle = std::make_unique<HomogeneousOracle>(spec, y0, iota, control.chi1[0].v[0], control.chi2[0].v[0]);
    // boundary lactate follows the homogeneous solution, so the Robin flux vanishes
    spec.sigma_gamma = ScalarField(spec.grid, 1.0);
    const HomogeneousOracle* o = oracle.get();
    spec.sigma_gamma_profile = [o](double t) { return o->at(t)[1]; };
  }

  const auto failed = failed_hypotheses(cfg, spec, nullptr);
  if (!failed.empty()) {
    for (const auto& f : failed) log << "hypothesis failed: " << f << "\n";
    return kPredicateFail;
  }

  SolveDiagnostics diag;
  const StateTrajectory traj = solve_state(control, spec, steps, &diag);

  const fs::path dir = output_dir(cfg);
  Manifest m;
  add_run_keys(m, "simulate", cfg, spec, steps);
  m.add("format", format);
  for (std::size_t n : snapshot_nodes(traj.times.size(), stride)) {
    const double t = traj.times[n];
    std::vector<std::string> files;
    auto put = [&](const std::string& name, const ScalarField& f) {
      for (auto& file : write_field(dir, name + "_" + node_tag(n), f, t, format)) files.push_back(file);
    };
    put("phi", traj.phi[n]);
    put("sigma", traj.sigma[n]);
    put("z", traj.z[n]);
    put("u1", ScalarField(spec.grid, traj.u[n].u1));
    put("u2", ScalarField(spec.grid, traj.u[n].u2));
    std::string joined;
    for (const auto& f : files) joined += (joined.empty() ? "" : ",") + f;
    m.add("snapshot." + node_tag(n), joined);
  }

  std::string report = diag.report();
  bool ok = diag.ok();
  if (oracle) {
    double err = 0.0;
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
      const auto y = oracle->at(traj.times[n]);
      err = std::max({err, (traj.phi[n].v.array() - y[0]).abs().maxCoeff(),
                      (traj.sigma[n].v.array() - y[1]).abs().maxCoeff(),
                      (traj.z[n].v.array() - y[2]).abs().maxCoeff()});
    }
    const double bound = kOracleFactor * traj.tau * oracle->error_constant();
    const bool within = err <= bound;
    ok = ok && within;
    report += "oracle_sup_error = " + fmt(err) + "\n" + "oracle_error_constant = " +
              fmt(oracle->error_constant()) + "\n" + "oracle_bound = " + fmt(bound) + "\n" +
              "oracle_within_bound = " + (within ? "yes" : "no") + "\n";
  }
  report += std::string("result = ") + (ok ? "pass" : "fail") + "\n";
  m.add("result", ok ? "pass" : "fail");
  write_text(dir / "report.txt", report);
  m.write(dir / "manifest.txt");
  log << report;
  return ok ? kPass : kPredicateFail;
}

int cmd_gradient_check(const RunConfig& cfg, const Options& opt, std::ostream& log) {
  const ModelSpec spec = build_model(cfg);
  const int steps = build_steps(cfg);
  const CostSpec cost = build_cost(cfg, spec);
  const Control control = build_initial_control(cfg, spec);
  const auto dirs = gradient_directions(cfg, spec, control.time_nodes());
  const auto eps_ladder = cfg.numbers("check.taylor_eps");
  const double fd_eps = cfg.number("check.fd_eps");
  if (eps_ladder.size() < 2) throw ConfigError("check.taylor_eps needs at least two values");
  if (!(fd_eps > 0.0)) throw ConfigError("check.fd_eps must be positive");
  // first-order consistency: each coarsening may double the error
  const double tol = kGradientTol * std::ldexp(1.0, std::max(0, -opt.refine));

  // Taylor test and finite differences first, so that at most one set of
  // full-history trajectories is alive at a time on refined grids
  const ReducedProblem problem(spec, cost, steps);
  const TaylorResult taylor = taylor_test(control, dirs.front(), eps_ladder, spec, steps);
  std::vector<double> fd;
  for (const auto& h : dirs) fd.push_back(fd_directional(problem, control, h, fd_eps));

  const StateTrajectory traj = solve_state(control, spec, steps);
  const auto coeffs = assemble_coefficients(traj, control, spec);
  const auto adj = solve_adjoint(traj, coeffs, cost, spec);
  const Control gradient = reduced_gradient(traj, adj, control, cost, spec);

  const fs::path dir = output_dir(cfg);
  std::ostringstream tcsv, gcsv;
  tcsv << "eps,remainder,first_order\n";
  log << "taylor test (direction 0)\n";
  log << std::setw(12) << "eps" << std::setw(16) << "remainder" << std::setw(16) << "first_order" << "\n";
  for (std::size_t i = 0; i < taylor.epsilons.size(); ++i) {
    tcsv << fmt(taylor.epsilons[i]) << "," << fmt(taylor.remainder[i]) << "," << fmt(taylor.first_order[i]) << "\n";
    log << std::setw(12) << taylor.epsilons[i] << std::setw(16) << taylor.remainder[i] << std::setw(16)
        << taylor.first_order[i] << "\n";
  }
  log << "slope = " << taylor.slope << " (first order " << taylor.first_order_slope << ", need >= "
      << kTaylorSlopeMin << ")\n";

  gcsv << "direction,adjoint,fd,rel_error,duality_residual\n";
  double worst = 0.0;
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const double a = inner(gradient, dirs[d], problem.tau());
    const double f = fd[d];
    const double rel = std::abs(a - f) / (std::abs(f) + 1e-30);
    const auto lin = solve_linearized(coeffs, dirs[d], spec);
    const double dual = duality_residual(lin, adj, coeffs, traj, cost, spec, dirs[d]);
    worst = std::max(worst, rel);
    gcsv << d << "," << fmt(a) << "," << fmt(f) << "," << fmt(rel) << "," << fmt(dual) << "\n";
    log << "direction " << d << ": adjoint " << fmt(a) << " fd " << fmt(f) << " rel " << rel << " duality "
        << dual << "\n";
  }
  const bool ok = taylor.slope >= kTaylorSlopeMin && worst < tol;
  log << "gradient tolerance = " << tol << ", worst = " << worst << "\n";
  log << "result = " << (ok ? "pass" : "fail") << "\n";
  write_text(dir / "taylor.csv", tcsv.str());
  write_text(dir / "gradient_check.csv", gcsv.str());

  Manifest m;
  add_run_keys(m, "gradient-check", cfg, spec, steps);
  m.add("taylor_slope", taylor.slope);
  m.add("gradient_tolerance", tol);
  m.add("gradient_worst", worst);
  m.add("result", ok ? "pass" : "fail");
  m.write(dir / "manifest.txt");
  return ok ? kPass : kPredicateFail;
}

int cmd_optimize(const RunConfig& cfg, const Options&, std::ostream& log) {
  const ModelSpec spec = build_model(cfg);
  const int steps = build_steps(cfg);
  const AdmissibleBox box = build_box(cfg, spec);
  const OptimizerOptions options = build_optimizer_options(cfg);
  const int probes = cfg.integer("optimizer.vi_probes");
  if (probes < 0) throw ConfigError("optimizer.vi_probes must be nonnegative");
  const std::string format = snapshot_format(cfg);
  const int stride = snapshot_stride(cfg);
  const CostSpec cost = build_cost(cfg, spec);
  const Control initial = build_initial_control(cfg, spec);

  const ReducedProblem problem(spec, cost, steps);
  const OptimizationResult res = optimize(initial, problem, box, options);

  const auto ev = problem.evaluate(res.control, false);
  const auto coeffs = assemble_coefficients(ev.state, res.control, spec);
  const auto adj = solve_adjoint(ev.state, coeffs, cost, spec);
  const ViReport vi = vi_residual(res.control, box, ev.state, adj, cost, spec, probes, cfg.seed());

  const fs::path dir = output_dir(cfg);
  write_history_csv((dir / "history.csv").string(), res.history);
  Manifest m;
  add_run_keys(m, "optimize", cfg, spec, steps);
  for (std::size_t n : snapshot_nodes(res.control.time_nodes(), stride)) {
    std::string joined;
    for (const auto& f : write_field(dir, "chi1_" + node_tag(n), res.control.chi1[n], ev.state.times[n], format))
      joined += (joined.empty() ? "" : ",") + f;
    for (const auto& f : write_field(dir, "chi2_" + node_tag(n), res.control.chi2[n], ev.state.times[n], format))
      joined += "," + f;
    m.add("control." + node_tag(n), joined);
  }

  bool monotone = true;
  for (std::size_t k = 1; k < res.history.size(); ++k)
    monotone = monotone && res.history[k].cost <= res.history[k - 1].cost;
  const double j0 = res.history.front().cost, j1 = res.history.back().cost;
  const bool vi_ok = vi.star >= -kViTol * vi.scale;
  const bool ok = monotone && j1 <= j0 && vi_ok;

  std::ostringstream rep;
  rep << "iterations = " << res.history.size() - 1 << "\n"
      << "stop_reason = " << res.stop_reason << "\n"
      << "converged = " << (res.converged ? "yes" : "no") << "\n"
      << "J_initial = " << fmt(j0) << "\n"
      << "J_final = " << fmt(j1) << "\n"
      << "monotone = " << (monotone ? "yes" : "no") << "\n"
      << "vi_probes = " << vi.probes << "\n"
      << "vi_printed = " << fmt(vi.printed) << "\n"
      << "vi_star = " << fmt(vi.star) << "\n"
      << "vi_scale = " << fmt(vi.scale) << "\n"
      << "vi_threshold = " << fmt(-kViTol * vi.scale) << "\n"
      << "vi_ok = " << (vi_ok ? "yes" : "no") << "\n"
      << "result = " << (ok ? "pass" : "fail") << "\n";
  write_text(dir / "vi_report.txt", rep.str());
  m.add("J_initial", j0);
  m.add("J_final", j1);
  m.add("result", ok ? "pass" : "fail");
  m.write(dir / "manifest.txt");
  log << rep.str();
  return ok ? kPass : kPredicateFail;
}

int cmd_separation(const RunConfig& cfg, const Options&, std::ostream& log) {
  const ModelSpec spec = build_model(cfg);
  const int steps = build_steps(cfg);
  SeparationBounds sb;
  try {
    sb = separation_bounds(spec);
  } catch (const DomainError& e) {
    log << e.what() << "\n";
    return kPredicateFail;
  }
  const double sign = separation_sign_violation(spec.potential, sb, kSeparationSamples);
  log << std::setprecision(10) << "b = " << sb.b << "\n"
      << "root_low = " << sb.root_low << "\n"
      << "root_high = " << sb.root_high << "\n"
      << "r_low = " << sb.r_low << "\n"
      << "r_high = " << sb.r_high << "\n"
      << "sign_violation = " << sign << "\n";

  const Control control = build_initial_control(cfg, spec);
  const StateTrajectory traj = solve_state(control, spec, steps);
  double excursion = 0.0;
  for (const auto& z : traj.z)
    excursion = std::max({excursion, sb.r_low - z.min(), z.max() - sb.r_high});
  const bool ok = sign <= 0.0 && excursion <= kSeparationSlack;
  log << "z_excursion = " << excursion << " (slack " << kSeparationSlack << ")\n"
      << "result = " << (ok ? "pass" : "fail") << "\n";
  return ok ? kPass : kPredicateFail;
}

int cmd_hypothesis_check(const RunConfig& cfg, const Options&, std::ostream& log) {
  const ModelSpec spec = build_model(cfg);
  const CostSpec cost = build_cost(cfg, spec);
  const CostHypothesisInput in = build_cost_hypothesis_input(cost);
  HypothesisReport rep;
  const auto failed = failed_hypotheses(cfg, spec, &in, &rep);
  const fs::path dir = output_dir(cfg);
  std::ostringstream csv;
  csv << "id,passed,worst,witness\n";
  for (const auto& r : rep.results) csv << r.id << "," << (r.passed ? 1 : 0) << "," << fmt(r.worst) << ",\"" << r.witness << "\"\n";
  write_text(dir / "hypotheses.csv", csv.str());
  log << rep.summary();
  log << "result = " << (failed.empty() ? "pass" : "fail") << "\n";
  return failed.empty() ? kPass : kPredicateFail;
}

int run(const std::string& command, const Options& opt, std::ostream& log, std::ostream& err) {
  try {
    const RunConfig cfg = resolve_config(opt);
    if (command == "simulate") return cmd_simulate(cfg, opt, log);
    if (command == "gradient-check") return cmd_gradient_check(cfg, opt, log);
    if (command == "optimize") return cmd_optimize(cfg, opt, log);
    if (command == "separation") return cmd_separation(cfg, opt, log);
    if (command == "hypothesis-check") return cmd_hypothesis_check(cfg, opt, log);
    err << "unknown command: " << command << "\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverError;
  }
}

}  // namespace tumorctl::cli
