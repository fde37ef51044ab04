#include "tumorctl/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

#include "tumorctl/errors.hpp"

namespace tumorctl {

namespace {

bool same_shape(const std::vector<ScalarField>& f, const Grid& g, std::size_t nodes) {
  if (f.size() != nodes) return false;
  return std::all_of(f.begin(), f.end(), [&](const ScalarField& s) {
    return s.grid == g && s.v.size() == static_cast<Eigen::Index>(g.nodes());
  });
}

bool finite(const std::vector<ScalarField>& f) {
  return std::all_of(f.begin(), f.end(), [](const ScalarField& s) { return s.all_finite(); });
}

double sq_distance(const ScalarField& a, const ScalarField& b) {
  const ScalarField d(a.grid, a.v - b.v);
  return inner(d, d);
}

}  // namespace

CostSpec CostSpec::zero(const Grid& g, std::size_t time_nodes) {
  CostSpec c;
  c.phi_q.assign(time_nodes, ScalarField(g));
  c.sigma_q.assign(time_nodes, ScalarField(g));
  c.z_q.assign(time_nodes, ScalarField(g));
  c.phi_omega = ScalarField(g);
  c.sigma_omega = ScalarField(g);
  return c;
}

void CostSpec::validate(const Grid& g, std::size_t time_nodes) const {
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (!(alpha[i] >= 0.0) || !std::isfinite(alpha[i]))
      throw ConfigError("cost: alpha" + std::to_string(i + 1) + " must be a finite nonnegative number");
  if (!same_shape(phi_q, g, time_nodes) || !same_shape(sigma_q, g, time_nodes) ||
      !same_shape(z_q, g, time_nodes) || phi_omega.grid != g || sigma_omega.grid != g)
    throw ConfigError("cost: target fields do not match the grid and time nodes");
  if (!finite(phi_q) || !finite(sigma_q) || !finite(z_q) || !phi_omega.all_finite() ||
      !sigma_omega.all_finite())
    throw ConfigError("cost: target fields must be finite");
}

CostTerms eval_cost_terms(const StateTrajectory& traj, const Control& control, const CostSpec& cost,
                          const ModelSpec& spec) {
  const std::size_t nodes = traj.times.size();
  cost.validate(traj.grid(), nodes);
  if (control.time_nodes() != nodes) throw std::invalid_argument("eval_cost: control time grid differs");
  const auto w = trapezoid_time_weights(nodes, traj.tau);
  const std::size_t last = nodes - 1;

  CostTerms t;
  ScalarField gamma, gamma_phi;
  for (std::size_t n = 0; n < nodes; ++n) {
    t.term[0] += w[n] * sq_distance(traj.phi[n], cost.phi_q[n]);
    t.term[3] += w[n] * sq_distance(traj.sigma[n], cost.sigma_q[n]);
    t.term[6] += w[n] * sq_distance(traj.z[n], cost.z_q[n]);
    if (cost.a(6) != 0.0) {
      eval_gamma(traj.phi[n], spec, gamma, gamma_phi);
      const SymTensorField& e = traj.eps_u[n];
      const Eigen::VectorXd ee = e.e11.cwiseAbs2() + e.e22.cwiseAbs2() + 2.0 * e.e12.cwiseAbs2();
      t.term[5] += w[n] * integral(ScalarField(traj.grid(), gamma.v.cwiseProduct(ee)));
    }
    t.term[8] += w[n] * (inner(control.chi1[n], control.chi1[n]) + inner(control.chi2[n], control.chi2[n]));
  }
  t.term[1] = sq_distance(traj.phi[last], cost.phi_omega);
  t.term[2] = integral(traj.phi[last]);
  t.term[4] = sq_distance(traj.sigma[last], cost.sigma_omega);
  t.term[7] = integral(traj.z[last]);

  for (int i = 1; i <= 9; ++i) {
    const bool linear = i == 3 || i == 8;
    double& v = t.term[static_cast<std::size_t>(i - 1)];
    v *= linear ? cost.a(i) : 0.5 * cost.a(i);
    t.total += v;
  }
  return t;
}

double eval_cost(const StateTrajectory& traj, const Control& control, const CostSpec& cost,
                 const ModelSpec& spec) {
  return eval_cost_terms(traj, control, cost, spec).total;
}

Control reduced_gradient(const StateTrajectory& traj, const AdjointTrajectory& adj, const Control& control,
                         const CostSpec& cost, const ModelSpec& spec) {
  const std::size_t nodes = traj.times.size();
  if (adj.q.size() != nodes || control.time_nodes() != nodes)
    throw std::invalid_argument("reduced_gradient: time grids differ");
  Control g = control;
  const double a9 = cost.a(9);
  for (std::size_t n = 0; n < nodes; ++n) {
    for (Eigen::Index k = 0; k < g.chi1[n].v.size(); ++k) {
      const double phi = traj.phi[n].v[k];
      const double s = spec.fn->source(phi, traj.z[n].v[k]).v;
      g.chi1[n].v[k] = -phi * (1.0 - phi / spec.n_cap) * adj.q[n].v[k] + a9 * control.chi1[n].v[k];
      g.chi2[n].v[k] = s * adj.r[n].v[k] + a9 * control.chi2[n].v[k];
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

ReducedProblem::ReducedProblem(ModelSpec spec, CostSpec cost, int steps)
    : spec_(std::move(spec)), cost_(std::move(cost)), steps_(steps) {
  if (steps_ < 1) throw std::invalid_argument("ReducedProblem: need at least one time step");
  cost_.validate(spec_.grid, time_nodes());
}

double ReducedProblem::cost(const Control& control) const { return evaluate(control, false).cost; }

ReducedProblem::Evaluation ReducedProblem::evaluate(const Control& control, bool with_gradient) const {
  Evaluation e;
  e.state = solve_state(control, spec_, steps_);
  e.cost = eval_cost(e.state, control, cost_, spec_);
  if (with_gradient) {
    const LinearizedCoefficients coeffs = assemble_coefficients(e.state, control, spec_);
    const AdjointTrajectory adj = solve_adjoint(e.state, coeffs, cost_, spec_);
    e.gradient = reduced_gradient(e.state, adj, control, cost_, spec_);
  }
  return e;
}

double fd_directional(const ReducedProblem& problem, const Control& control, const Control& h, double eps) {
  const Control plus = control + eps * h;
  const Control minus = control - eps * h;
  auto upper = std::async(std::launch::async, [&] { return problem.cost(plus); });
  const double lower = problem.cost(minus);
  return (upper.get() - lower) / (2.0 * eps);
}

// ---------------------------------------------------------------------------

AdmissibleBox AdmissibleBox::constant(const Grid& g, std::size_t time_nodes, double chi1_low,
                                      double chi1_high, double chi2_low, double chi2_high, double c_ad) {
  AdmissibleBox b;
  b.chi1_low.assign(time_nodes, ScalarField(g, chi1_low));
  b.chi1_high.assign(time_nodes, ScalarField(g, chi1_high));
  b.chi2_low.assign(time_nodes, ScalarField(g, chi2_low));
  b.chi2_high.assign(time_nodes, ScalarField(g, chi2_high));
  b.c_ad = c_ad;
  return b;
}

void AdmissibleBox::validate(const Grid& g, std::size_t time_nodes) const {
  if (!same_shape(chi1_low, g, time_nodes) || !same_shape(chi1_high, g, time_nodes) ||
      !same_shape(chi2_low, g, time_nodes) || !same_shape(chi2_high, g, time_nodes))
    throw ConfigError("admissible: bound fields do not match the grid and time nodes");
  if (!(c_ad > 0.0)) throw ConfigError("admissible: C_ad must be positive");
  for (std::size_t n = 0; n < time_nodes; ++n) {
    if ((chi1_low[n].v.array() > chi1_high[n].v.array()).any())
      throw ConfigError("admissible: chi1 lower bound exceeds upper bound at time node " + std::to_string(n));
    if ((chi2_low[n].v.array() > chi2_high[n].v.array()).any())
      throw ConfigError("admissible: chi2 lower bound exceeds upper bound at time node " + std::to_string(n));
  }
}

bool AdmissibleBox::contains(const Control& c, double tau, double tol) const {
  for (std::size_t n = 0; n < c.time_nodes(); ++n) {
    if ((c.chi1[n].v.array() < chi1_low[n].v.array()).any() ||
        (c.chi1[n].v.array() > chi1_high[n].v.array()).any() ||
        (c.chi2[n].v.array() < chi2_low[n].v.array()).any() ||
        (c.chi2[n].v.array() > chi2_high[n].v.array()).any())
      return false;
  }
  return chi1_v_norm(c, tau) <= c_ad + tol;
}

double chi1_v_norm(const Control& c, double tau) {
  const auto w = trapezoid_time_weights(c.time_nodes(), tau);
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const double h = norm_h1(c.chi1[n]);
    s += w[n] * h * h;
  }
  return std::sqrt(s);
}

Projection project_admissible(const Control& c, const AdmissibleBox& box, double tau) {
  box.validate(c.grid(), c.time_nodes());
  Projection p{c, false};
  auto clamp_all = [&] {
    for (std::size_t n = 0; n < c.time_nodes(); ++n) {
      p.control.chi1[n].v = p.control.chi1[n].v.cwiseMax(box.chi1_low[n].v).cwiseMin(box.chi1_high[n].v);
      p.control.chi2[n].v = p.control.chi2[n].v.cwiseMax(box.chi2_low[n].v).cwiseMin(box.chi2_high[n].v);
    }
  };
  clamp_all();
  const double norm = chi1_v_norm(p.control, tau);
  if (norm > box.c_ad) {
    p.ball_active = true;
    for (auto& f : p.control.chi1) f.v *= box.c_ad / norm;
    clamp_all();
  }
  return p;
}

// ---------------------------------------------------------------------------

OptimizationResult optimize(const Control& initial, const ReducedProblem& problem, const AdmissibleBox& box,
                            const OptimizerOptions& options) {
  const double tau = problem.tau();
  OptimizationResult out;
  Projection start = project_admissible(initial, box, tau);
  out.control = std::move(start.control);
  ReducedProblem::Evaluation current = problem.evaluate(out.control, true);

  auto stationarity = [&](const Control& chi, const Control& g) {
    return norm_l2(chi - project_admissible(chi - g, box, tau).control, tau);
  };
  double stat = stationarity(out.control, current.gradient);
  const double stat0 = stat;
  out.history.push_back({0, current.cost, stat, 0.0, start.ball_active});

  double lambda = options.lambda0;
  for (int it = 1;; ++it) {
    if (stat <= options.tol * stat0 || stat == 0.0) {
      out.converged = true;
      out.stop_reason = "stationarity below tolerance";
      break;
    }
    if (it > options.max_iterations) {
      out.stop_reason = "iteration limit";
      break;
    }
    bool accepted = false;
    Projection trial;
    ReducedProblem::Evaluation next;
    // first trial lambda0, then twice the last accepted step
    double step = it == 1 ? options.lambda0 : std::min(options.lambda_max, 2.0 * lambda);
    for (int b = 0; b <= options.max_backtracks; ++b, step *= options.shrink) {
      trial = project_admissible(out.control - step * current.gradient, box, tau);
      const double decrease = inner(current.gradient, trial.control - out.control, tau);
      next = problem.evaluate(trial.control, false);
      if (next.cost <= current.cost + options.armijo * decrease && next.cost <= current.cost) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.stop_reason = "line search found no decrease";
      break;
    }
    lambda = step;
    out.control = std::move(trial.control);
    current = problem.evaluate(out.control, true);
    stat = stationarity(out.control, current.gradient);
    out.history.push_back({it, current.cost, stat, step, trial.ball_active});
    if (step < options.min_step) {
      out.stop_reason = "step below minimum";
      break;
    }
  }
  return out;
}

void write_history_csv(const std::string& path, const std::vector<IterationRecord>& history) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fprintf(f, "iteration,J,stationarity,step,ball_active\n");
  for (const auto& r : history)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%d\n", r.iteration, r.cost, r.stationarity, r.step,
                 r.ball_active ? 1 : 0);
  std::fclose(f);
}

ViReport vi_residual(const Control& candidate, const AdmissibleBox& box, const StateTrajectory& traj,
                     const AdjointTrajectory& adj, const CostSpec& cost, const ModelSpec& spec,
                     int random_probes, std::uint64_t seed) {
  const double tau = traj.tau;
  const std::size_t nodes = candidate.time_nodes();
  box.validate(candidate.grid(), nodes);
  const Control g_star = reduced_gradient(traj, adj, candidate, cost, spec);
  const double a9 = cost.a(9);

  std::vector<Control> probes{candidate};
  auto corner = [&](bool high1, bool high2) {
    Control c = candidate;
    for (std::size_t n = 0; n < nodes; ++n) {
      c.chi1[n] = high1 ? box.chi1_high[n] : box.chi1_low[n];
      c.chi2[n] = high2 ? box.chi2_high[n] : box.chi2_low[n];
    }
    return project_admissible(c, box, tau).control;
  };
  for (bool h1 : {false, true})
    for (bool h2 : {false, true}) probes.push_back(corner(h1, h2));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int p = 0; p < random_probes; ++p) {
    Control c = candidate;
    for (std::size_t n = 0; n < nodes; ++n)
      for (Eigen::Index k = 0; k < c.chi1[n].v.size(); ++k) {
        c.chi1[n].v[k] = box.chi1_low[n].v[k] + unit(rng) * (box.chi1_high[n].v[k] - box.chi1_low[n].v[k]);
        c.chi2[n].v[k] = box.chi2_low[n].v[k] + unit(rng) * (box.chi2_high[n].v[k] - box.chi2_low[n].v[k]);
      }
    probes.push_back(project_admissible(c, box, tau).control);
  }

  ViReport rep;
  rep.probes = static_cast<int>(probes.size());
  rep.printed = rep.star = std::numeric_limits<double>::infinity();
  double max_dist = 0.0;
  for (const Control& chi : probes) {
    const Control d = chi - candidate;
    const double star = inner(g_star, d, tau);
    const double dist = norm_l2(d, tau);
    rep.star = std::min(rep.star, star);
    rep.printed = std::min(rep.printed, star + a9 * dist * dist);
    max_dist = std::max(max_dist, dist);
  }
  rep.scale = norm_l2(g_star, tau) * max_dist;
  return rep;
}

}  // namespace tumorctl
