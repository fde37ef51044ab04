#include "tumorctl/state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tumorctl/errors.hpp"

namespace tumorctl {

namespace {

void require_nodes(const Control& c) {
  if (c.chi1.empty() || c.chi1.size() != c.chi2.size())
    throw std::invalid_argument("control: chi1 and chi2 need the same nonzero number of time nodes");
}

// Clamps in place and returns the largest excursion outside [lo, hi].
double clamp_field(Eigen::VectorXd& v, double lo, double hi) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    worst = std::max({worst, lo - v[k], v[k] - hi});
    v[k] = std::clamp(v[k], lo, hi);
  }
  return worst;
}

double excursion(const Eigen::VectorXd& v, double lo, double hi) {
  return std::max({0.0, lo - v.minCoeff(), v.maxCoeff() - hi});
}

}  // namespace

Control Control::constant(const Grid& g, std::size_t time_nodes, double c1, double c2) {
  Control c;
  c.chi1.assign(time_nodes, ScalarField(g, c1));
  c.chi2.assign(time_nodes, ScalarField(g, c2));
  return c;
}

Control Control::zeros_like(const Control& other) {
  require_nodes(other);
  return constant(other.grid(), other.time_nodes(), 0.0, 0.0);
}

bool Control::all_finite() const {
  for (std::size_t n = 0; n < chi1.size(); ++n)
    if (!chi1[n].all_finite() || !chi2[n].all_finite()) return false;
  return true;
}

double Control::max_chi2() const {
  double m = 0.0;
  for (const auto& f : chi2) m = std::max(m, f.max());
  return m;
}

Control& Control::operator+=(const Control& o) {
  if (o.time_nodes() != time_nodes()) throw std::invalid_argument("control: time grids differ");
  for (std::size_t n = 0; n < chi1.size(); ++n) {
    chi1[n].v += o.chi1[n].v;
    chi2[n].v += o.chi2[n].v;
  }
  return *this;
}

Control& Control::operator-=(const Control& o) {
  if (o.time_nodes() != time_nodes()) throw std::invalid_argument("control: time grids differ");
  for (std::size_t n = 0; n < chi1.size(); ++n) {
    chi1[n].v -= o.chi1[n].v;
    chi2[n].v -= o.chi2[n].v;
  }
  return *this;
}

Control& Control::operator*=(double s) {
  for (std::size_t n = 0; n < chi1.size(); ++n) {
    chi1[n].v *= s;
    chi2[n].v *= s;
  }
  return *this;
}

double inner(const Control& a, const Control& b, double tau) {
  require_nodes(a);
  if (a.time_nodes() != b.time_nodes()) throw std::invalid_argument("control: time grids differ");
  const auto w = trapezoid_time_weights(a.time_nodes(), tau);
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n)
    s += w[n] * (inner(a.chi1[n], b.chi1[n]) + inner(a.chi2[n], b.chi2[n]));
  return s;
}

double norm_l2(const Control& a, double tau) { return std::sqrt(std::max(0.0, inner(a, a, tau))); }

// ---------------------------------------------------------------------------

std::string SolveDiagnostics::report() const {
  std::ostringstream os;
  os.precision(6);
  os << "phi_clamp_max = " << phi_clamp_max << "\n"
     << "sigma_clamp_max = " << sigma_clamp_max << "\n"
     << "sigma_cap = " << sigma_cap << " (heuristic)\n"
     << "phi_post_violation = " << phi_post_violation << "\n"
     << "sigma_post_violation = " << sigma_post_violation << "\n"
     << "z_range = [" << z_min << ", " << z_max << "]\n";
  if (separation)
    os << "separation = [" << separation->r_low << ", " << separation->r_high << "]\n"
       << "separation_violation = " << separation_violation << "\n";
  else
    os << "separation = unavailable (" << separation_error << ")\n";
  os << "u_boundary_max = " << u_boundary_max << "\n"
     << "cg_iterations_total = " << cg_iterations_total << "\n"
     << "cg_iterations_max = " << cg_iterations_max << "\n"
     << "newton_iterations_total = " << newton_iterations_total << "\n"
     << "newton_iterations_max = " << newton_iterations_max << "\n"
     << "violations = " << violations.size() << "\n";
  for (const auto& v : violations) os << "violation: " << v << "\n";
  return os.str();
}

ScalarStep step_phi(const ScalarField& phi, const ScalarField& sigma, const ScalarField& z,
                    const ScalarField& chi1, double tau, const ModelSpec& spec) {
  ScalarField rhs = phi;
  for (Eigen::Index k = 0; k < rhs.v.size(); ++k)
    rhs.v[k] += tau * eval_U(phi.v[k], sigma.v[k], z.v[k], chi1.v[k], spec);
  ScalarStep out{phi, 0.0, 0};
  out.iterations = solve_implicit_diffusion(Boundary::neumann, tau, {}, rhs, out.value, "phi").iterations;
  out.clamp = clamp_field(out.value.v, 0.0, spec.n_cap);
  return out;
}

ScalarStep step_sigma(const ScalarField& sigma, const ScalarField& phi, const ScalarField& z,
                      const ScalarField& chi2, const ScalarField& boundary_datum, double tau,
                      double cap, const ModelSpec& spec) {
  ScalarField rhs = sigma;
  for (Eigen::Index k = 0; k < rhs.v.size(); ++k) {
    const double s = spec.fn->source(phi.v[k], z.v[k]).v;
    rhs.v[k] += tau * (chi2.v[k] * s - eval_K(phi.v[k], sigma.v[k], z.v[k], spec));
  }
  rhs.v += tau * RobinLaplacian::source(boundary_datum).v;
  ScalarStep out{sigma, 0.0, 0};
  out.iterations = solve_implicit_diffusion(Boundary::robin, tau, {}, rhs, out.value, "sigma").iterations;
  out.clamp = clamp_field(out.value.v, 0.0, cap);
  return out;
}

void viscous_lame(const ScalarField& phi, const ScalarField& z, double tau, const ModelSpec& spec,
                  Eigen::VectorXd& mu, Eigen::VectorXd& lam) {
  mu.resize(phi.v.size());
  lam.resize(phi.v.size());
  for (Eigen::Index k = 0; k < phi.v.size(); ++k) {
    const Lame b = spec.fn->elasticity(phi.v[k], z.v[k]);
    mu[k] = spec.a_mu / tau + b.mu;
    lam[k] = spec.a_lam / tau + b.lam;
  }
}

ElasticitySolver make_elasticity_solver(const ModelSpec& spec, double tau) {
  const Eigen::VectorXd& w = spec.grid.weights();
  const double area = w.sum();
  const Lame b = spec.fn->elasticity(w.dot(spec.phi0.v) / area, w.dot(spec.z0.v) / area);
  return ElasticitySolver(spec.grid, spec.a_mu / tau + b.mu, spec.a_lam / tau + b.lam);
}

DisplacementStep step_u(const VectorField& u, const ScalarField& phi_new, const ScalarField& z,
                        const VectorField& force, double tau, const ModelSpec& spec,
                        const ElasticitySolver& solver) {
  const Grid& g = u.grid;
  const Eigen::VectorXd a_mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.nodes()), spec.a_mu / tau);
  const Eigen::VectorXd a_lam = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.nodes()), spec.a_lam / tau);
  VectorField rhs = weighted_load(force);
  const VectorField memory = stress_transpose(isotropic_stress(a_mu, a_lam, sym_grad(u)));
  rhs.u1 += memory.u1;
  rhs.u2 += memory.u2;

  Eigen::VectorXd mu, lam;
  viscous_lame(phi_new, z, tau, spec, mu, lam);
  DisplacementStep out{u, 0};
  out.iterations = solver.solve(mu, lam, rhs, out.value).iterations;
  return out;
}

DamageStep step_z(const ScalarField& z, const ScalarField& phi_new, const SymTensorField& eps_new,
                  const ScalarField& iota, double tau, const ModelSpec& spec) {
  constexpr double kTol = 1e-10;
  constexpr int kMaxNewton = 50;
  const Potential& pot = spec.potential;

  ScalarField rhs = z;
  for (Eigen::Index k = 0; k < rhs.v.size(); ++k)
    rhs.v[k] += tau * (iota.v[k] - spec.fn->psi(phi_new.v[k], at(eps_new, k)).v);

  auto residual = [&](const ScalarField& x) {
    ScalarField r(x.grid);
    r.v = x.v - tau * laplacian_neumann(x).v - rhs.v;
    for (Eigen::Index k = 0; k < x.v.size(); ++k) r.v[k] += tau * (pot.beta(x.v[k]) + pot.pi(x.v[k]));
    return r;
  };

  DamageStep out{z, 0, 0, {}};
  if (z.min() <= 0.0 || z.max() >= 1.0) throw DomainError("step_z: damage left (0, 1) before the step");
  ScalarField res = residual(out.value);
  double rnorm = res.v.cwiseAbs().maxCoeff();
  out.residual_history.push_back(rnorm);
  Eigen::VectorXd c(res.v.size());
  while (rnorm > kTol) {
    if (out.newton_iterations == kMaxNewton)
      throw SolverError("step_z: Newton did not converge in 50 iterations", out.residual_history);
    ++out.newton_iterations;
    for (Eigen::Index k = 0; k < c.size(); ++k)
      c[k] = -(pot.beta_prime(out.value.v[k]) + pot.pi_prime(out.value.v[k]));
    ScalarField minus_res = res;
    minus_res.v = -res.v;
    ScalarField delta(res.grid);
    out.cg_iterations += solve_implicit_diffusion(Boundary::neumann, tau, c, minus_res, delta, "z-newton").iterations;

    double lambda = 1.0;
    ScalarField trial = out.value;
    for (int halvings = 0;; ++halvings) {
      trial.v = out.value.v + lambda * delta.v;
      if (trial.min() > 0.0 && trial.max() < 1.0) break;
      if (halvings == 60) throw SolverError("step_z: line search cannot keep damage in (0, 1)", out.residual_history);
      lambda *= 0.5;
    }
    out.value = trial;
    res = residual(out.value);
    rnorm = res.v.cwiseAbs().maxCoeff();
    out.residual_history.push_back(rnorm);
  }
  return out;
}

StateTrajectory solve_state(const Control& control, const ModelSpec& spec, int steps,
                            SolveDiagnostics* diagnostics) {
  if (steps < 1) throw std::invalid_argument("solve_state: need at least one time step");
  require_nodes(control);
  if (control.time_nodes() != static_cast<std::size_t>(steps) + 1)
    throw std::invalid_argument("solve_state: control has " + std::to_string(control.time_nodes()) +
                                " time nodes, expected " + std::to_string(steps + 1));
  require_same_grid(control.grid(), spec.grid);

  const double tau = spec.t_final / steps;
  SolveDiagnostics local;
  SolveDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag = SolveDiagnostics{};
  diag.sigma_cap = spec.sigma_cap(control.max_chi2());
  try {
    diag.separation = separation_bounds(spec);
  } catch (const DomainError& e) {
    diag.separation_error = e.what();
  }

  StateTrajectory tr;
  tr.tau = tau;
  const std::size_t nodes = static_cast<std::size_t>(steps) + 1;
  tr.times.resize(nodes);
  for (std::size_t n = 0; n < nodes; ++n) tr.times[n] = static_cast<double>(n) * tau;
  tr.times.back() = spec.t_final;
  tr.phi.reserve(nodes);
  tr.sigma.reserve(nodes);
  tr.u.reserve(nodes);
  tr.eps_u.reserve(nodes);
  tr.z.reserve(nodes);
  tr.phi.push_back(spec.phi0);
  tr.sigma.push_back(spec.sigma0);
  tr.u.push_back(spec.u0);
  tr.eps_u.push_back(sym_grad(spec.u0));
  tr.z.push_back(spec.z0);

  const ElasticitySolver elastic = make_elasticity_solver(spec, tau);
  auto note_cg = [&](int it) {
    diag.cg_iterations_total += it;
    diag.cg_iterations_max = std::max(diag.cg_iterations_max, it);
  };
  auto note_level = [&](std::size_t n) {
    diag.phi_post_violation = std::max(diag.phi_post_violation, excursion(tr.phi[n].v, 0.0, spec.n_cap));
    diag.sigma_post_violation =
        std::max(diag.sigma_post_violation, excursion(tr.sigma[n].v, 0.0, diag.sigma_cap));
    diag.z_min = std::min(diag.z_min, tr.z[n].min());
    diag.z_max = std::max(diag.z_max, tr.z[n].max());
    diag.u_boundary_max = std::max(diag.u_boundary_max, tr.u[n].max_abs_on_boundary());
  };
  note_level(0);

  for (std::size_t n = 0; n + 1 < nodes; ++n) {
    const ScalarStep phi = step_phi(tr.phi[n], tr.sigma[n], tr.z[n], control.chi1[n], tau, spec);
    const ScalarStep sigma = step_sigma(tr.sigma[n], tr.phi[n], tr.z[n], control.chi2[n],
                                        spec.boundary_datum(tr.times[n + 1]), tau, diag.sigma_cap, spec);
    const DisplacementStep u = step_u(tr.u[n], phi.value, tr.z[n], spec.force, tau, spec, elastic);
    SymTensorField eps = sym_grad(u.value);
    const DamageStep z = step_z(tr.z[n], phi.value, eps, spec.iota, tau, spec);

    diag.phi_clamp_max = std::max(diag.phi_clamp_max, phi.clamp);
    diag.sigma_clamp_max = std::max(diag.sigma_clamp_max, sigma.clamp);
    note_cg(phi.iterations);
    note_cg(sigma.iterations);
    note_cg(u.iterations);
    diag.cg_iterations_total += z.cg_iterations;
    diag.newton_iterations_total += z.newton_iterations;
    diag.newton_iterations_max = std::max(diag.newton_iterations_max, z.newton_iterations);

    tr.phi.push_back(phi.value);
    tr.sigma.push_back(sigma.value);
    tr.u.push_back(u.value);
    tr.eps_u.push_back(std::move(eps));
    tr.z.push_back(z.value);
    note_level(n + 1);
  }

  constexpr double kBoundTol = 1e-9;
  constexpr double kSeparationTol = 1e-12;
  if (diag.phi_post_violation > kBoundTol)
    diag.violations.push_back("phi outside [0, N] by " + std::to_string(diag.phi_post_violation));
  if (diag.sigma_post_violation > kBoundTol)
    diag.violations.push_back("sigma outside [0, M] by " + std::to_string(diag.sigma_post_violation));
  if (diag.separation) {
    diag.separation_violation =
        std::max({0.0, diag.separation->r_low - diag.z_min, diag.z_max - diag.separation->r_high});
    if (diag.separation_violation > kSeparationTol)
      diag.violations.push_back("damage outside separation bounds by " +
                                std::to_string(diag.separation_violation));
  } else {
    diag.violations.push_back("separation bounds unavailable: " + diag.separation_error);
  }
  if (diag.u_boundary_max > 0.0) diag.violations.push_back("displacement nonzero on the boundary");
  return tr;
}

double state_distance(const StateTrajectory& a, const StateTrajectory& b) {
  if (a.steps() != b.steps()) throw std::invalid_argument("state_distance: time grids differ");
  const auto w = trapezoid_time_weights(a.times.size(), a.tau);
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const ScalarField dphi(a.grid(), a.phi[n].v - b.phi[n].v);
    const ScalarField dsig(a.grid(), a.sigma[n].v - b.sigma[n].v);
    const ScalarField dz(a.grid(), a.z[n].v - b.z[n].v);
    VectorField du(a.grid());
    du.u1 = a.u[n].u1 - b.u[n].u1;
    du.u2 = a.u[n].u2 - b.u[n].u2;
    const double h1 = norm_h1(dphi), h2 = norm_h1(dsig), h3 = norm_h1(dz), h4 = norm_h1(du);
    s += w[n] * (h1 * h1 + h2 * h2 + h3 * h3 + h4 * h4);
  }
  return std::sqrt(s);
}

}  // namespace tumorctl
