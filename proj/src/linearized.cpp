#include "tumorctl/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tumorctl {

namespace {

void require_finite(const Eigen::VectorXd& v, const char* name, std::size_t node) {
  if (v.allFinite()) return;
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k]))
      throw std::runtime_error(std::string("coefficient ") + name + " is not finite at time node " +
                               std::to_string(node) + ", grid node " + std::to_string(k));
}

void require_finite(const SymTensorField& t, const char* name, std::size_t node) {
  require_finite(t.e11, name, node);
  require_finite(t.e22, name, node);
  require_finite(t.e12, name, node);
}

// Pointwise sum of the tensor pairs a:x + b:y stored in a tensor field.
SymTensorField combine(const SymTensorField& a, const ScalarField& x, const SymTensorField& b,
                       const ScalarField& y) {
  SymTensorField s(a.grid);
  s.e11 = a.e11.cwiseProduct(x.v) + b.e11.cwiseProduct(y.v);
  s.e22 = a.e22.cwiseProduct(x.v) + b.e22.cwiseProduct(y.v);
  s.e12 = a.e12.cwiseProduct(x.v) + b.e12.cwiseProduct(y.v);
  return s;
}

ScalarField contract(const SymTensorField& a, const SymTensorField& b) {
  return ScalarField(a.grid, a.e11.cwiseProduct(b.e11) + a.e22.cwiseProduct(b.e22) +
                                 2.0 * a.e12.cwiseProduct(b.e12));
}

}  // namespace

LinearizedCoefficients assemble_coefficients(const StateTrajectory& traj, const Control& control,
                                             const ModelSpec& spec) {
  const std::size_t nodes = traj.times.size();
  if (control.time_nodes() != nodes)
    throw std::invalid_argument("assemble_coefficients: control and trajectory time grids differ");
  const Grid& g = traj.grid();
  const Eigen::Index nn = static_cast<Eigen::Index>(g.nodes());
  const Potential& pot = spec.potential;

  LinearizedCoefficients c;
  c.tau = traj.tau;
  for (auto* v : {&c.a1, &c.a2, &c.a3, &c.a4, &c.b1, &c.b2, &c.b3, &c.b4, &c.d1, &c.d3})
    v->assign(nodes, ScalarField(g));
  for (auto* v : {&c.c1, &c.c2, &c.d2}) v->assign(nodes, SymTensorField(g));
  c.mu.assign(nodes, Eigen::VectorXd(nn));
  c.lam.assign(nodes, Eigen::VectorXd(nn));

  for (std::size_t n = 0; n < nodes; ++n) {
    const ScalarField& z_prev = traj.z[n == 0 ? 0 : n - 1];
    for (Eigen::Index k = 0; k < nn; ++k) {
      const double phi = traj.phi[n].v[k], sigma = traj.sigma[n].v[k], z = traj.z[n].v[k];
      const double chi2 = control.chi2[n].v[k];
      const ReactionPartials r = reaction_partials(phi, sigma, z, control.chi1[n].v[k], spec);
      c.a1[n].v[k] = r.u_phi;
      c.a2[n].v[k] = r.u_sigma;
      c.a3[n].v[k] = r.u_z;
      c.a4[n].v[k] = r.u_chi1;
      c.b1[n].v[k] = chi2 * r.s_phi - r.k_phi;
      c.b2[n].v[k] = -r.k_sigma;
      c.b3[n].v[k] = chi2 * r.s_z - r.k_z;
      c.b4[n].v[k] = r.s;

      const Sym2 eps = at(traj.eps_u[n], k);
      const Lame b = spec.fn->elasticity(phi, z_prev.v[k]);
      put(c.c1[n], k, b.stress_phi(eps) * -1.0);
      put(c.c2[n], k, b.stress_z(eps) * -1.0);
      c.mu[n][k] = spec.a_mu / traj.tau + b.mu;
      c.lam[n][k] = spec.a_lam / traj.tau + b.lam;

      const PsiEval psi = spec.fn->psi(phi, eps);
      c.d1[n].v[k] = -psi.d_phi;
      put(c.d2[n], k, psi.d_eps * -1.0);
      c.d3[n].v[k] = -pot.beta_prime(z) - pot.pi_prime(z);
    }
    require_finite(c.a1[n].v, "a1", n);
    require_finite(c.a2[n].v, "a2", n);
    require_finite(c.a3[n].v, "a3", n);
    require_finite(c.a4[n].v, "a4", n);
    require_finite(c.b1[n].v, "b1", n);
    require_finite(c.b2[n].v, "b2", n);
    require_finite(c.b3[n].v, "b3", n);
    require_finite(c.b4[n].v, "b4", n);
    require_finite(c.c1[n], "c1", n);
    require_finite(c.c2[n], "c2", n);
    require_finite(c.d1[n].v, "d1", n);
    require_finite(c.d2[n], "d2", n);
    require_finite(c.d3[n].v, "d3", n);
  }
  return c;
}

LinearizedTrajectory solve_linearized(const LinearizedCoefficients& c, const Control& h,
                                      const ModelSpec& spec) {
  const std::size_t nodes = c.time_nodes();
  if (h.time_nodes() != nodes)
    throw std::invalid_argument("solve_linearized: direction and coefficient time grids differ");
  const Grid& g = c.a1.front().grid;
  const double tau = c.tau;
  const Eigen::Index nn = static_cast<Eigen::Index>(g.nodes());
  const Eigen::VectorXd a_mu = Eigen::VectorXd::Constant(nn, spec.a_mu / tau);
  const Eigen::VectorXd a_lam = Eigen::VectorXd::Constant(nn, spec.a_lam / tau);
  const ElasticitySolver elastic = make_elasticity_solver(spec, tau);

  LinearizedTrajectory lin;
  lin.xi.assign(1, ScalarField(g));
  lin.rho.assign(1, ScalarField(g));
  lin.zeta.assign(1, ScalarField(g));
  lin.omega.assign(1, VectorField(g));
  lin.eps_omega.assign(1, SymTensorField(g));

  for (std::size_t n = 0; n + 1 < nodes; ++n) {
    const ScalarField& xi = lin.xi[n];
    const ScalarField& rho = lin.rho[n];
    const ScalarField& zeta = lin.zeta[n];

    ScalarField rhs(g, xi.v + tau * (c.a1[n].v.cwiseProduct(xi.v) + c.a2[n].v.cwiseProduct(rho.v) +
                                     c.a3[n].v.cwiseProduct(zeta.v) + c.a4[n].v.cwiseProduct(h.chi1[n].v)));
    ScalarField xi_new = xi;
    solve_implicit_diffusion(Boundary::neumann, tau, {}, rhs, xi_new, "xi");

    rhs.v = rho.v + tau * (c.b1[n].v.cwiseProduct(xi.v) + c.b2[n].v.cwiseProduct(rho.v) +
                           c.b3[n].v.cwiseProduct(zeta.v) + c.b4[n].v.cwiseProduct(h.chi2[n].v));
    ScalarField rho_new = rho;
    solve_implicit_diffusion(Boundary::robin, tau, {}, rhs, rho_new, "rho");

    VectorField load = stress_transpose(isotropic_stress(a_mu, a_lam, lin.eps_omega[n]));
    const VectorField coupling = stress_transpose(combine(c.c1[n + 1], xi_new, c.c2[n + 1], zeta));
    load.u1 += coupling.u1;
    load.u2 += coupling.u2;
    VectorField omega_new = lin.omega[n];
    elastic.solve(c.mu[n + 1], c.lam[n + 1], load, omega_new);
    SymTensorField eps_new = sym_grad(omega_new);

    rhs.v = zeta.v + tau * (c.d1[n + 1].v.cwiseProduct(xi_new.v) + contract(c.d2[n + 1], eps_new).v);
    ScalarField zeta_new = zeta;
    solve_implicit_diffusion(Boundary::neumann, tau, c.d3[n + 1].v, rhs, zeta_new, "zeta");

    lin.xi.push_back(std::move(xi_new));
    lin.rho.push_back(std::move(rho_new));
    lin.omega.push_back(std::move(omega_new));
    lin.eps_omega.push_back(std::move(eps_new));
    lin.zeta.push_back(std::move(zeta_new));
  }
  return lin;
}

double remainder_norm(const StateTrajectory& a, const StateTrajectory& b,
                      const LinearizedTrajectory* d, double scale) {
  if (a.steps() != b.steps()) throw std::invalid_argument("remainder_norm: time grids differ");
  const Grid& g = a.grid();
  const auto w = trapezoid_time_weights(a.times.size(), a.tau);
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    ScalarField dphi(g, a.phi[n].v - b.phi[n].v);
    ScalarField dsig(g, a.sigma[n].v - b.sigma[n].v);
    ScalarField dz(g, a.z[n].v - b.z[n].v);
    VectorField du(g);
    du.u1 = a.u[n].u1 - b.u[n].u1;
    du.u2 = a.u[n].u2 - b.u[n].u2;
    if (d) {
      dphi.v -= scale * d->xi[n].v;
      dsig.v -= scale * d->rho[n].v;
      dz.v -= scale * d->zeta[n].v;
      du.u1 -= scale * d->omega[n].u1;
      du.u2 -= scale * d->omega[n].u2;
    }
    const double h1 = norm_h1(dphi), h2 = norm_h1(dsig), h3 = norm_h1(dz), h4 = norm_h1(du);
    s += w[n] * (h1 * h1 + h2 * h2 + h3 * h3 + h4 * h4);
  }
  return std::sqrt(s);
}

double norm_l2v(const LinearizedTrajectory& lin, double tau) {
  const auto w = trapezoid_time_weights(lin.xi.size(), tau);
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const double h1 = norm_h1(lin.xi[n]), h2 = norm_h1(lin.rho[n]), h3 = norm_h1(lin.zeta[n]),
                 h4 = norm_h1(lin.omega[n]);
    s += w[n] * (h1 * h1 + h2 * h2 + h3 * h3 + h4 * h4);
  }
  return std::sqrt(s);
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fitted_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

TaylorResult taylor_test(const Control& control, const Control& h, const std::vector<double>& epsilons,
                         const ModelSpec& spec, int steps) {
  const StateTrajectory base = solve_state(control, spec, steps);
  const LinearizedCoefficients coeffs = assemble_coefficients(base, control, spec);
  const LinearizedTrajectory dir = solve_linearized(coeffs, h, spec);

  TaylorResult out;
  out.epsilons = epsilons;
  for (double e : epsilons) {
    const StateTrajectory moved = solve_state(control + e * h, spec, steps);
    out.remainder.push_back(remainder_norm(moved, base, &dir, e));
    out.first_order.push_back(remainder_norm(moved, base, nullptr, 0.0));
  }
  const bool degenerate = std::all_of(out.first_order.begin(), out.first_order.end(),
                                      [](double v) { return v == 0.0; });
  if (!degenerate) {
    out.slope = fitted_slope(out.epsilons, out.remainder);
    out.first_order_slope = fitted_slope(out.epsilons, out.first_order);
  }
  return out;
}

}  // namespace tumorctl
