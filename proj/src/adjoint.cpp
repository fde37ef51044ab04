#include "tumorctl/adjoint.hpp"

#include <cmath>
#include <stdexcept>

namespace tumorctl {

namespace {

SymTensorField scaled(const SymTensorField& a, const Eigen::VectorXd& s) {
  SymTensorField out(a.grid);
  out.e11 = a.e11.cwiseProduct(s);
  out.e22 = a.e22.cwiseProduct(s);
  out.e12 = a.e12.cwiseProduct(s);
  return out;
}

Eigen::VectorXd contract(const SymTensorField& a, const SymTensorField& b) {
  return a.e11.cwiseProduct(b.e11) + a.e22.cwiseProduct(b.e22) + 2.0 * a.e12.cwiseProduct(b.e12);
}

}  // namespace

void eval_gamma(const ScalarField& phi, const ModelSpec& spec, ScalarField& gamma, ScalarField& gamma_phi) {
  gamma = ScalarField(phi.grid);
  gamma_phi = ScalarField(phi.grid);
  for (Eigen::Index k = 0; k < phi.v.size(); ++k) {
    const Eval1 e = spec.fn->gamma(phi.v[k]);
    gamma.v[k] = spec.gamma_weight.v[k] * e.v;
    gamma_phi.v[k] = spec.gamma_weight.v[k] * e.d;
  }
}

AdjointTrajectory solve_adjoint(const StateTrajectory& traj, const LinearizedCoefficients& c,
                                const CostSpec& cost, const ModelSpec& spec) {
  const std::size_t nodes = traj.times.size();
  if (c.time_nodes() != nodes) throw std::invalid_argument("solve_adjoint: coefficient time grid differs");
  cost.validate(traj.grid(), nodes);
  const Grid& g = traj.grid();
  const double tau = traj.tau;
  const Eigen::Index nn = static_cast<Eigen::Index>(g.nodes());
  const Eigen::VectorXd a_mu = Eigen::VectorXd::Constant(nn, spec.a_mu / tau);
  const Eigen::VectorXd a_lam = Eigen::VectorXd::Constant(nn, spec.a_lam / tau);
  const ElasticitySolver elastic = make_elasticity_solver(spec, tau);
  const std::size_t last = nodes - 1;

  AdjointTrajectory adj;
  adj.q.assign(nodes, ScalarField(g));
  adj.r.assign(nodes, ScalarField(g));
  adj.s.assign(nodes, ScalarField(g));
  adj.v.assign(nodes, VectorField(g));
  adj.eps_v.assign(nodes, SymTensorField(g));

  adj.q[last].v = cost.a(2) * (traj.phi[last].v - cost.phi_omega.v) +
                  Eigen::VectorXd::Constant(nn, cost.a(3));
  adj.r[last].v = cost.a(5) * (traj.sigma[last].v - cost.sigma_omega.v);
  adj.s[last].v = Eigen::VectorXd::Constant(nn, cost.a(8));

  ScalarField gamma, gamma_phi;
  for (std::size_t m = last; m > 0; --m) {
    const std::size_t n = m - 1;
    const Eigen::VectorXd& q = adj.q[m].v;
    const Eigen::VectorXd& r = adj.r[m].v;
    const Eigen::VectorXd& s = adj.s[m].v;
    const SymTensorField& ev = adj.eps_v[m];
    const SymTensorField& eu = traj.eps_u[m];
    eval_gamma(traj.phi[m], spec, gamma, gamma_phi);

    ScalarField rhs(g, q + tau * (c.a1[m].v.cwiseProduct(q) + c.b1[m].v.cwiseProduct(r) +
                                  c.d1[m].v.cwiseProduct(s) + contract(c.c1[m], ev) +
                                  cost.a(1) * (traj.phi[m].v - cost.phi_q[m].v) +
                                  0.5 * cost.a(6) * gamma_phi.v.cwiseProduct(contract(eu, eu))));
    adj.q[n] = adj.q[m];
    solve_implicit_diffusion(Boundary::neumann, tau, {}, rhs, adj.q[n], "q");

    rhs.v = r + tau * (c.a2[m].v.cwiseProduct(q) + c.b2[m].v.cwiseProduct(r) +
                       cost.a(4) * (traj.sigma[m].v - cost.sigma_q[m].v));
    adj.r[n] = adj.r[m];
    solve_implicit_diffusion(Boundary::robin, tau, {}, rhs, adj.r[n], "r");

    rhs.v = s + tau * (c.a3[m].v.cwiseProduct(q) + c.b3[m].v.cwiseProduct(r) + contract(c.c2[m], ev) +
                       cost.a(7) * (traj.z[m].v - cost.z_q[m].v));
    adj.s[n] = adj.s[m];
    solve_implicit_diffusion(Boundary::neumann, tau, c.d3[m].v, rhs, adj.s[n], "s");

    SymTensorField src = scaled(c.d2[m], s);
    const SymTensorField track = scaled(eu, cost.a(6) * gamma.v);
    src.e11 += track.e11;
    src.e22 += track.e22;
    src.e12 += track.e12;
    VectorField load = stress_transpose(isotropic_stress(a_mu, a_lam, ev));
    const VectorField forcing = stress_transpose(src);
    load.u1 += forcing.u1;
    load.u2 += forcing.u2;
    adj.v[n] = adj.v[m];
    elastic.solve(c.mu[m], c.lam[m], load, adj.v[n]);
    adj.eps_v[n] = sym_grad(adj.v[n]);
  }
  return adj;
}

double DualityPairing::residual() const { return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-30); }

DualityPairing duality_pairing(const LinearizedTrajectory& lin, const AdjointTrajectory& adj,
                               const LinearizedCoefficients& c, const StateTrajectory& traj,
                               const CostSpec& cost, const ModelSpec& spec, const Control& h) {
  const std::size_t nodes = traj.times.size();
  if (lin.xi.size() != nodes || adj.q.size() != nodes || h.time_nodes() != nodes)
    throw std::invalid_argument("duality_pairing: time grids differ");
  const Grid& g = traj.grid();
  const auto w = trapezoid_time_weights(nodes, traj.tau);
  const std::size_t last = nodes - 1;

  DualityPairing out;
  ScalarField gamma, gamma_phi;
  for (std::size_t n = 0; n < nodes; ++n) {
    out.lhs += w[n] * (inner(ScalarField(g, c.a4[n].v.cwiseProduct(h.chi1[n].v)), adj.q[n]) +
                       inner(ScalarField(g, c.b4[n].v.cwiseProduct(h.chi2[n].v)), adj.r[n]));

    const SymTensorField& eu = traj.eps_u[n];
    eval_gamma(traj.phi[n], spec, gamma, gamma_phi);
    double running = cost.a(1) * inner(ScalarField(g, traj.phi[n].v - cost.phi_q[n].v), lin.xi[n]) +
                     cost.a(4) * inner(ScalarField(g, traj.sigma[n].v - cost.sigma_q[n].v), lin.rho[n]) +
                     cost.a(7) * inner(ScalarField(g, traj.z[n].v - cost.z_q[n].v), lin.zeta[n]);
    if (cost.a(6) != 0.0) {
      running += cost.a(6) *
                 (inner(ScalarField(g, 0.5 * gamma_phi.v.cwiseProduct(contract(eu, eu))), lin.xi[n]) +
                  inner(scaled(eu, gamma.v), lin.eps_omega[n]));
    }
    out.rhs += w[n] * running;
  }
  out.rhs += cost.a(2) * inner(ScalarField(g, traj.phi[last].v - cost.phi_omega.v), lin.xi[last]) +
             cost.a(3) * integral(lin.xi[last]) +
             cost.a(5) * inner(ScalarField(g, traj.sigma[last].v - cost.sigma_omega.v), lin.rho[last]) +
             cost.a(8) * integral(lin.zeta[last]);
  return out;
}

double duality_residual(const LinearizedTrajectory& lin, const AdjointTrajectory& adj,
                        const LinearizedCoefficients& coeffs, const StateTrajectory& traj,
                        const CostSpec& cost, const ModelSpec& spec, const Control& h) {
  return duality_pairing(lin, adj, coeffs, traj, cost, spec, h).residual();
}

}  // namespace tumorctl
