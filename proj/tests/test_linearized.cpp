#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tumorctl/linearized.hpp"

using namespace tumorctl;
using testing::random_field;

namespace {

struct Setup {
  ModelSpec spec;
  int steps;
  Control control;
  StateTrajectory traj;
  LinearizedCoefficients coeffs;

  Setup(int n, int steps_, std::initializer_list<std::pair<const char*, std::string>> extra = {})
      : spec(make(n, extra)),
        steps(steps_),
        control(Control::constant(spec.grid, static_cast<std::size_t>(steps_) + 1, 0.2, 0.3)),
        traj(solve_state(control, spec, steps_)),
        coeffs(assemble_coefficients(traj, control, spec)) {}

  static ModelSpec make(int n, std::initializer_list<std::pair<const char*, std::string>> extra) {
    RunConfig cfg = testing::config({{"grid.nx", std::to_string(n)}, {"grid.ny", std::to_string(n)}});
    for (const auto& [k, v] : extra) cfg.set(k, v);
    return build_model(cfg);
  }

  Control direction(std::uint64_t seed) const {
    return random_smooth_direction(spec.grid, control.time_nodes(), seed);
  }
};

double fd(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double coeff_error(double an, double fdv) { return std::abs(an - fdv) / std::max(std::abs(an), 1e-2); }

// Largest max-norm difference between two linearized trajectories, relative to the first.
double lin_gap(const LinearizedTrajectory& a, const LinearizedTrajectory& b) {
  double diff = 0.0, size = 0.0;
  for (std::size_t n = 0; n < a.xi.size(); ++n) {
    for (auto [x, y] : {std::pair{&a.xi[n].v, &b.xi[n].v}, std::pair{&a.rho[n].v, &b.rho[n].v},
                        std::pair{&a.zeta[n].v, &b.zeta[n].v}, std::pair{&a.omega[n].u1, &b.omega[n].u1},
                        std::pair{&a.omega[n].u2, &b.omega[n].u2}}) {
      diff = std::max(diff, (*x - *y).cwiseAbs().maxCoeff());
      size = std::max(size, x->cwiseAbs().maxCoeff());
    }
  }
  return diff / size;
}

LinearizedTrajectory combine(double s, const LinearizedTrajectory& a, double t, const LinearizedTrajectory& b) {
  LinearizedTrajectory out = a;
  for (std::size_t n = 0; n < a.xi.size(); ++n) {
    out.xi[n].v = s * a.xi[n].v + t * b.xi[n].v;
    out.rho[n].v = s * a.rho[n].v + t * b.rho[n].v;
    out.zeta[n].v = s * a.zeta[n].v + t * b.zeta[n].v;
    out.omega[n].u1 = s * a.omega[n].u1 + t * b.omega[n].u1;
    out.omega[n].u2 = s * a.omega[n].u2 + t * b.omega[n].u2;
  }
  return out;
}

}  // namespace

TEST_SUITE("linearized") {
  TEST_CASE("control coefficients") {
    const Setup st(8, 10);
    const ModelSpec& s = st.spec;
    for (std::size_t n = 0; n < st.coeffs.time_nodes(); ++n)
      for (Eigen::Index k = 0; k < st.traj.phi[n].v.size(); ++k) {
        const double phi = st.traj.phi[n].v[k], z = st.traj.z[n].v[k];
        // U is affine in chi1 with slope -phi (1 - phi/N)
        CHECK(st.coeffs.a4[n].v[k] == doctest::Approx(-phi * (1.0 - phi / s.n_cap)).epsilon(1e-14));
        CHECK(st.coeffs.b4[n].v[k] == doctest::Approx(s.fn->source(phi, z).v).epsilon(1e-14));
      }
    // chi1 has no effect where there is no tumor
    const ReactionPartials r = reaction_partials(0.0, 0.5, 0.3, 0.7, s);
    CHECK(r.u_chi1 == 0.0);
    CHECK(reaction_partials(s.n_cap, 0.5, 0.3, 0.7, s).u_chi1 == 0.0);
  }

  TEST_CASE("every coefficient matches a finite difference of the nonlinear maps") {
    const Setup st(6, 6, {{"model.k2_variable", "true"}});
    const ModelSpec& s = st.spec;
    const LinearizedCoefficients& c = st.coeffs;
    double worst = 0.0;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n = 0; n < c.time_nodes(); ++n)
      for (Eigen::Index k = 0; k < st.traj.phi[n].v.size(); k += 5) {
        const double phi = st.traj.phi[n].v[k], sig = st.traj.sigma[n].v[k], z = st.traj.z[n].v[k];
        const double zp = st.traj.z[n == 0 ? 0 : n - 1].v[k];
        const double chi1 = st.control.chi1[n].v[k], chi2 = st.control.chi2[n].v[k];
        const Sym2 eps = at(st.traj.eps_u[n], k);
        auto U = [&](double p, double q, double w, double x) { return eval_U(p, q, w, x, s); };
        auto G = [&](double p, double q, double w) { return chi2 * s.fn->source(p, w).v - eval_K(p, q, w, s); };
        const double checks[][2] = {
            {c.a1[n].v[k], fd([&](double x) { return U(x, sig, z, chi1); }, phi)},
            {c.a2[n].v[k], fd([&](double x) { return U(phi, x, z, chi1); }, sig)},
            {c.a3[n].v[k], fd([&](double x) { return U(phi, sig, x, chi1); }, z)},
            {c.a4[n].v[k], fd([&](double x) { return U(phi, sig, z, x); }, chi1)},
            {c.b1[n].v[k], fd([&](double x) { return G(x, sig, z); }, phi)},
            {c.b2[n].v[k], fd([&](double x) { return G(phi, x, z); }, sig)},
            {c.b3[n].v[k], fd([&](double x) { return G(phi, sig, x); }, z)},
            {c.b4[n].v[k], fd([&](double x) { return x * s.fn->source(phi, z).v; }, chi2)},
            {c.d1[n].v[k], -fd([&](double x) { return eval_Psi(x, eps, s).v; }, phi)},
            {c.d3[n].v[k], -fd([&](double x) { return s.potential.beta(x) + s.potential.pi(x); }, z)},
        };
        for (const auto& p : checks) worst = std::max(worst, coeff_error(p[0], p[1]));

        // tensor coefficients, contracted with a random direction
        const Sym2 dir{u(rng), u(rng), u(rng)};
        const Sym2 c1 = at(c.c1[n], k), c2 = at(c.c2[n], k), d2 = at(c.d2[n], k);
        const double c1fd = -fd([&](double x) { return eval_B(x, zp, s).stress(eps).dot(dir); }, phi);
        const double c2fd = -fd([&](double x) { return eval_B(phi, x, s).stress(eps).dot(dir); }, zp);
        const double d2fd = -fd([&](double x) { return eval_Psi(phi, eps + dir * x, s).v; }, 0.0);
        worst = std::max({worst, coeff_error(c1.dot(dir), c1fd), coeff_error(c2.dot(dir), c2fd),
                          coeff_error(d2.dot(dir), d2fd)});

        const Lame b = eval_B(phi, zp, s);
        CHECK(c.mu[n][k] == doctest::Approx(s.a_mu / c.tau + b.mu).epsilon(1e-14));
        CHECK(c.lam[n][k] == doctest::Approx(s.a_lam / c.tau + b.lam).epsilon(1e-14));
      }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("zero direction gives the zero solution") {
    const Setup st(8, 10);
    const LinearizedTrajectory lin = solve_linearized(st.coeffs, Control::zeros_like(st.control), st.spec);
    CHECK(lin.xi.size() == st.traj.times.size());
    CHECK(norm_l2v(lin, st.coeffs.tau) == 0.0);
  }

  TEST_CASE("superposition and homogeneity") {
    const Setup st(10, 20);
    const Control h1 = st.direction(1), h2 = st.direction(2);
    const LinearizedTrajectory l1 = solve_linearized(st.coeffs, h1, st.spec);
    const LinearizedTrajectory l2 = solve_linearized(st.coeffs, h2, st.spec);
    const LinearizedTrajectory l12 = solve_linearized(st.coeffs, h1 + h2, st.spec);
    const LinearizedTrajectory l3 = solve_linearized(st.coeffs, -2.5 * h1, st.spec);
    CHECK(lin_gap(combine(1.0, l1, 1.0, l2), l12) < 1e-9);
    CHECK(lin_gap(combine(-2.5, l1, 0.0, l2), l3) < 1e-9);
  }

  TEST_CASE("linearized solution is the derivative of the discrete solution map") {
    // central differences of the discrete state cancel the O(e) term
    const Setup st(10, 20);
    const Control h = st.direction(3);
    const LinearizedTrajectory lin = solve_linearized(st.coeffs, h, st.spec);
    const double e = 1e-3;
    const StateTrajectory plus = solve_state(st.control + e * h, st.spec, st.steps);
    const StateTrajectory minus = solve_state(st.control + (-e) * h, st.spec, st.steps);
    LinearizedTrajectory central = lin;
    for (std::size_t n = 0; n < lin.xi.size(); ++n) {
      central.xi[n].v = (plus.phi[n].v - minus.phi[n].v) / (2 * e);
      central.rho[n].v = (plus.sigma[n].v - minus.sigma[n].v) / (2 * e);
      central.zeta[n].v = (plus.z[n].v - minus.z[n].v) / (2 * e);
      central.omega[n].u1 = (plus.u[n].u1 - minus.u[n].u1) / (2 * e);
      central.omega[n].u2 = (plus.u[n].u2 - minus.u[n].u2) / (2 * e);
    }
    CHECK(lin_gap(lin, central) < 1e-4);
  }

  TEST_CASE("stable under time refinement") {
    // ||D S h|| / ||h|| settles as tau shrinks
    std::vector<double> ratios;
    for (int steps : {25, 50, 100}) {
      const Setup st(12, steps);
      const Control h = st.direction(5);
      const LinearizedTrajectory lin = solve_linearized(st.coeffs, h, st.spec);
      const double r = norm_l2v(lin, st.coeffs.tau) / norm_l2(h, st.coeffs.tau);
      CHECK(std::isfinite(r));
      ratios.push_back(r);
    }
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    CHECK(hi / lo - 1.0 < 0.25);
  }

  TEST_CASE("Taylor remainder is second order") {
    const Setup st(12, 40);
    const TaylorResult t = taylor_test(st.control, st.direction(7), {1e-1, 1e-2, 1e-3, 1e-4}, st.spec, st.steps);
    CHECK(t.slope >= 1.8);
    CHECK(t.first_order_slope == doctest::Approx(1.0).epsilon(0.05));
    for (std::size_t i = 0; i < t.remainder.size(); ++i) CHECK(t.remainder[i] < t.first_order[i]);
  }

  TEST_CASE("fitted slope") {
    CHECK(fitted_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(fitted_slope({1.0}, {1.0}), std::invalid_argument);
  }

  TEST_CASE("mismatched time grids are rejected") {
    const Setup st(8, 10);
    const Control wrong = Control::constant(st.spec.grid, 5, 0.0, 0.0);
    CHECK_THROWS_AS(assemble_coefficients(st.traj, wrong, st.spec), std::invalid_argument);
    CHECK_THROWS_AS(solve_linearized(st.coeffs, wrong, st.spec), std::invalid_argument);
  }
}
