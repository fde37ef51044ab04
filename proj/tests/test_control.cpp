#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "tumorctl/config.hpp"
#include "tumorctl/control.hpp"
#include "tumorctl/errors.hpp"

using namespace tumorctl;
using testing::random_field;

namespace {

RunConfig small_config(int n, int steps, std::initializer_list<std::pair<const char*, std::string>> extra = {}) {
  RunConfig cfg = testing::config({{"grid.nx", std::to_string(n)},
                                   {"grid.ny", std::to_string(n)},
                                   {"time.steps", std::to_string(steps)}});
  for (const auto& [k, v] : extra) cfg.set(k, v);
  return cfg;
}

RunConfig only_alpha9(RunConfig cfg, const std::string& a9) {
  for (int i = 1; i <= 8; ++i) cfg.set("cost.alpha" + std::to_string(i), "0");
  cfg.set("cost.alpha9", a9);
  return cfg;
}

ReducedProblem problem_from(const RunConfig& cfg) {
  ModelSpec spec = build_model(cfg);
  CostSpec cost = build_cost(cfg, spec);
  return ReducedProblem(std::move(spec), std::move(cost), build_steps(cfg));
}

// Constant-in-space trajectory built by hand; only the cost reads it.
StateTrajectory constant_trajectory(const Grid& g, int steps, double T, double phi, double sigma, double z,
                                    const Sym2& eps) {
  StateTrajectory tr;
  tr.tau = T / steps;
  SymTensorField e(g);
  e.e11.setConstant(eps.e11);
  e.e22.setConstant(eps.e22);
  e.e12.setConstant(eps.e12);
  for (int n = 0; n <= steps; ++n) {
    tr.times.push_back(n * tr.tau);
    tr.phi.emplace_back(g, phi);
    tr.sigma.emplace_back(g, sigma);
    tr.z.emplace_back(g, z);
    tr.u.emplace_back(g);
    tr.eps_u.push_back(e);
  }
  return tr;
}

Control random_admissible(const Grid& g, std::size_t nodes, std::uint64_t seed, double lo, double hi) {
  Control c = Control::constant(g, nodes, 0.0, 0.0);
  for (std::size_t n = 0; n < nodes; ++n) {
    c.chi1[n] = random_field(g, seed + 2 * n, lo, hi);
    c.chi2[n] = random_field(g, seed + 2 * n + 1, lo, hi);
  }
  return c;
}

}  // namespace

TEST_SUITE("control") {
  TEST_CASE("cost terms of a constant trajectory") {
    const RunConfig cfg = small_config(8, 10);
    const ModelSpec spec = build_model(cfg);
    const CostSpec cost = build_cost(cfg, spec);
    const double phi = 0.5, sigma = 0.25, z = 0.3, c1 = 0.2, c2 = 0.3;
    const Sym2 e{0.1, 0.0, 0.05};
    const StateTrajectory tr = constant_trajectory(spec.grid, 10, 1.0, phi, sigma, z, e);
    const CostTerms t = eval_cost_terms(tr, Control::constant(spec.grid, 11, c1, c2), cost, spec);
    // unit square, T = 1; targets phi_Q 0.2, sigma_Q 0.3, z_Q 0.4, phi_Omega 0, sigma_Omega 0.3
    const double gamma = spec.fn->gamma(phi).v;
    const double expected[9] = {0.5 * 1.0 * 0.09,
                                0.5 * 1.0 * 0.25,
                                0.1 * phi,
                                0.5 * 1.0 * 0.0025,
                                0.5 * 1.0 * 0.0025,
                                0.5 * 0.1 * gamma * e.norm2(),
                                0.5 * 1.0 * 0.01,
                                0.1 * z,
                                0.5 * 0.01 * (c1 * c1 + c2 * c2)};
    double total = 0.0;
    for (int i = 0; i < 9; ++i) {
      CHECK(t.term[static_cast<std::size_t>(i)] == doctest::Approx(expected[i]).epsilon(1e-12));
      total += expected[i];
    }
    CHECK(t.total == doctest::Approx(total).epsilon(1e-12));
  }

  TEST_CASE("cost validation") {
    const Grid g = Grid::on_rectangle(4, 4, 1.0, 1.0);
    CostSpec c = CostSpec::zero(g, 3);
    CHECK_NOTHROW(c.validate(g, 3));
    CHECK_THROWS_AS(c.validate(g, 4), ConfigError);
    c.a(4) = -1.0;
    CHECK_THROWS_AS(c.validate(g, 3), ConfigError);
    c.a(4) = 1.0;
    c.phi_q[1].v[2] = std::nan("");
    CHECK_THROWS_AS(c.validate(g, 3), ConfigError);
  }

  TEST_CASE("control cost alone: gradient is alpha9 chi and matches finite differences exactly") {
    const RunConfig cfg = only_alpha9(small_config(8, 10), "0.7");
    const ReducedProblem p = problem_from(cfg);
    const Control chi = random_admissible(p.spec().grid, p.time_nodes(), 5, 0.0, 1.0);
    const ReducedProblem::Evaluation ev = p.evaluate(chi, true);
    for (std::size_t n = 0; n < chi.time_nodes(); ++n) {
      CHECK((ev.gradient.chi1[n].v - 0.7 * chi.chi1[n].v).cwiseAbs().maxCoeff() < 1e-15);
      CHECK((ev.gradient.chi2[n].v - 0.7 * chi.chi2[n].v).cwiseAbs().maxCoeff() < 1e-15);
    }
    // the cost is quadratic in chi, so central differences are exact up to rounding
    const Control h = random_smooth_direction(p.spec().grid, p.time_nodes(), 9);
    const double fd = fd_directional(p, chi, h, 1e-2);
    CHECK(fd == doctest::Approx(inner(ev.gradient, h, p.tau())).epsilon(1e-10));
  }

  TEST_CASE("finite differences settle over the epsilon ladder") {
    const ReducedProblem p = problem_from(small_config(10, 25));
    const Control chi = Control::constant(p.spec().grid, p.time_nodes(), 0.2, 0.3);
    const Control h = random_smooth_direction(p.spec().grid, p.time_nodes(), 2);
    const double d1 = fd_directional(p, chi, h, 1e-2), d2 = fd_directional(p, chi, h, 1e-3),
                 d3 = fd_directional(p, chi, h, 1e-4);
    // central differences: the change shrinks by about 100 per decade
    CHECK(std::abs(d2 - d3) < 0.05 * std::abs(d1 - d2));
    CHECK(std::abs(d2 - d3) < 1e-5 * std::abs(d3));
  }

  TEST_CASE("adjoint gradient converges to the discrete derivative as tau shrinks") {
    std::vector<double> errs;
    for (int steps : {25, 50, 100}) {
      const ReducedProblem p = problem_from(small_config(12, steps));
      const Control chi = Control::constant(p.spec().grid, p.time_nodes(), 0.2, 0.3);
      const Control h = random_smooth_direction(p.spec().grid, p.time_nodes(), 4);
      const double adj = inner(p.evaluate(chi, true).gradient, h, p.tau());
      const double fd = fd_directional(p, chi, h, 1e-3);
      errs.push_back(std::abs(adj - fd) / std::abs(fd));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[0] / errs[2] > 3.0);
  }

  TEST_CASE("projection") {
    const Grid g = Grid::on_rectangle(8, 8, 1.0, 1.0);
    const std::size_t nodes = 6;
    const double tau = 0.2;
    const AdmissibleBox box = AdmissibleBox::constant(g, nodes, 0.0, 1.0, 0.1, 0.9, 10.0);
    CHECK_NOTHROW(box.validate(g, nodes));

    SUBCASE("clamps to the box and is idempotent") {
      const Control c = random_admissible(g, nodes, 1, -1.0, 2.0);
      const Projection p = project_admissible(c, box, tau);
      CHECK_FALSE(p.ball_active);
      CHECK(box.contains(p.control, tau));
      for (std::size_t n = 0; n < nodes; ++n) {
        CHECK(p.control.chi1[n].v == c.chi1[n].v.cwiseMax(0.0).cwiseMin(1.0));
        CHECK(p.control.chi2[n].v == c.chi2[n].v.cwiseMax(0.1).cwiseMin(0.9));
      }
      const Projection again = project_admissible(p.control, box, tau);
      for (std::size_t n = 0; n < nodes; ++n) CHECK(again.control.chi1[n].v == p.control.chi1[n].v);
    }
    SUBCASE("nonexpansive while the ball is inactive") {
      for (std::uint64_t s = 0; s < 10; ++s) {
        const Control a = random_admissible(g, nodes, 100 + 20 * s, -1.0, 2.0);
        const Control b = random_admissible(g, nodes, 110 + 20 * s, -1.0, 2.0);
        const double before = norm_l2(a - b, tau);
        const double after =
            norm_l2(project_admissible(a, box, tau).control - project_admissible(b, box, tau).control, tau);
        CHECK(after <= before);
      }
    }
    SUBCASE("rescales chi1 onto the ball") {
      const AdmissibleBox tight = AdmissibleBox::constant(g, nodes, 0.0, 5.0, 0.0, 5.0, 0.5);
      const Control c = random_admissible(g, nodes, 3, 0.5, 4.0);
      const Projection p = project_admissible(c, tight, tau);
      CHECK(p.ball_active);
      CHECK(chi1_v_norm(p.control, tau) == doctest::Approx(0.5).epsilon(1e-10));
      CHECK(tight.contains(p.control, tau));
      // chi2 is untouched by the ball
      for (std::size_t n = 0; n < nodes; ++n) CHECK(p.control.chi2[n].v == c.chi2[n].v);
    }
    SUBCASE("inconsistent boxes are rejected") {
      CHECK_THROWS_AS(AdmissibleBox::constant(g, nodes, 1.0, 0.0, 0.0, 1.0, 1.0).validate(g, nodes), ConfigError);
      CHECK_THROWS_AS(AdmissibleBox::constant(g, nodes, 0.0, 1.0, 0.0, 1.0, 0.0).validate(g, nodes), ConfigError);
      CHECK_THROWS_AS(box.validate(g, nodes + 1), ConfigError);
    }
  }

  TEST_CASE("optimizer on the control cost alone") {
    SUBCASE("unit weight reaches the box minimum in one step") {
      const ReducedProblem p = problem_from(only_alpha9(small_config(8, 10), "1"));
      const AdmissibleBox box = AdmissibleBox::constant(p.spec().grid, p.time_nodes(), 0.0, 1.0, 0.0, 1.0, 10.0);
      const OptimizationResult r =
          optimize(Control::constant(p.spec().grid, p.time_nodes(), 0.2, 0.3), p, box, OptimizerOptions{});
      CHECK(r.converged);
      CHECK(r.history.size() == 2u);
      CHECK(r.history.back().cost == 0.0);
      CHECK(r.control.chi1[3].v.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("active lower bound") {
      const ReducedProblem p = problem_from(only_alpha9(small_config(8, 10), "0.5"));
      const AdmissibleBox box = AdmissibleBox::constant(p.spec().grid, p.time_nodes(), 0.1, 1.0, 0.2, 1.0, 10.0);
      const OptimizationResult r =
          optimize(Control::constant(p.spec().grid, p.time_nodes(), 0.8, 0.9), p, box, OptimizerOptions{});
      CHECK(r.converged);
      for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].cost <= r.history[i - 1].cost);
      for (std::size_t n = 0; n < p.time_nodes(); ++n) {
        CHECK((r.control.chi1[n].v.array() - 0.1).abs().maxCoeff() < 1e-6);
        CHECK((r.control.chi2[n].v.array() - 0.2).abs().maxCoeff() < 1e-6);
      }
    }
  }

  TEST_CASE("variational inequality") {
    const RunConfig cfg = only_alpha9(small_config(8, 10), "1");
    const ModelSpec spec = build_model(cfg);
    const CostSpec cost = build_cost(cfg, spec);
    const std::size_t nodes = 11;
    const AdmissibleBox box = AdmissibleBox::constant(spec.grid, nodes, 0.1, 1.0, 0.1, 1.0, 10.0);
    auto report = [&](const Control& chi) {
      const StateTrajectory tr = solve_state(chi, spec, 10);
      const AdjointTrajectory adj = solve_adjoint(tr, assemble_coefficients(tr, chi, spec), cost, spec);
      return vi_residual(chi, box, tr, adj, cost, spec, 8, 1);
    };
    // at the minimizer chi = low, g* = low > 0 and every admissible direction points up
    const ViReport opt = report(Control::constant(spec.grid, nodes, 0.1, 0.1));
    CHECK(opt.probes == 13);
    CHECK(opt.star == 0.0);
    CHECK(opt.printed == 0.0);
    CHECK(opt.scale > 0.0);
    // an interior point is not stationary: moving toward the low corner decreases J
    const ViReport mid = report(Control::constant(spec.grid, nodes, 0.5, 0.5));
    // g* = 0.5 everywhere; the low corner is 0.4 away in each component over Q of measure 1
    CHECK(mid.star == doctest::Approx(-0.5 * 0.4 * 2).epsilon(1e-12));
    CHECK(mid.printed < 0.0);
  }

  TEST_CASE("history csv") {
    const auto path = (std::filesystem::temp_directory_path() / "tumorctl_history.csv").string();
    write_history_csv(path, {{0, 1.5, 0.25, 0.0, false}, {1, 0.1, 1e-3, 0.5, true}});
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "iteration,J,stationarity,step,ball_active\n0,1.5,0.25,0,0\n1,0.10000000000000001,0.001,0.5,1\n");
    std::filesystem::remove(path);
  }
}
