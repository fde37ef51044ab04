#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "tumorctl/errors.hpp"
#include "tumorctl/model.hpp"

using namespace tumorctl;

namespace {

ModelSpec small_spec(std::initializer_list<std::pair<const char*, std::string>> extra = {}) {
  RunConfig cfg = testing::config({{"grid.nx", "8"}, {"grid.ny", "8"}});
  for (const auto& [k, v] : extra) cfg.set(k, v);
  return build_model(cfg);
}

// Central difference error relative to max(|analytic|, 1e-2).
template <typename F>
double fd_error(F&& f, double x, double analytic) {
  const double h = 1e-5 * std::max(1.0, std::abs(x));
  const double fd = (f(x + h) - f(x - h)) / (2.0 * h);
  return std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-2);
}

// Long-double logistic for the independent re-evaluations.
long double L(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("U: limits and an independent re-evaluation") {
    const ModelSpec s = small_spec();
    const double n = s.n_cap;
    CHECK(eval_U(0.0, 0.7, 0.3, 0.2, s) == 0.0);
    CHECK(eval_U(n, 0.7, 0.3, 0.2, s) == doctest::Approx(-n * s.fn->g(0.7, 0.3).v).epsilon(1e-15));
    // p = 2 L(sigma - z), g = 0.3 L(-1 - sigma/2 + 2 z) at the defaults
    const long double p = 2.0L * L(0.7L), g = 0.3L * L(-0.9L);
    const long double u = (p - 0.1L) * 0.25L - 0.5L * g;
    const double oracle = 0.265736311477833647784858900335;  // 30-digit re-evaluation
    CHECK(static_cast<double>(u) == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(eval_U(0.5, 1.0, 0.3, 0.1, s) == doctest::Approx(oracle).epsilon(1e-14));
  }

  TEST_CASE("K: zero, saturation, independent value, domain") {
    const ModelSpec s = small_spec();
    CHECK(eval_K(0.4, 0.0, 0.2, s) == 0.0);
    const double k1 = s.fn->k1(0.4, 0.2).v;
    CHECK(std::abs(eval_K(0.4, 1e6, 0.2, s) - k1) <= 1e-5 * k1);
    // k1 = 0.5 L(phi - z/2), k2 = 1: K = k1 sigma / (1 + sigma)
    const double oracle = 0.203546411316407329432589744339;
    CHECK(static_cast<double>(0.5L * L(0.45L) * 2.0L / 3.0L) == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(eval_K(0.5, 2.0, 0.1, s) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK_THROWS_AS(eval_K(0.5, -1.0, 0.1, s), DomainError);
    CHECK_THROWS_AS(eval_K(0.5, -2.0, 0.1, s), DomainError);
  }

  TEST_CASE("potential") {
    const Potential pot{1.0, 0.5};
    CHECK(pot.beta(0.5) == 0.0);
    CHECK(pot.beta(0.01) == doctest::Approx(-4.59511985013458992685).epsilon(1e-14));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
    for (int i = 0; i < 50; ++i) CHECK(pot.beta_prime(u(rng)) > 0.0);
    CHECK(pot.pi(0.3) == doctest::Approx(-0.3));
    CHECK(pot.pi_prime(0.9) == -1.0);
    for (double r : {0.0, 1.0, -0.1, 1.5}) {
      CHECK_THROWS_AS(pot.beta(r), DomainError);
      CHECK_THROWS_AS(pot.beta_prime(r), DomainError);
    }
  }

  TEST_CASE("elasticity tensor B") {
    const ModelSpec s = small_spec();
    const LogisticFamily f;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
      const Lame b = eval_B(u(rng), u(rng), s);
      CHECK(b.mu > f.mu_min);
      CHECK(b.mu < f.mu_max);
    }
    double prev = eval_B(0.0, 0.0, s).mu;
    for (double z = 0.1; z < 3.0; z += 0.1) {
      const double mu = eval_B(0.0, z, s).mu;
      CHECK(mu < prev);
      prev = mu;
    }
    // stress of the identity: 2 mu I + lam tr(I) I = (2 mu + 2 lam) I
    const Lame b = eval_B(0.3, 0.4, s);
    const Sym2 st = b.stress({1.0, 1.0, 0.0});
    CHECK(st.e11 == doctest::Approx(2 * b.mu + 2 * b.lam));
    CHECK(st.e22 == doctest::Approx(2 * b.mu + 2 * b.lam));
    CHECK(st.e12 == 0.0);
    const Sym2 sh = b.stress({0.0, 0.0, 0.5});
    CHECK(sh.e12 == doctest::Approx(b.mu));
    CHECK(sh.e11 == 0.0);
  }

  TEST_CASE("Psi") {
    const ModelSpec s = small_spec();
    CHECK(eval_Psi(0.0, Sym2{}, s).v == 0.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0), ue(-0.3, 0.3);
    for (int i = 0; i < 100; ++i) {
      const double phi = u(rng);
      const Sym2 e{ue(rng), ue(rng), ue(rng)};
      const PsiEval p = eval_Psi(phi, e, s);
      CHECK(std::abs(p.v) <= s.bounds.psi_max);
      // d_eps uses the matrix-entry convention: the e12 coordinate moves two entries
      auto along = [&](int c) {
        return [&, c](double x) {
          Sym2 ee = e;
          (c == 0 ? ee.e11 : c == 1 ? ee.e22 : ee.e12) = x;
          return eval_Psi(phi, ee, s).v;
        };
      };
      CHECK(fd_error(along(0), e.e11, p.d_eps.e11) < 1e-6);
      CHECK(fd_error(along(1), e.e22, p.d_eps.e22) < 1e-6);
      CHECK(fd_error(along(2), e.e12, 2.0 * p.d_eps.e12) < 1e-6);
      CHECK(fd_error([&](double x) { return eval_Psi(x, e, s).v; }, phi, p.d_phi) < 1e-6);
    }
  }

  TEST_CASE("analytic derivatives match central differences") {
    const ModelSpec s = small_spec({{"model.k2_variable", "true"}, {"model.k2_low", "0.5"}, {"model.k2_star", "1.5"}});
    const Nonlinearities& fn = *s.fn;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 3.0), ur(0.02, 0.98);
    double worst = 0.0;
    auto track = [&](double e) { worst = std::max(worst, e); };
    for (int i = 0; i < 100; ++i) {
      const double a = u(rng), b = u(rng), r = ur(rng);
      using M = Eval2 (Nonlinearities::*)(double, double) const;
      for (M m : {&Nonlinearities::p, &Nonlinearities::g, &Nonlinearities::k1, &Nonlinearities::k2,
                  &Nonlinearities::source}) {
        const Eval2 e = (fn.*m)(a, b);
        track(fd_error([&](double x) { return (fn.*m)(x, b).v; }, a, e.d1));
        track(fd_error([&](double x) { return (fn.*m)(a, x).v; }, b, e.d2));
      }
      const Lame l = fn.elasticity(a, b);
      track(fd_error([&](double x) { return fn.elasticity(x, b).mu; }, a, l.mu_phi));
      track(fd_error([&](double x) { return fn.elasticity(a, x).mu; }, b, l.mu_z));
      track(fd_error([&](double x) { return fn.elasticity(x, b).lam; }, a, l.lam_phi));
      track(fd_error([&](double x) { return fn.elasticity(a, x).lam; }, b, l.lam_z));
      track(fd_error([&](double x) { return fn.gamma(x).v; }, a, fn.gamma(a).d));
      track(fd_error([&](double x) { return s.potential.beta(x); }, r, s.potential.beta_prime(r)));
      track(fd_error([&](double x) { return s.potential.beta_prime(x); }, r, s.potential.beta_second(r)));
      track(fd_error([&](double x) { return s.potential.pi(x); }, r, s.potential.pi_prime(r)));
    }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("hypotheses") {
    SUBCASE("default family passes") {
      const ModelSpec s = small_spec();
      const HypothesisReport rep = check_hypotheses(s, 10000, 1, nullptr);
      CHECK(rep.all_passed());
      CHECK(rep.find("H1") != nullptr);
      CHECK(rep.find("H12") != nullptr);
    }
    SUBCASE("declared p* below the sampled maximum fails H1 with a witness") {
      ModelSpec s = small_spec();
      s.bounds.p_star = 0.5 * LogisticFamily{}.p_star;
      const HypothesisReport rep = check_hypotheses(s, 2000, 1, nullptr);
      REQUIRE(rep.find("H1") != nullptr);
      CHECK_FALSE(rep.find("H1")->passed);
      CHECK_FALSE(rep.find("H1")->witness.empty());
      CHECK(rep.find("H2")->passed);
    }
    SUBCASE("z0 = 0 fails H9") {
      const ModelSpec s = small_spec({{"model.z0", "0"}});
      const HypothesisReport rep = check_hypotheses(s, 2000, 1, nullptr);
      CHECK_FALSE(rep.find("H9")->passed);
      CHECK(rep.find("H4")->passed);
    }
    SUBCASE("all-zero weights fail H10") {
      CostHypothesisInput in;
      const HypothesisReport rep = check_hypotheses(small_spec(), 500, 1, &in);
      CHECK_FALSE(rep.find("H10")->passed);
    }
  }

  TEST_CASE("separation bounds") {
    SUBCASE("closed form: C2 = 0, C1 = 1, b = 2 inverts the logit") {
      const Potential pot{1.0, 0.0};
      const SeparationBounds sb = separation_bounds(pot, 2.0, 0.3, 0.6);
      CHECK(sb.root_low == doctest::Approx(0.119202922022117555940).epsilon(1e-9));
      CHECK(sb.root_high == doctest::Approx(0.880797077977882444060).epsilon(1e-9));
      CHECK(sb.r_low == sb.root_low);
      CHECK(sb.r_high == sb.root_high);
      CHECK(separation_sign_violation(pot, sb, 1000) <= 0.0);
    }
    SUBCASE("b = 0 brackets the initial range") {
      const Potential pot{1.0, 0.0};
      const SeparationBounds sb = separation_bounds(pot, 0.0, 0.2, 0.7);
      CHECK(sb.r_low <= 0.2);
      CHECK(sb.r_high >= 0.7);
      CHECK(sb.r_low < 0.5);
      CHECK(sb.r_high > 0.5);
      CHECK(separation_sign_violation(pot, sb, 1000) <= 0.0);
    }
    SUBCASE("tightening to the initial data") {
      const Potential pot{1.0, 0.0};
      const SeparationBounds sb = separation_bounds(pot, 2.0, 0.05, 0.95);
      CHECK(sb.r_low == 0.05);
      CHECK(sb.r_high == 0.95);
    }
    SUBCASE("C1 too small for b is infeasible, naming the condition") {
      const Potential pot{0.01, 0.0};
      // independent scan: beta + b stays positive on (1e-12, 0.4), so no admissible r_low exists
      bool positive = true;
      for (int k = 0; k <= 1000; ++k) {
        const double r = 1e-12 * std::pow(0.4 / 1e-12, k / 1000.0);
        positive = positive && pot.beta(r) + 2.0 > 0.0;
      }
      CHECK(positive);
      try {
        separation_bounds(pot, 2.0, 0.4, 0.6);
        FAIL("expected DomainError");
      } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("condition 3") != std::string::npos);
      }
    }
    SUBCASE("default model: sign conditions at 10^3 points") {
      const ModelSpec s = small_spec();
      const SeparationBounds sb = separation_bounds(s);
      CHECK(sb.b == doctest::Approx(s.iota_sup() + s.bounds.psi_max));
      CHECK(sb.r_low <= s.z0.min());
      CHECK(sb.r_high >= s.z0.max());
      CHECK(separation_sign_violation(s.potential, sb, 1000) <= 0.0);
    }
  }
}
