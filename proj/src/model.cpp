#include "tumorctl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "tumorctl/errors.hpp"

namespace tumorctl {

double Potential::beta(double r) const {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("beta: argument outside (0,1)");
  return c1 * std::log(r / (1.0 - r));
}

double Potential::beta_prime(double r) const {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("beta': argument outside (0,1)");
  return c1 / (r * (1.0 - r));
}

double Potential::beta_second(double r) const {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("beta'': argument outside (0,1)");
  const double d = r * (1.0 - r);
  return c1 * (2.0 * r - 1.0) / (d * d);
}

// ---------------------------------------------------------------------------

namespace {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

class LogisticMaps final : public Nonlinearities {
 public:
  explicit LogisticMaps(const LogisticFamily& f) : f_(f) {}

  Eval2 p(double sigma, double z) const override {
    const double l = logistic(f_.p_shift + f_.eta_p * sigma - f_.p_z * z);
    const double dl = f_.p_star * l * (1.0 - l);
    return {f_.p_star * l, dl * f_.eta_p, -dl * f_.p_z};
  }

  Eval2 g(double sigma, double z) const override {
    const double l = logistic(f_.g_shift - f_.eta_g * sigma + f_.g_z * z);
    const double dl = f_.g_star * l * (1.0 - l);
    return {f_.g_star * l, -dl * f_.eta_g, dl * f_.g_z};
  }

  Eval2 k1(double phi, double z) const override {
    const double l = logistic(f_.k1_shift + f_.k1_phi * phi / f_.n_cap - f_.k1_z * z);
    const double dl = f_.k1_star * l * (1.0 - l);
    return {f_.k1_star * l, dl * f_.k1_phi / f_.n_cap, -dl * f_.k1_z};
  }

  Eval2 k2(double phi, double z) const override {
    if (!f_.k2_variable) return {f_.k2_star, 0.0, 0.0};
    const double span = f_.k2_star - f_.k2_low;
    const double l = logistic(f_.k2_shift + f_.k2_phi * phi / f_.n_cap + f_.k2_z * z);
    const double dl = span * l * (1.0 - l);
    return {f_.k2_low + span * l, dl * f_.k2_phi / f_.n_cap, dl * f_.k2_z};
  }

  Eval2 source(double phi, double z) const override {
    const double l = logistic(f_.s_shift + f_.eta_s * phi / f_.n_cap - f_.s_z * z);
    const double dl = f_.s_star * l * (1.0 - l);
    return {f_.s_star * l, dl * f_.eta_s / f_.n_cap, -dl * f_.s_z};
  }

  Lame elasticity(double phi, double z) const override {
    const double l = logistic(f_.a_b - f_.b_b * phi / f_.n_cap - f_.c_b * z);
    const double dl = l * (1.0 - l);
    const double dmu = f_.mu_max - f_.mu_min;
    const double dlam = f_.lam_max - f_.lam_min;
    Lame out;
    out.mu = f_.mu_min + dmu * l;
    out.lam = f_.lam_min + dlam * l;
    out.mu_phi = -dmu * dl * f_.b_b / f_.n_cap;
    out.mu_z = -dmu * dl * f_.c_b;
    out.lam_phi = -dlam * dl * f_.b_b / f_.n_cap;
    out.lam_z = -dlam * dl * f_.c_b;
    return out;
  }

  PsiEval psi(double phi, const Sym2& eps) const override {
    const double a = f_.a_psi / f_.n_cap;
    const double b = f_.b_psi;
    const double s = a * phi + b * eps.norm2();
    const double th = std::tanh(s);
    const double ps = f_.psi_max * (1.0 - th * th);
    const double pss = -2.0 * th * ps;
    PsiEval out;
    out.v = f_.psi_max * th;
    out.d_phi = ps * a;
    out.d_eps = eps * (2.0 * b * ps);
    // coordinates (e11, e22, e12) with |eps|^2 = e11^2 + e22^2 + 2 e12^2
    const std::array<double, 3> ds{2.0 * b * eps.e11, 2.0 * b * eps.e22, 4.0 * b * eps.e12};
    const std::array<double, 3> dds{2.0 * b, 2.0 * b, 4.0 * b};
    out.h_phiphi = pss * a * a;
    for (int c = 0; c < 3; ++c) {
      out.h_phieps[c] = pss * a * ds[c];
      for (int d = 0; d < 3; ++d)
        out.h_epseps[c][d] = pss * ds[c] * ds[d] + (c == d ? ps * dds[c] : 0.0);
    }
    return out;
  }

  Eval1 gamma(double phi) const override {
    const double l = logistic(f_.gamma_slope * (phi / f_.n_cap - 0.5));
    return {f_.gamma0 * l, f_.gamma0 * l * (1.0 - l) * f_.gamma_slope / f_.n_cap};
  }

 private:
  LogisticFamily f_;
};

}  // namespace

DeclaredBounds LogisticFamily::declared_bounds() const {
  DeclaredBounds b;
  b.p_star = p_star;
  b.g_star = g_star;
  b.k1_star = k1_star;
  b.k2_low = k2_variable ? k2_low : k2_star;
  b.k2_star = k2_star;
  b.s_star = s_star;
  b.mu_min = mu_min;
  b.mu_max = mu_max;
  b.lam_max = std::max(std::abs(lam_min), std::abs(lam_max));
  b.psi_max = psi_max;
  b.gamma_bound = gamma0 * (1.0 + 0.25 * std::abs(gamma_slope) / n_cap);
  return b;
}

std::shared_ptr<const Nonlinearities> LogisticFamily::make() const {
  return std::make_shared<LogisticMaps>(*this);
}

ScalarField ModelSpec::boundary_datum(double t) const {
  if (!sigma_gamma_profile) return sigma_gamma;
  ScalarField out = sigma_gamma;
  out.v *= sigma_gamma_profile(t);
  return out;
}

double ModelSpec::sigma_cap(double chi2_max) const {
  return std::max(m0, sigma0.max()) + t_final * std::max(chi2_max, 0.0) * bounds.s_star;
}

// ---------------------------------------------------------------------------

double eval_U(double phi, double sigma, double z, double chi1, const ModelSpec& spec) {
  const double n = spec.n_cap;
  return (spec.fn->p(sigma, z).v - chi1) * phi * (1.0 - phi / n) - phi * spec.fn->g(sigma, z).v;
}

double eval_K(double phi, double sigma, double z, const ModelSpec& spec) {
  const double k2 = spec.fn->k2(phi, z).v;
  if (!(k2 + sigma > 0.0)) throw DomainError("K: k2 + sigma must be positive");
  return spec.fn->k1(phi, z).v * sigma / (k2 + sigma);
}

Lame eval_B(double phi, double z, const ModelSpec& spec) { return spec.fn->elasticity(phi, z); }

PsiEval eval_Psi(double phi, const Sym2& eps, const ModelSpec& spec) { return spec.fn->psi(phi, eps); }

ReactionPartials reaction_partials(double phi, double sigma, double z, double chi1,
                                   const ModelSpec& spec) {
  const double n = spec.n_cap;
  const Eval2 p = spec.fn->p(sigma, z);
  const Eval2 g = spec.fn->g(sigma, z);
  const Eval2 k1 = spec.fn->k1(phi, z);
  const Eval2 k2 = spec.fn->k2(phi, z);
  const Eval2 s = spec.fn->source(phi, z);
  const double logi = phi * (1.0 - phi / n);
  const double den = k2.v + sigma;
  ReactionPartials r{};
  r.u_phi = (p.v - chi1) * (1.0 - 2.0 * phi / n) - g.v;
  r.u_sigma = p.d1 * logi - phi * g.d1;
  r.u_z = p.d2 * logi - phi * g.d2;
  r.u_chi1 = -logi;
  r.k_phi = k1.d1 * sigma / den - k1.v * sigma * k2.d1 / (den * den);
  r.k_sigma = k1.v / den - k1.v * sigma / (den * den);
  r.k_z = k1.d2 * sigma / den - k1.v * sigma * k2.d2 / (den * den);
  r.s = s.v;
  r.s_phi = s.d1;
  r.s_z = s.d2;
  return r;
}

// ---------------------------------------------------------------------------

bool HypothesisReport::all_passed() const {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

const HypothesisResult* HypothesisReport::find(const std::string& id) const {
  for (const auto& r : results)
    if (r.id == id) return &r;
  return nullptr;
}

std::string HypothesisReport::summary() const {
  std::ostringstream os;
  for (const auto& r : results) {
    os << r.id << ' ' << (r.passed ? "pass" : "FAIL") << "  " << r.description;
    if (!r.passed) os << "  worst=" << r.worst << " at " << r.witness;
    os << '\n';
  }
  return os.str();
}

namespace {

// Accumulates violations for one hypothesis, keeping the worst witness.
class Tally {
 public:
  Tally(std::string id, std::string description) {
    r_.id = std::move(id);
    r_.description = std::move(description);
  }
  template <typename W>
  void check(double violation, W&& witness) {
    if (!(violation <= 0.0)) {  // also catches NaN
      const double mag = std::isnan(violation) ? std::numeric_limits<double>::infinity() : violation;
      if (r_.passed || mag > r_.worst) {
        r_.worst = mag;
        r_.witness = witness();
      }
      r_.passed = false;
    }
  }
  HypothesisResult done() { return std::move(r_); }

 private:
  HypothesisResult r_;
};

std::string pt(std::initializer_list<std::pair<const char*, double>> xs) {
  std::ostringstream os;
  os.precision(6);
  bool first = true;
  for (const auto& [k, v] : xs) {
    os << (first ? "" : ", ") << k << '=' << v;
    first = false;
  }
  return os.str();
}

// Relative mismatch between an analytic derivative and a central difference.
template <typename F>
double fd_mismatch(F&& f, double x, double analytic, double h = 0.0) {
  if (h == 0.0) h = 1e-6 * std::max(1.0, std::abs(x));
  const double fd = (f(x + h) - f(x - h)) / (2.0 * h);
  return std::abs(fd - analytic) - 1e-5 * (1.0 + std::abs(analytic));
}

}  // namespace

HypothesisReport check_hypotheses(const ModelSpec& spec, int sample_budget, std::uint64_t seed,
                                  const CostHypothesisInput* cost) {
  HypothesisReport report;
  std::mt19937_64 rng(seed);
  const DeclaredBounds& b = spec.bounds;
  const Nonlinearities& fn = *spec.fn;
  const double n = spec.n_cap;
  const double sig_hi = 10.0 + 2.0 * spec.m0;
  std::uniform_real_distribution<double> u_sigma(-10.0, sig_hi);
  std::uniform_real_distribution<double> u_z(-1.0, 2.0);
  std::uniform_real_distribution<double> u_phi(-2.0 * n, 3.0 * n);
  std::uniform_real_distribution<double> u_eps(-1.0, 1.0);
  std::uniform_real_distribution<double> u_unit(1e-6, 1.0 - 1e-6);
  const int budget = std::max(sample_budget, 1);

  {
    Tally t("H1", "0 <= p <= p*, 0 <= g <= g*, p and g C^1 with bounded slopes, N > 0");
    t.check(n > 0.0 ? 0.0 : 1.0 - n, [&] { return pt({{"N", n}}); });
    for (int s = 0; s < budget; ++s) {
      const double sg = u_sigma(rng), z = u_z(rng);
      const Eval2 p = fn.p(sg, z), g = fn.g(sg, z);
      auto w = [&] { return pt({{"sigma", sg}, {"z", z}, {"p", p.v}, {"g", g.v}}); };
      t.check(std::max(-p.v, p.v - b.p_star), w);
      t.check(std::max(-g.v, g.v - b.g_star), w);
      t.check(fd_mismatch([&](double x) { return fn.p(x, z).v; }, sg, p.d1), w);
      t.check(fd_mismatch([&](double x) { return fn.p(sg, x).v; }, z, p.d2), w);
      t.check(fd_mismatch([&](double x) { return fn.g(x, z).v; }, sg, g.d1), w);
      t.check(fd_mismatch([&](double x) { return fn.g(sg, x).v; }, z, g.d2), w);
    }
    report.results.push_back(t.done());
  }
  {
    Tally t("H2", "0 <= k1 <= k1*, 0 < k2_low <= k2 <= k2*, 0 <= S <= S*, C^1");
    t.check(b.k2_low > 0.0 ? 0.0 : 1.0, [&] { return pt({{"k2_low", b.k2_low}}); });
    for (int s = 0; s < budget; ++s) {
      const double ph = u_phi(rng), z = u_z(rng);
      const Eval2 k1 = fn.k1(ph, z), k2 = fn.k2(ph, z), sv = fn.source(ph, z);
      auto w = [&] { return pt({{"phi", ph}, {"z", z}, {"k1", k1.v}, {"k2", k2.v}, {"S", sv.v}}); };
      t.check(std::max(-k1.v, k1.v - b.k1_star), w);
      t.check(std::max(b.k2_low - k2.v, k2.v - b.k2_star), w);
      t.check(std::max(-sv.v, sv.v - b.s_star), w);
      t.check(fd_mismatch([&](double x) { return fn.k1(x, z).v; }, ph, k1.d1), w);
      t.check(fd_mismatch([&](double x) { return fn.k1(ph, x).v; }, z, k1.d2), w);
      t.check(fd_mismatch([&](double x) { return fn.k2(x, z).v; }, ph, k2.d1), w);
      t.check(fd_mismatch([&](double x) { return fn.k2(ph, x).v; }, z, k2.d2), w);
      t.check(fd_mismatch([&](double x) { return fn.source(x, z).v; }, ph, sv.d1), w);
      t.check(fd_mismatch([&](double x) { return fn.source(ph, x).v; }, z, sv.d2), w);
    }
    report.results.push_back(t.done());
  }
  {
    Tally t("H3", "A constant positive definite; B bounded, positive definite, C^1; f bounded");
    t.check(-spec.a_mu, [&] { return pt({{"A_mu", spec.a_mu}}); });
    t.check(-(spec.a_mu + spec.a_lam), [&] { return pt({{"A_mu", spec.a_mu}, {"A_lam", spec.a_lam}}); });
    t.check(b.mu_min > 0.0 ? 0.0 : 1.0, [&] { return pt({{"mu_min", b.mu_min}}); });
    t.check(spec.force.all_finite() ? 0.0 : 1.0, [] { return std::string("non-finite body force"); });
    for (int s = 0; s < budget; ++s) {
      const double ph = u_phi(rng), z = u_z(rng);
      const Lame l = fn.elasticity(ph, z);
      auto w = [&] { return pt({{"phi", ph}, {"z", z}, {"mu", l.mu}, {"lam", l.lam}}); };
      t.check(std::max(b.mu_min - l.mu, l.mu - b.mu_max), w);
      t.check(-(l.mu + l.lam), w);
      t.check(std::abs(l.lam) - b.lam_max, w);
      t.check(fd_mismatch([&](double x) { return fn.elasticity(x, z).mu; }, ph, l.mu_phi), w);
      t.check(fd_mismatch([&](double x) { return fn.elasticity(ph, x).mu; }, z, l.mu_z), w);
      t.check(fd_mismatch([&](double x) { return fn.elasticity(x, z).lam; }, ph, l.lam_phi), w);
      t.check(fd_mismatch([&](double x) { return fn.elasticity(ph, x).lam; }, z, l.lam_z), w);
    }
    report.results.push_back(t.done());
  }
  {
    Tally t("H4", "beta = C1 ln(r/(1-r)) is monotone with -inf/+inf limits (C1 > 0)");
    t.check(spec.potential.c1 > 0.0 ? 0.0 : 1.0, [&] { return pt({{"C1", spec.potential.c1}}); });
    if (spec.potential.c1 > 0.0) {
      for (int s = 0; s < budget; ++s) {
        const double r = u_unit(rng);
        auto w = [&] { return pt({{"r", r}}); };
        t.check(-spec.potential.beta_prime(r), w);
        // step shrinks with the distance to the logarithmic singularities
        t.check(fd_mismatch([&](double x) { return spec.potential.beta(x); }, r,
                            spec.potential.beta_prime(r), 1e-4 * std::min(r, 1.0 - r)) /
                    std::max(1.0, spec.potential.beta_prime(r)),
                w);
      }
    }
    report.results.push_back(t.done());
  }
  {
    Tally t("H5", "pi = -2 C2 r Lipschitz with concave primitive (C2 >= 0)");
    t.check(-spec.potential.c2, [&] { return pt({{"C2", spec.potential.c2}}); });
    t.check(std::isfinite(spec.potential.c2) ? 0.0 : 1.0, [&] { return pt({{"C2", spec.potential.c2}}); });
    report.results.push_back(t.done());
  }
  {
    Tally t("H6", "iota bounded (constant in time)");
    t.check(spec.iota.all_finite() ? 0.0 : 1.0, [] { return std::string("non-finite iota"); });
    report.results.push_back(t.done());
  }
  {
    Tally t("H7", "|Psi| <= Psi_max, Psi Lipschitz with bounded derivatives");
    for (int s = 0; s < budget; ++s) {
      const double ph = u_phi(rng);
      const Sym2 e{u_eps(rng), u_eps(rng), u_eps(rng)};
      const PsiEval ps = fn.psi(ph, e);
      auto w = [&] { return pt({{"phi", ph}, {"e11", e.e11}, {"e22", e.e22}, {"e12", e.e12}}); };
      t.check(std::abs(ps.v) - b.psi_max, w);
      t.check(ps.d_eps.norm2() + ps.d_phi * ps.d_phi < 1e12 ? 0.0 : 1.0, w);
      t.check(fd_mismatch([&](double x) { return fn.psi(x, e).v; }, ph, ps.d_phi), w);
      const Sym2 dir{u_eps(rng), u_eps(rng), u_eps(rng)};
      t.check(fd_mismatch([&](double x) { return fn.psi(ph, e + dir * x).v; }, 0.0, ps.d_eps.dot(dir)), w);
    }
    report.results.push_back(t.done());
  }
  {
    Tally t("H8", "0 <= sigma_Gamma <= M0 on the boundary");
    const Grid& g = spec.sigma_gamma.grid;
    const int tsamples = spec.sigma_gamma_profile ? 64 : 1;
    for (int ts = 0; ts < tsamples; ++ts) {
      const double time = tsamples > 1 ? spec.t_final * ts / (tsamples - 1) : 0.0;
      const ScalarField d = spec.boundary_datum(time);
      for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) {
          if (!g.on_boundary(i, j)) continue;
          const double v = d(i, j);
          t.check(std::max(-v, v - spec.m0),
                  [&] { return pt({{"x", g.x(i)}, {"y", g.y(j)}, {"t", time}, {"sigma_Gamma", v}}); });
        }
    }
    report.results.push_back(t.done());
  }
  {
    Tally t("H9", "0 <= phi0 <= N, 0 <= sigma0 <= M0, u0 = 0 on boundary, 0 < inf z0, sup z0 < 1");
    t.check(std::max(-spec.phi0.min(), spec.phi0.max() - n),
            [&] { return pt({{"min phi0", spec.phi0.min()}, {"max phi0", spec.phi0.max()}}); });
    t.check(std::max(-spec.sigma0.min(), spec.sigma0.max() - spec.m0),
            [&] { return pt({{"min sigma0", spec.sigma0.min()}, {"max sigma0", spec.sigma0.max()}}); });
    t.check(spec.u0.max_abs_on_boundary(), [&] { return pt({{"max |u0| on boundary", spec.u0.max_abs_on_boundary()}}); });
    const double zi = spec.z0.min(), zs = spec.z0.max();
    auto wz = [&] { return pt({{"inf z0", zi}, {"sup z0", zs}}); };
    t.check(zi > 0.0 ? 0.0 : std::max(-zi, 1e-300), wz);
    t.check(zs < 1.0 ? 0.0 : std::max(zs - 1.0, 1e-300), wz);
    report.results.push_back(t.done());
  }
  {
    Tally t("H10", "cost weights nonnegative and not all zero");
    if (cost) {
      double sum = 0.0;
      for (int a = 0; a < 9; ++a) {
        t.check(-cost->alpha[static_cast<std::size_t>(a)], [&] {
          return "alpha" + std::to_string(a + 1) + "=" + std::to_string(cost->alpha[static_cast<std::size_t>(a)]);
        });
        sum += std::abs(cost->alpha[static_cast<std::size_t>(a)]);
      }
      t.check(sum > 0.0 ? 0.0 : 1.0, [] { return std::string("all weights vanish"); });
    }
    report.results.push_back(t.done());
  }
  {
    Tally t("H11", "targets square integrable (finite)");
    if (cost) t.check(cost->targets_finite ? 0.0 : 1.0, [] { return std::string("non-finite target"); });
    report.results.push_back(t.done());
  }
  {
    Tally t("H12", "gamma >= 0 with |gamma| + |gamma'| <= C_gamma on [0, N]");
    const double wmax = spec.gamma_weight.v.size() ? spec.gamma_weight.max() : 1.0;
    const double wmin = spec.gamma_weight.v.size() ? spec.gamma_weight.min() : 1.0;
    t.check(-wmin, [&] { return pt({{"min gamma weight", wmin}}); });
    std::uniform_real_distribution<double> u_phys(0.0, n);
    for (int s = 0; s < budget; ++s) {
      const double ph = u_phys(rng);
      const Eval1 gv = fn.gamma(ph);
      auto w = [&] { return pt({{"phi", ph}, {"gamma", gv.v}, {"gamma'", gv.d}}); };
      t.check(-gv.v, w);
      t.check(wmax * (std::abs(gv.v) + std::abs(gv.d)) - b.gamma_bound, w);
      t.check(fd_mismatch([&](double x) { return fn.gamma(x).v; }, ph, gv.d), w);
    }
    report.results.push_back(t.done());
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

// First sign change of f from <= 0 to > 0 scanning upward from lo; returns hi if none.
template <typename F>
double first_upcrossing(F&& f, double lo, double hi) {
  constexpr int kScan = 4000;
  double prev = lo;
  for (int k = 1; k <= kScan; ++k) {
    // geometric near the left end, linear elsewhere
    const double s = static_cast<double>(k) / kScan;
    const double r = k < kScan / 2 ? lo * std::pow((0.5 * (lo + hi)) / lo, 2.0 * s)
                                   : 0.5 * (lo + hi) + (2.0 * s - 1.0) * 0.5 * (hi - lo);
    if (f(r) > 0.0) {
      double a = prev, c = r;
      while (c - a > 1e-13) {
        const double m = 0.5 * (a + c);
        (f(m) > 0.0 ? c : a) = m;
      }
      return a;
    }
    prev = r;
  }
  return hi;
}

}  // namespace

SeparationBounds separation_bounds(const Potential& pot, double b, double z0_inf, double z0_sup) {
  if (!(pot.c1 > 0.0)) throw DomainError("separation: C1 must be positive");
  if (!(z0_inf > 0.0 && z0_sup < 1.0 && z0_inf <= z0_sup))
    throw DomainError("separation: initial damage must lie strictly inside (0,1)");
  const double lo = kSeparationFloor;
  const double hi = 1.0 - kSeparationFloor;
  auto h = [&](double r) { return pot.beta(r) + pot.pi(r); };

  if (h(lo) + b > 0.0)
    throw DomainError("separation: condition 3 infeasible (beta + pi + b > 0 already at r = " +
                      std::to_string(lo) + ")");
  if (h(hi) - b < 0.0)
    throw DomainError("separation: condition 4 infeasible (beta + pi - b < 0 still at r = 1 - " +
                      std::to_string(lo) + ")");

  SeparationBounds out;
  out.b = b;
  out.root_low = first_upcrossing([&](double r) { return h(r) + b; }, lo, hi);
  // mirror: scan downward from 1 for the last point where h - b < 0
  out.root_high = 1.0 - first_upcrossing([&](double s) { return -(h(1.0 - s) - b); }, lo, hi);
  out.r_low = std::min(out.root_low, z0_inf);
  out.r_high = std::max(out.root_high, z0_sup);
  if (out.r_low > out.r_high)
    throw DomainError("separation: lower bound exceeds upper bound");
  return out;
}

SeparationBounds separation_bounds(const ModelSpec& spec) {
  return separation_bounds(spec.potential, spec.iota_sup() + spec.bounds.psi_max, spec.z0.min(),
                           spec.z0.max());
}

double separation_sign_violation(const Potential& pot, const SeparationBounds& sb, int samples) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double s = (k + 0.5) / samples;
    const double rl = sb.r_low * s;
    worst = std::max(worst, pot.beta(rl) + pot.pi(rl) + sb.b);
    const double rh = sb.r_high + (1.0 - sb.r_high) * s;
    if (rh < 1.0) worst = std::max(worst, -(pot.beta(rh) + pot.pi(rh) - sb.b));
  }
  return worst;
}

}  // namespace tumorctl
