#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tumorctl/grid.hpp"

namespace tumorctl {

/// Value of a map R^2 -> R with both first partials.
struct Eval2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Value of a scalar map with its first derivative.
struct Eval1 {
  double v = 0.0;
  double d = 0.0;
};

/// Symmetric 2x2 tensor (e11, e22, e12) at a single node.
struct Sym2 {
  double e11 = 0.0;
  double e22 = 0.0;
  double e12 = 0.0;

  double trace() const { return e11 + e22; }
  /// Frobenius product A:B.
  double dot(const Sym2& o) const { return e11 * o.e11 + e22 * o.e22 + 2.0 * e12 * o.e12; }
  double norm2() const { return dot(*this); }
  Sym2 operator*(double s) const { return {e11 * s, e22 * s, e12 * s}; }
  Sym2 operator+(const Sym2& o) const { return {e11 + o.e11, e22 + o.e22, e12 + o.e12}; }
};

inline Sym2 at(const SymTensorField& f, Eigen::Index k) { return {f.e11[k], f.e22[k], f.e12[k]}; }
inline void put(SymTensorField& f, Eigen::Index k, const Sym2& s) {
  f.e11[k] = s.e11;
  f.e22[k] = s.e22;
  f.e12[k] = s.e12;
}

/// Lame pair of an isotropic tensor (stress = 2 mu eps + lam tr(eps) I) and
/// partials with respect to (phi, z).
struct Lame {
  double mu = 0.0;
  double lam = 0.0;
  double mu_phi = 0.0;
  double mu_z = 0.0;
  double lam_phi = 0.0;
  double lam_z = 0.0;

  Sym2 stress(const Sym2& eps) const { return isotropic_stress(mu, lam, eps); }
  Sym2 stress_phi(const Sym2& eps) const { return isotropic_stress(mu_phi, lam_phi, eps); }
  Sym2 stress_z(const Sym2& eps) const { return isotropic_stress(mu_z, lam_z, eps); }

  static Sym2 isotropic_stress(double mu, double lam, const Sym2& eps) {
    const double tr = lam * eps.trace();
    return {2.0 * mu * eps.e11 + tr, 2.0 * mu * eps.e22 + tr, 2.0 * mu * eps.e12};
  }
};

/// Psi(phi, eps) with gradient and Hessian blocks. Tensor derivatives use the
/// matrix-entry convention, so dPsi = d_phi dphi + d_eps : deps. The Hessian
/// blocks are taken with respect to the coordinates (phi, e11, e22, e12).
struct PsiEval {
  double v = 0.0;
  double d_phi = 0.0;
  Sym2 d_eps;
  double h_phiphi = 0.0;
  std::array<double, 3> h_phieps{};
  std::array<std::array<double, 3>, 3> h_epseps{};
};

/// Logarithmic potential C1 [r ln r + (1-r) ln(1-r)] - C2 r^2, split into the
/// monotone part beta and the Lipschitz part pi.
struct Potential {
  double c1 = 1.0;
  double c2 = 0.0;

  /// C1 ln(r / (1 - r)); throws DomainError outside (0, 1).
  double beta(double r) const;
  double beta_prime(double r) const;
  double beta_second(double r) const;
  double pi(double r) const { return -2.0 * c2 * r; }
  double pi_prime(double /*r*/) const { return -2.0 * c2; }
};

/// The constitutive maps of the model. Implementations must be pure.
class Nonlinearities {
 public:
  virtual ~Nonlinearities() = default;
  /// Proliferation p(sigma, z).
  virtual Eval2 p(double sigma, double z) const = 0;
  /// Death rate g(sigma, z).
  virtual Eval2 g(double sigma, double z) const = 0;
  virtual Eval2 k1(double phi, double z) const = 0;
  virtual Eval2 k2(double phi, double z) const = 0;
  /// Lactate source S(phi, z).
  virtual Eval2 source(double phi, double z) const = 0;
  virtual Lame elasticity(double phi, double z) const = 0;
  virtual PsiEval psi(double phi, const Sym2& eps) const = 0;
  /// phi-dependent factor of gamma; the spatial factor lives in ModelSpec.
  virtual Eval1 gamma(double phi) const = 0;
};

/// Declared constants of the hypotheses; check_hypotheses samples against them.
struct DeclaredBounds {
  double p_star = 0.0;
  double g_star = 0.0;
  double k1_star = 0.0;
  double k2_low = 0.0;
  double k2_star = 0.0;
  double s_star = 0.0;
  double mu_min = 0.0;
  double mu_max = 0.0;
  double lam_max = 0.0;
  double psi_max = 0.0;
  double gamma_bound = 0.0;
};

/// Shape parameters of the default logistic/tanh instantiation. All maps are
/// L(x) = 1 / (1 + exp(-x)) scaled into their declared ranges.
struct LogisticFamily {
  double n_cap = 1.0;

  // p = p_star L(p_shift + eta_p sigma - p_z z)
  double p_star = 2.0, eta_p = 1.0, p_shift = 0.0, p_z = 1.0;
  // g = g_star L(g_shift - eta_g sigma + g_z z)
  double g_star = 0.3, eta_g = 0.5, g_shift = -1.0, g_z = 2.0;
  // k1 = k1_star L(k1_shift + k1_phi phi/N - k1_z z)
  double k1_star = 0.5, k1_shift = 0.0, k1_phi = 1.0, k1_z = 0.5;
  // k2 = k2_star, or k2_low + (k2_star - k2_low) L(k2_shift + k2_phi phi/N + k2_z z)
  bool k2_variable = false;
  double k2_low = 1.0, k2_star = 1.0, k2_shift = 0.0, k2_phi = 1.0, k2_z = 1.0;
  // S = s_star L(s_shift + eta_s phi/N - s_z z)
  double s_star = 1.0, eta_s = 2.0, s_shift = -1.0, s_z = 1.0;
  // mu = mu_min + (mu_max - mu_min) L(a_b - b_b phi/N - c_b z), lam likewise
  double mu_min = 0.5, mu_max = 1.5, lam_min = 0.2, lam_max = 0.8;
  double a_b = 0.5, b_b = 1.0, c_b = 2.0;
  // Psi = psi_max tanh(a_psi phi/N + b_psi |eps|^2)
  double psi_max = 0.5, a_psi = 1.0, b_psi = 20.0;
  // gamma(phi) = gamma0 L(gamma_slope (phi/N - 1/2))
  double gamma0 = 1.0, gamma_slope = 2.0;

  DeclaredBounds declared_bounds() const;
  std::shared_ptr<const Nonlinearities> make() const;
};

/// Every nonlinearity, constant and datum of the state system.
struct ModelSpec {
  Grid grid;
  std::shared_ptr<const Nonlinearities> fn;
  DeclaredBounds bounds;
  double n_cap = 1.0;
  double a_mu = 1.0;
  double a_lam = 0.5;
  Potential potential;
  double m0 = 1.0;
  double t_final = 1.0;

  VectorField force;
  ScalarField iota;
  ScalarField sigma_gamma;
  /// Optional time factor: the boundary datum at time t is profile(t) * sigma_gamma.
  std::function<double(double)> sigma_gamma_profile;
  /// Spatial factor of gamma(x, phi) = gamma_weight(x) * fn->gamma(phi).
  ScalarField gamma_weight;

  ScalarField phi0;
  ScalarField sigma0;
  VectorField u0;
  ScalarField z0;

  ScalarField boundary_datum(double t) const;
  double iota_sup() const { return iota.v.cwiseAbs().maxCoeff(); }
  /// Monitored lactate cap max(M0, max sigma0) + T chi2_max S_star (heuristic).
  double sigma_cap(double chi2_max) const;
};

double eval_U(double phi, double sigma, double z, double chi1, const ModelSpec& spec);
/// Throws DomainError when k2 + sigma <= 0.
double eval_K(double phi, double sigma, double z, const ModelSpec& spec);
Lame eval_B(double phi, double z, const ModelSpec& spec);
PsiEval eval_Psi(double phi, const Sym2& eps, const ModelSpec& spec);

/// Pointwise partial derivatives of U, K and chi2 S used by the linearization.
struct ReactionPartials {
  double u_phi, u_sigma, u_z, u_chi1;
  double k_phi, k_sigma, k_z;
  double s, s_phi, s_z;
};
ReactionPartials reaction_partials(double phi, double sigma, double z, double chi1,
                                   const ModelSpec& spec);

// ---------------------------------------------------------------------------

struct HypothesisResult {
  std::string id;
  std::string description;
  bool passed = true;
  double worst = 0.0;
  std::string witness;
};

struct HypothesisReport {
  std::vector<HypothesisResult> results;
  bool all_passed() const;
  const HypothesisResult* find(const std::string& id) const;
  std::string summary() const;
};

/// Optional cost-side data for the cost hypotheses (weights and targets).
struct CostHypothesisInput {
  std::array<double, 9> alpha{};
  bool targets_finite = true;
};

/// Samples every bound, sign, monotonicity and derivative condition on
/// randomized arguments; reports per hypothesis with the worst witness.
HypothesisReport check_hypotheses(const ModelSpec& spec, int sample_budget, std::uint64_t seed,
                                  const CostHypothesisInput* cost = nullptr);

// ---------------------------------------------------------------------------

struct SeparationBounds {
  double r_low = 0.0;
  double r_high = 1.0;
  /// Roots of beta + pi = -b and beta + pi = +b before tightening.
  double root_low = 0.0;
  double root_high = 1.0;
  double b = 0.0;
};

/// Smallest r resolvable by the root finder; roots below it count as infeasible.
inline constexpr double kSeparationFloor = 1e-12;

SeparationBounds separation_bounds(const Potential& pot, double b, double z0_inf, double z0_sup);
/// Uses b = sup|iota| + psi_max and the initial damage range.
SeparationBounds separation_bounds(const ModelSpec& spec);

/// Largest violation of the sign conditions over `samples` points per interval
/// (<= 0 means they hold).
double separation_sign_violation(const Potential& pot, const SeparationBounds& sb, int samples);

}  // namespace tumorctl
