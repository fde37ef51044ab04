#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tumorctl/grid.hpp"
#include "tumorctl/model.hpp"
#include "tumorctl/solvers.hpp"

namespace tumorctl {

/// Drug controls (chi1, chi2), one field per time node, piecewise constant in
/// time: chi^n acts on the step t_n -> t_{n+1}.
struct Control {
  std::vector<ScalarField> chi1;
  std::vector<ScalarField> chi2;

  static Control constant(const Grid& g, std::size_t time_nodes, double c1, double c2);
  static Control zeros_like(const Control& other);

  std::size_t time_nodes() const { return chi1.size(); }
  const Grid& grid() const { return chi1.front().grid; }
  bool all_finite() const;
  double max_chi2() const;

  Control& operator+=(const Control& o);
  Control& operator-=(const Control& o);
  Control& operator*=(double s);
  friend Control operator+(Control a, const Control& b) { return a += b; }
  friend Control operator-(Control a, const Control& b) { return a -= b; }
  friend Control operator*(double s, Control a) { return a *= s; }
};

/// L2(Q) inner product with trapezoid weights in space and time.
double inner(const Control& a, const Control& b, double tau);
double norm_l2(const Control& a, double tau);

struct StateTrajectory {
  double tau = 0.0;
  std::vector<double> times;
  std::vector<ScalarField> phi;
  std::vector<ScalarField> sigma;
  std::vector<VectorField> u;
  std::vector<SymTensorField> eps_u;
  std::vector<ScalarField> z;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  const Grid& grid() const { return phi.front().grid; }
};

/// Monitors of one forward solve. Violations are recorded, never thrown.
struct SolveDiagnostics {
  double phi_clamp_max = 0.0;    ///< largest pre-clamp excursion outside [0, N]
  double sigma_clamp_max = 0.0;  ///< largest pre-clamp excursion outside [0, M]
  double sigma_cap = 0.0;        ///< monitored M (heuristic)
  double phi_post_violation = 0.0;
  double sigma_post_violation = 0.0;
  double z_min = 1.0;
  double z_max = 0.0;
  std::optional<SeparationBounds> separation;
  std::string separation_error;
  double separation_violation = 0.0;  ///< max excursion outside [r_low, r_high]
  double u_boundary_max = 0.0;
  long cg_iterations_total = 0;
  int cg_iterations_max = 0;
  long newton_iterations_total = 0;
  int newton_iterations_max = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string report() const;
};

struct ScalarStep {
  ScalarField value;
  double clamp = 0.0;
  int iterations = 0;
};

struct DisplacementStep {
  VectorField value;
  int iterations = 0;
};

struct DamageStep {
  ScalarField value;
  int newton_iterations = 0;
  int cg_iterations = 0;
  std::vector<double> residual_history;
};

/// (I - tau Lap_N) phi+ = phi + tau U(phi, sigma, z, chi1), then clamp to [0, N].
ScalarStep step_phi(const ScalarField& phi, const ScalarField& sigma, const ScalarField& z,
                    const ScalarField& chi1, double tau, const ModelSpec& spec);

/// (I - tau Lap_R) sigma+ = sigma + tau (chi2 S - K) + tau RobinSource(datum), clamp to [0, cap].
ScalarStep step_sigma(const ScalarField& sigma, const ScalarField& phi, const ScalarField& z,
                      const ScalarField& chi2, const ScalarField& boundary_datum, double tau,
                      double cap, const ModelSpec& spec);

/// Elasticity solver whose preconditioner matches (A/tau + B) at the initial state.
ElasticitySolver make_elasticity_solver(const ModelSpec& spec, double tau);

/// Per-node Lame coefficients A/tau + B(phi, z).
void viscous_lame(const ScalarField& phi, const ScalarField& z, double tau, const ModelSpec& spec,
                  Eigen::VectorXd& mu, Eigen::VectorXd& lam);

/// -div[(A/tau + B(phi+, z)) eps(u+)] = f - div[(A/tau) eps(u)] on Dirichlet-zero fields.
DisplacementStep step_u(const VectorField& u, const ScalarField& phi_new, const ScalarField& z,
                        const VectorField& force, double tau, const ModelSpec& spec,
                        const ElasticitySolver& solver);

/// Implicit damage step solved by damped Newton (sup-norm residual 1e-10, at
/// most 50 iterations; the step is halved until the iterate stays in (0,1)).
DamageStep step_z(const ScalarField& z, const ScalarField& phi_new, const SymTensorField& eps_new,
                  const ScalarField& iota, double tau, const ModelSpec& spec);

/// Forward sweep phi -> sigma -> u -> z over `steps` uniform steps of [0, T].
StateTrajectory solve_state(const Control& control, const ModelSpec& spec, int steps,
                            SolveDiagnostics* diagnostics = nullptr);

/// Discrete L2(0,T;V) norm of a state difference over all four components.
double state_distance(const StateTrajectory& a, const StateTrajectory& b);

}  // namespace tumorctl
