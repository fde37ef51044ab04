#pragma once

#include <vector>

#include "tumorctl/state.hpp"

namespace tumorctl {

/// Frozen coefficients of the linearized system, one entry per time node.
///
/// Node k holds the derivatives that the discrete step ending at t_k uses:
/// reaction coefficients at (phi^k, sigma^k, z^k, chi^k); the elasticity terms
/// c1, c2 and the viscous Lame pair at (phi^k, z^{k-1}) contracted with
/// eps(u^k); the damage terms d1, d2, d3 at (phi^k, eps(u^k), z^k). Node 0 uses
/// z^0 in place of z^{-1}.
struct LinearizedCoefficients {
  double tau = 0.0;
  std::vector<ScalarField> a1, a2, a3, a4;
  std::vector<ScalarField> b1, b2, b3, b4;
  std::vector<SymTensorField> c1, c2;
  std::vector<ScalarField> d1;
  std::vector<SymTensorField> d2;
  std::vector<ScalarField> d3;
  /// A/tau + B at node k, per grid node (shared with the adjoint elasticity).
  std::vector<Eigen::VectorXd> mu, lam;

  std::size_t time_nodes() const { return a1.size(); }
};

/// Throws std::runtime_error naming the coefficient and node if any entry is not finite.
LinearizedCoefficients assemble_coefficients(const StateTrajectory& traj, const Control& control,
                                             const ModelSpec& spec);

struct LinearizedTrajectory {
  std::vector<ScalarField> xi, rho, zeta;
  std::vector<VectorField> omega;
  std::vector<SymTensorField> eps_omega;
};

/// Marches the linearized system with the same IMEX pattern as solve_state;
/// zero initial data, Robin with zero datum for rho.
LinearizedTrajectory solve_linearized(const LinearizedCoefficients& coeffs, const Control& h,
                                      const ModelSpec& spec);

/// sqrt(sum_k w_k ||a^k - b^k - scale * d^k||^2_V) over (phi, sigma, u, z); `d`
/// may be null.
double remainder_norm(const StateTrajectory& a, const StateTrajectory& b,
                      const LinearizedTrajectory* d, double scale);

double norm_l2v(const LinearizedTrajectory& lin, double tau);

struct TaylorResult {
  std::vector<double> epsilons;
  std::vector<double> remainder;    ///< ||S(chi + e h) - S(chi) - e Dh||
  std::vector<double> first_order;  ///< ||S(chi + e h) - S(chi)||
  double slope = 0.0;
  double first_order_slope = 0.0;
};

/// Least-squares slope of log y against log x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

TaylorResult taylor_test(const Control& control, const Control& h, const std::vector<double>& epsilons,
                         const ModelSpec& spec, int steps);

}  // namespace tumorctl
