#pragma once

#include <vector>

#include "tumorctl/cost.hpp"
#include "tumorctl/linearized.hpp"

namespace tumorctl {

struct AdjointTrajectory {
  std::vector<ScalarField> q, r, s;
  std::vector<VectorField> v;
  std::vector<SymTensorField> eps_v;
};

/// Backward sweep of the continuous adjoint system, discretized with the
/// time-mirrored IMEX pattern: implicit diffusion for q, r, s (and the d3 term
/// for s), explicit couplings and cost residuals from the later time level.
AdjointTrajectory solve_adjoint(const StateTrajectory& traj, const LinearizedCoefficients& coeffs,
                                const CostSpec& cost, const ModelSpec& spec);

/// Both sides of the duality identity.
struct DualityPairing {
  double lhs = 0.0;  ///< int int (a4 h1 q + b4 h2 r)
  double rhs = 0.0;  ///< cost pairings with the linearized state
  double residual() const;
};

DualityPairing duality_pairing(const LinearizedTrajectory& lin, const AdjointTrajectory& adj,
                               const LinearizedCoefficients& coeffs, const StateTrajectory& traj,
                               const CostSpec& cost, const ModelSpec& spec, const Control& h);

/// |lhs - rhs| / (|lhs| + |rhs| + 1e-30).
double duality_residual(const LinearizedTrajectory& lin, const AdjointTrajectory& adj,
                        const LinearizedCoefficients& coeffs, const StateTrajectory& traj,
                        const CostSpec& cost, const ModelSpec& spec, const Control& h);

/// Per-node gamma(x, phi) and its phi derivative.
void eval_gamma(const ScalarField& phi, const ModelSpec& spec, ScalarField& gamma, ScalarField& gamma_phi);

}  // namespace tumorctl
