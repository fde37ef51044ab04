#pragma once

#include <memory>

#include <Eigen/Core>

#include "tumorctl/cg.hpp"
#include "tumorctl/grid.hpp"

namespace tumorctl {

inline constexpr double kLinearTolerance = 1e-10;

/// Iteration cap 10 * sqrt(unknowns).
int cg_iteration_cap(std::size_t unknowns);

enum class Boundary { neumann, robin };

/// Solves (I - tau L - tau diag(c)) x = b where L is the Neumann Laplacian or
/// the linear part of the Robin Laplacian. `c` may be empty (treated as zero).
/// The weighted system is symmetric. CG is preconditioned by a cached sparse
/// Cholesky factor of W (I - tau L), exact when `c` is empty, and warm-started
/// from `x`.
CgResult solve_implicit_diffusion(Boundary bc, double tau, const Eigen::VectorXd& c,
                                  const ScalarField& b, ScalarField& x, const char* label);

/// Variable-coefficient isotropic elasticity on Dirichlet-zero fields:
/// T(C eps(u)) = rhs with stress = 2 mu eps + lam tr(eps) I per node and T the
/// weighted transpose of sym_grad. PCG preconditioned by a Cholesky factor of
/// the constant-coefficient operator (mu_ref, lam_ref).
class ElasticitySolver {
 public:
  ElasticitySolver(const Grid& grid, double mu_ref, double lam_ref);
  ~ElasticitySolver();
  ElasticitySolver(ElasticitySolver&&) noexcept;
  ElasticitySolver& operator=(ElasticitySolver&&) noexcept;

  const Grid& grid() const { return grid_; }

  VectorField apply(const Eigen::VectorXd& mu, const Eigen::VectorXd& lam, const VectorField& u) const;

  /// `u` carries the initial guess in and the solution out; boundary values are zeroed.
  CgResult solve(const Eigen::VectorXd& mu, const Eigen::VectorXd& lam, const VectorField& rhs,
                 VectorField& u, double rel_tol = kLinearTolerance) const;

  /// Matrix of the constant-coefficient operator on interior unknowns (for tests).
  Eigen::MatrixXd reference_matrix_dense() const;
  Eigen::VectorXd gather(const VectorField& u) const;
  VectorField scatter(const Eigen::VectorXd& x) const;

 private:
  struct Factor;
  Grid grid_;
  std::vector<Eigen::Index> interior_;  // node index of each interior node
  std::unique_ptr<Factor> factor_;
};

/// Isotropic stress field 2 mu eps + lam tr(eps) I with per-node coefficients.
SymTensorField isotropic_stress(const Eigen::VectorXd& mu, const Eigen::VectorXd& lam,
                                const SymTensorField& eps);

/// Componentwise W * f (the weighted load of a body force).
VectorField weighted_load(const VectorField& f);

}  // namespace tumorctl
