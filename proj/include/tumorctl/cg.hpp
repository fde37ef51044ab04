#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "tumorctl/errors.hpp"

namespace tumorctl {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradient for a symmetric positive definite
/// operator. `apply(x)` returns A x, `precondition(r)` returns M^{-1} r.
/// `x` holds the initial guess on entry. Convergence is ||b - A x|| <=
/// rel_tol * ||b||; anything else after max_iter steps throws SolverError.
template <typename Apply, typename Precondition>
CgResult pcg(Apply&& apply, Precondition&& precondition, const Eigen::VectorXd& b,
             Eigen::VectorXd& x, double rel_tol, int max_iter, const char* label = "cg") {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return {0, 0.0};
  }
  Eigen::VectorXd r = b - apply(x);
  double rnorm = r.norm();
  if (rnorm <= rel_tol * bnorm) return {0, rnorm / bnorm};
  Eigen::VectorXd z = precondition(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0))
      throw SolverError(std::string(label) + ": operator not positive definite along search direction");
    const double alpha = rz / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    rnorm = r.norm();
    if (rnorm <= rel_tol * bnorm) return {it, rnorm / bnorm};
    z = precondition(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverError(std::string(label) + ": no convergence in " + std::to_string(max_iter) +
                    " iterations (relative residual " + std::to_string(rnorm / bnorm) + ")");
}

}  // namespace tumorctl
