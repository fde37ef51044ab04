#pragma once

#include <array>
#include <vector>

#include "tumorctl/model.hpp"

namespace tumorctl {

/// Reference solution of the spatially homogeneous reduction of the state
/// system (phi, sigma, z with u = 0), integrated with an adaptive
/// Dormand-Prince method at tight tolerances. Valid when the initial data,
/// iota and the controls are constant in space, f = 0, u0 = 0, and the
/// boundary lactate follows the homogeneous sigma(t).
class HomogeneousOracle {
 public:
  using State = std::array<double, 3>;

  HomogeneousOracle(const ModelSpec& spec, State y0, double iota, double chi1, double chi2,
                    int samples = 4096);

  /// Cubic Hermite interpolation between stored samples.
  State at(double t) const;
  State rhs(const State& y) const;

  double t_final() const { return t_final_; }
  /// max |y''| over the samples.
  double second_derivative_bound() const { return m2_; }
  /// max of the infinity norm of the Jacobian over the samples.
  double lipschitz() const { return lipschitz_; }
  /// C = M2 / (2L) (exp(L T) - 1): global first-order error scale, error <~ C tau.
  double error_constant() const;

 private:
  const ModelSpec* spec_;
  double iota_, chi1_, chi2_, t_final_;
  std::vector<State> y_, dy_;
  double dt_ = 0.0;
  double m2_ = 0.0;
  double lipschitz_ = 0.0;
};

/// Checks that the model data are spatially homogeneous and returns the
/// constants (phi0, sigma0, z0, iota); throws std::invalid_argument otherwise.
HomogeneousOracle::State homogeneous_initial_state(const ModelSpec& spec, double* iota);

}  // namespace tumorctl
