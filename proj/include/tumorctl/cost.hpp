#pragma once

#include <array>
#include <vector>

#include "tumorctl/grid.hpp"

namespace tumorctl {

/// Weights alpha_1..alpha_9 and targets of the tracking cost.
struct CostSpec {
  std::array<double, 9> alpha{};
  std::vector<ScalarField> phi_q, sigma_q, z_q;  ///< one per time node
  ScalarField phi_omega, sigma_omega;

  /// alpha_i with 1-based numbering.
  double a(int i) const { return alpha.at(static_cast<std::size_t>(i - 1)); }
  double& a(int i) { return alpha.at(static_cast<std::size_t>(i - 1)); }

  /// Zero targets on `time_nodes` nodes and zero weights.
  static CostSpec zero(const Grid& g, std::size_t time_nodes);

  /// Throws ConfigError on negative weights, non-finite targets, or target
  /// shapes that do not match the grid and time nodes. All-zero weights are
  /// allowed here (the zero cost is a valid test case); H10 reports them.
  void validate(const Grid& g, std::size_t time_nodes) const;
};

}  // namespace tumorctl
