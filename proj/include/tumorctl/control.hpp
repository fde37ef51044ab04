#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tumorctl/adjoint.hpp"
#include "tumorctl/cost.hpp"
#include "tumorctl/state.hpp"

namespace tumorctl {

/// The nine addends of the cost; `total` is their sum.
struct CostTerms {
  std::array<double, 9> term{};
  double total = 0.0;
};

CostTerms eval_cost_terms(const StateTrajectory& traj, const Control& control, const CostSpec& cost,
                          const ModelSpec& spec);
double eval_cost(const StateTrajectory& traj, const Control& control, const CostSpec& cost,
                 const ModelSpec& spec);

/// g1 = -phi (1 - phi/N) q + alpha9 chi1, g2 = S(phi, z) r + alpha9 chi2 per node.
Control reduced_gradient(const StateTrajectory& traj, const AdjointTrajectory& adj, const Control& control,
                         const CostSpec& cost, const ModelSpec& spec);

/// Control-to-cost map with its adjoint gradient on a fixed time grid.
class ReducedProblem {
 public:
  ReducedProblem(ModelSpec spec, CostSpec cost, int steps);

  struct Evaluation {
    StateTrajectory state;
    double cost = 0.0;
    Control gradient;  ///< empty unless requested
  };

  const ModelSpec& spec() const { return spec_; }
  const CostSpec& cost_spec() const { return cost_; }
  int steps() const { return steps_; }
  double tau() const { return spec_.t_final / steps_; }
  std::size_t time_nodes() const { return static_cast<std::size_t>(steps_) + 1; }

  double cost(const Control& control) const;
  Evaluation evaluate(const Control& control, bool with_gradient) const;

 private:
  ModelSpec spec_;
  CostSpec cost_;
  int steps_;
};

/// Central difference (J(chi + e h) - J(chi - e h)) / 2e; the two solves run concurrently.
double fd_directional(const ReducedProblem& problem, const Control& control, const Control& h, double eps);

struct AdmissibleBox {
  std::vector<ScalarField> chi1_low, chi1_high, chi2_low, chi2_high;
  double c_ad = 1.0;

  static AdmissibleBox constant(const Grid& g, std::size_t time_nodes, double chi1_low, double chi1_high,
                                double chi2_low, double chi2_high, double c_ad);
  /// Throws ConfigError when low > high somewhere, shapes mismatch, or C_ad <= 0.
  void validate(const Grid& g, std::size_t time_nodes) const;
  bool contains(const Control& c, double tau, double tol = 1e-10) const;
};

/// sqrt(sum_n w_n (||chi1^n||^2 + ||grad chi1^n||^2)).
double chi1_v_norm(const Control& c, double tau);

struct Projection {
  Control control;
  bool ball_active = false;
};

/// Clamp to the box, rescale chi1 into the V-ball if needed, clamp once more.
Projection project_admissible(const Control& c, const AdmissibleBox& box, double tau);

struct OptimizerOptions {
  double lambda0 = 1.0;
  double lambda_max = 1e3;  ///< cap on the doubled trial step
  double shrink = 0.5;
  double armijo = 1e-4;
  double tol = 1e-6;  ///< relative to the initial stationarity measure
  int max_iterations = 200;
  int max_backtracks = 40;
  double min_step = 1e-10;  ///< stop once the accepted step falls below this
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double stationarity = 0.0;
  double step = 0.0;
  bool ball_active = false;
};

struct OptimizationResult {
  Control control;
  std::vector<IterationRecord> history;
  bool converged = false;
  std::string stop_reason;
};

/// Projected gradient with Armijo backtracking on the reduced cost.
OptimizationResult optimize(const Control& initial, const ReducedProblem& problem, const AdmissibleBox& box,
                            const OptimizerOptions& options);

/// Header "iteration,J,stationarity,step,ball_active"; values with %.17g.
void write_history_csv(const std::string& path, const std::vector<IterationRecord>& history);

struct ViReport {
  double printed = 0.0;  ///< min over probes with alpha9 chi (chi - chi*)
  double star = 0.0;     ///< min over probes with alpha9 chi* (chi - chi*)
  double scale = 0.0;    ///< ||g*|| * max ||chi - chi*|| over probes
  int probes = 0;
};

/// Evaluates the variational inequality at `candidate` against the candidate
/// itself, the four box corners and `random_probes` seeded admissible draws.
ViReport vi_residual(const Control& candidate, const AdmissibleBox& box, const StateTrajectory& traj,
                     const AdjointTrajectory& adj, const CostSpec& cost, const ModelSpec& spec,
                     int random_probes, std::uint64_t seed);

}  // namespace tumorctl
