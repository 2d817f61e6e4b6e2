#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "pgland/inventory.hpp"
#include "pgland/lqr.hpp"
#include "pgland/optimize.hpp"
#include "pgland/reinforce.hpp"
#include "pgland/stopping.hpp"
#include "pgland/tools/config.hpp"
#include "pgland/tools/csv.hpp"
#include "pgland/verify.hpp"

namespace pgland::tools {

inline const std::vector<std::string> kRunHeader = {"iteration",   "loss",      "optimality_gap",
                                                    "grad_norm",   "step_size", "wall_time_s"};

struct DescentRun {
  DescentResult result;
  Vector initial_theta;
  double oracle_loss = std::numeric_limits<double>::quiet_NaN();
  // converged, max_iters, line_search_failed or line_search_exhausted
  std::string status;
  std::string failure;
  bool ok = true;
  Sidecar meta;  // oracle and result entries; the config is added by run()

  double initial_gap() const;
  double final_gap() const;
};

DescentRun run_tabular(const ExperimentConfig& cfg);
DescentRun run_stopping(const ExperimentConfig& cfg);

struct LqrRun {
  DescentRun run;
  LinearGain optimum;
  LinearGain final_gain;
  double distance_to_optimum = 0.0;  // Frobenius
  bool all_iterates_stable = true;   // operator norm of A + B theta below 1 at every iterate
  double max_operator_norm = 0.0;
};

LqrRun run_lqr(const ExperimentConfig& cfg);

/// Descent on a fixed-sample average of the Monte Carlo cost, projected onto
/// theta >= 0; the sample-average objective is piecewise linear, so running
/// out of backtracking steps ends the run normally.
struct InventoryRun {
  DescentRun run;
  BaseStock optimum;
  BaseStock final_theta;
  McEstimate final_cost;    // fresh paths, shared by both evaluations
  McEstimate optimum_cost;
  double combined_std_err = 0.0;

  bool within(double n_std_errs) const {
    return std::abs(final_cost.mean - optimum_cost.mean) <= n_std_errs * combined_std_err;
  }
};

InventoryProblem inventory_problem(const ExperimentConfig& cfg);
InventoryRun run_inventory(const ExperimentConfig& cfg);

struct DescentCase {
  long index = 0;
  std::uint64_t mdp_seed = 0;
  int n_states = 0;
  int n_actions = 0;
  DescentReport report;
};

std::vector<DescentCase> run_verify_descent(const ExperimentConfig& cfg);

struct ApproximationCase {
  int mdp = 0;
  std::uint64_t mdp_seed = 0;
  int n_states = 0;
  int n_blocks = 0;
  int iterations = 0;
  bool stationary = false;  // descent reached grad_tol
  ApproximationReport report;
};

/// Blocks m in {1, 2, n_states} for every MDP; contiguous partitions.
std::vector<ApproximationCase> run_verify_approximation(const ExperimentConfig& cfg);

struct SoftPiCase {
  long index = 0;
  int mdp = 0;
  SoftPiReport report;
};

std::vector<SoftPiCase> run_verify_softpi(const ExperimentConfig& cfg);

struct FiniteHorizonCase {
  long index = 0;
  BaseStock theta;
  FiniteHorizonReport report;
};

struct FiniteHorizonBatch {
  BaseStock optimum;
  std::vector<FiniteHorizonCase> cases;
};

FiniteHorizonBatch run_verify_finite_horizon(const ExperimentConfig& cfg);

struct ReinforceCase {
  int mdp = 0;
  int theta_index = 0;
  Vector exact;
  ReinforceEstimate estimate;
};

struct ReinforceBatch {
  std::vector<ReinforceCase> cases;
  // Least-squares c in  estimate ~ c * exact, pooled over all cases.
  double proportionality = 0.0;
  double proportionality_std_err = 0.0;
};

/// The constant relating the sampled estimator to exact_policy_gradient.
inline constexpr double kReinforceProportionality = 1.0;

ReinforceBatch run_reinforce_check(const ExperimentConfig& cfg);

/// Runs the experiment, writing the CSV at cfg's `output` and the sidecar at
/// `output` + ".meta". Returns 0, or 2 after a runtime failure (with
/// everything computed so far written). Progress goes to `log`.
int run(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace pgland::tools
