#pragma once

#include <cstdint>
#include <string>

#include "pgland/inventory.hpp"
#include "pgland/mdp.hpp"
#include "pgland/tabular.hpp"

namespace pgland {

/// Policy-improvement descent check for per-state softmax policies: the
/// derivative of l along the improvement direction u, measured by central
/// differences of average_cost, against the bound
/// -(1 - gamma)^{-1} ||J_theta - T J_theta||_{1, eta_theta}.
struct DescentReport {
  Vector theta;
  double directional_derivative = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // bound - directional_derivative
  // Magnitude the tolerance is relative to: ||J||_inf ||u||_2 / (1 - gamma).
  double scale = 0.0;
  double direction_norm = 0.0;

  bool holds(double rel_tol = 1e-6) const { return slack >= -rel_tol * scale; }
};

/// Central difference of l(theta + alpha u / ||u||) at alpha = 0 with step
/// h = 1e-6 (1 + ||theta||), rescaled by ||u||, so the parameter displacement
/// is h whatever the length of u. Throws DegenerateJacobian for near-vertex
/// policies (any probability below 1e-12).
DescentReport verify_descent(const FiniteMdp& mdp, const SoftmaxParams& params);

/// Finite-horizon construction: the single-stage move toward the optimal
/// threshold of the last suboptimal stage. Stages are scanned from the last
/// one back; a stage counts as suboptimal when its threshold differs from the
/// optimum by more than `stage_tol` and the CRN central difference along the
/// move is more than `noise_std_errs` standard errors away from zero.
struct FiniteHorizonReport {
  bool vacuous = false;  // every stage is optimal within tolerance or noise
  int stage = -1;        // 0-based period whose threshold is moved
  int within_noise = 0;  // later stages passed over because their move was within noise
  Vector direction;
  double directional_derivative = 0.0;  // CRN central difference of mc_cost
  double std_err = 0.0;

  bool descends() const { return !vacuous && directional_derivative < 0.0; }
};

struct FiniteHorizonOptions {
  long n_paths = 100'000;
  std::uint64_t seed = 7;
  double stage_tol = 1e-2;  // thresholds closer than this count as optimal
  double step = 1e-2;       // central-difference step in units of the direction
  double noise_std_errs = 3.0;
  int threads = 0;
};

FiniteHorizonReport verify_finite_horizon(const InventoryProblem& prob, const BaseStock& theta,
                                          const BaseStock& optimum, const FiniteHorizonOptions& options = {});

/// Approximation bounds for aggregated softmax at a near-stationary point.
struct ApproximationReport {
  Matrix theta_blocks;
  double grad_norm = 0.0;
  double bellman_error_eta = 0.0;  // ||T J - J||_{1, eta}
  double approx_error = 0.0;       // inf over the class of ||T_pi J - T J||_{1, eta}
  double c_rho = 0.0;              // 1 / min_s rho(s)
  double loss = 0.0;
  double optimum = 0.0;
  double gap = 0.0;                // l(theta) - l*
  double bound_rhs = 0.0;          // c_rho / (1 - gamma)^2 approx_error
  // Allowance for not being exactly stationary: (1 - gamma) ||grad|| ||u*||
  // with u* the direction toward the minimizing class member. Since
  // (1 - gamma) grad . u* = approx_error - bellman_error_eta, this bounds the
  // deviation from exact stationarity a priori.
  double stationarity_slack = 0.0;
  double bellman_tol = 0.0;
  double gap_tol = 0.0;

  bool bellman_bound_holds() const { return bellman_error_eta <= approx_error + bellman_tol; }
  bool gap_bound_holds() const { return gap <= bound_rhs + gap_tol; }
};

/// Throws InvalidArgument when the gradient norm exceeds `max_grad_norm`.
ApproximationReport verify_approximation(const FiniteMdp& mdp, const Aggregation& agg,
                                         const Matrix& theta_blocks, double max_grad_norm = 1e-8);

/// Soft policy iteration pi^alpha = (1 - alpha) pi + alpha pi' toward the
/// greedy policy pi', with the sup-norm instantiation kappa = gamma,
/// c = min_s rho(s), C = 1 of the improvement bound
/// l(pi) - l(pi^alpha) >= alpha lambda (l(pi) - l*), lambda = (c / C)(1 - kappa).
struct SoftPiReport {
  double alpha = 0.0;
  double improvement = 0.0;
  double rhs = 0.0;
  double lambda = 0.0;
  double kappa = 0.0;
  double c_lower = 0.0;
  double c_upper = 1.0;
  // Largest violations of J_pi >= T_{pi^alpha} J_pi >= (1-alpha) J_pi + alpha T J_pi.
  double chain_violation_upper = 0.0;
  double chain_violation_lower = 0.0;
  std::string instantiation;

  bool improvement_holds(double tol = 1e-10) const { return improvement >= rhs - tol; }
  bool chain_holds(double tol = 1e-10) const {
    return chain_violation_upper <= tol && chain_violation_lower <= tol;
  }
};

SoftPiReport verify_soft_pi(const FiniteMdp& mdp, const StochasticPolicy& policy, double alpha);

}  // namespace pgland
