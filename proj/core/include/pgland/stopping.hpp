#pragma once

#include <cstdint>
#include <vector>

#include "pgland/mdp.hpp"
#include "pgland/tabular.hpp"

namespace pgland {

/// Contextual asset selling: a context x follows an uncontrolled chain
/// p(x'|x); in context x an offer y_j is drawn with probability q_x(j). The
/// agent maximizes E[gamma^tau y_tau].
struct StoppingProblem {
  Vector offers;          // |Y| offer values
  Matrix context_kernel;  // |X| x |X|, row-stochastic
  Matrix emission;        // |X| x |Y|, row-stochastic
  double gamma = 0.9;

  int n_contexts() const { return static_cast<int>(context_kernel.rows()); }
  int n_offers() const { return static_cast<int>(offers.size()); }
  int n_states() const { return n_contexts() * n_offers() + 1; }
  int state_index(int x, int y) const { return x * n_offers() + y; }
  int terminal_state() const { return n_contexts() * n_offers(); }

  void validate() const;
};

inline constexpr int kReject = 0;
inline constexpr int kAccept = 1;

/// The stopping problem as a cost-minimizing FiniteMdp over
/// (X x Y) + {terminal}. With y_max = max(0, max offer), accepting y costs
/// y_max - y, rejecting costs y_max (1 - gamma), and the terminal state is
/// absorbing and free. Then J(s) = y_max - V(s) on every non-terminal state for
/// every policy, V being the expected discounted reward. rho is uniform over
/// all states, terminal included.
struct StoppingMdp {
  FiniteMdp mdp;
  double reward_offset = 0.0;  // y_max

  // V from J (terminal value 0).
  Vector decode_values(const Vector& cost_to_go) const;
  // rho^T V from rho^T J.
  double decode_objective(double cost_loss) const;
};

StoppingMdp build_stopping_mdp(const StoppingProblem& p);

/// Per-context (theta0, theta1) stored at indices (2x, 2x + 1).
struct ThresholdParams {
  Vector theta;

  static ThresholdParams zeros(int n_contexts) { return {Vector::Zero(2 * n_contexts)}; }
  double bias(int x) const { return theta(2 * x); }
  double slope(int x) const { return theta(2 * x + 1); }
};

double logistic(double z);

/// Accept probability f(theta0^x + theta1^x y) in state (x, y); the terminal
/// row is uniform.
StochasticPolicy threshold_policy(const StoppingProblem& p, const ThresholdParams& params);

/// Cost-space loss and gradient with respect to the 2|X| threshold parameters.
GradientReport threshold_policy_gradient(const StoppingProblem& p, const StoppingMdp& built,
                                         const ThresholdParams& params);

/// Expected discounted reward rho^T V_theta.
double stopping_reward(const StoppingProblem& p, const StoppingMdp& built, const ThresholdParams& params);

/// c_theta(x) = gamma sum_{x', y'} p(x'|x) q_{x'}(y') V_theta(x', y').
Vector continuation_value(const StoppingProblem& p, const StoppingMdp& built,
                          const ThresholdParams& params);

/// Loss, gradient and continuation values from |X| x |X| solves, exploiting
/// that the reject transition does not depend on the current offer. Agrees
/// with the generic evaluation on build_stopping_mdp(p).
struct ThresholdEvaluation {
  Vector continuation;  // c_theta(x)
  Vector eta;           // normalized occupancy on the built MDP's states
  double reward = 0.0;  // rho^T V_theta
  double cost_loss = 0.0;
  Vector gradient;      // of cost_loss
};

ThresholdEvaluation evaluate_threshold(const StoppingProblem& p, const ThresholdParams& params,
                                       bool with_gradient = true);

struct StoppingDescent {
  Vector direction;  // (u0^x, u1^x) = (-c_theta(x), 1)
  // Closed-form derivative of the reward objective along `direction`:
  // (1 - gamma)^{-1} sum_{x,y} eta(x,y) (y - c_theta(x))^2 f'(theta0 + theta1 y).
  double reward_derivative = 0.0;
  Vector continuation;
};

StoppingDescent stopping_descent_direction(const StoppingProblem& p, const StoppingMdp& built,
                                           const ThresholdParams& params);

struct StoppingOptimum {
  PolicyIterationResult solution;
  double cost_loss = 0.0;
  // Smallest accepted offer per context (+inf when nothing is accepted).
  std::vector<double> thresholds;
  // Acceptance sets are up-closed in the offer value in every context.
  bool up_closed = true;
};

StoppingOptimum solve_stopping(const StoppingProblem& p, const StoppingMdp& built);

/// Offers i.i.d. U[0, 1] (sorted ascending); kernel and emission rows i.i.d.
/// U[0, 1] then normalized.
StoppingProblem random_stopping_problem(int n_contexts, int n_offers, std::uint64_t seed,
                                        double gamma = 0.9);

}  // namespace pgland
