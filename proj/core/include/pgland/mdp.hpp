#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace pgland {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Discounted tabular MDP with nonnegative costs.
///
/// Transitions are stored as one (n_states * n_actions) x n_states matrix;
/// row `s * n_actions + a` is the distribution of the next state after taking
/// action `a` in state `s`. The constructor validates every invariant
/// (stochastic rows, nonnegative costs, gamma in (0,1), rho a full-support
/// distribution) and throws `InvalidArgument`/`DimensionError` otherwise.
class FiniteMdp {
 public:
  FiniteMdp(Matrix cost, Matrix transition, double gamma, Vector rho);

  int n_states() const { return static_cast<int>(cost_.rows()); }
  int n_actions() const { return static_cast<int>(cost_.cols()); }
  const Matrix& cost() const { return cost_; }
  const Matrix& transition() const { return transition_; }
  double gamma() const { return gamma_; }
  const Vector& rho() const { return rho_; }

  auto transition_row(int s, int a) const { return transition_.row(s * n_actions() + a); }

  // Same dynamics with a different discount / initial distribution / costs.
  FiniteMdp with_gamma(double gamma) const;
  FiniteMdp with_rho(Vector rho) const;
  FiniteMdp with_cost(Matrix cost) const;

 private:
  Matrix cost_;
  Matrix transition_;
  double gamma_;
  Vector rho_;
};

struct ValueFunction {
  Vector values;
};

struct QFunction {
  Matrix values;  // (state, action)
};

/// Row-stochastic (state, action) matrix. Deterministic policies are one-hot rows.
class StochasticPolicy {
 public:
  explicit StochasticPolicy(Matrix probs);

  static StochasticPolicy uniform(int n_states, int n_actions);
  static StochasticPolicy deterministic(const std::vector<int>& actions, int n_actions);

  const Matrix& probs() const { return probs_; }
  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }

  // Index of the largest entry of each row (lowest index on ties).
  std::vector<int> modal_actions() const;

 private:
  Matrix probs_;
};

struct OccupancyMeasure {
  Vector eta;
  bool normalized = true;  // true when the (1 - gamma) factor is applied
};

// P_pi(s, s') = sum_a pi(s, a) P(s' | s, a).
Matrix policy_transition(const FiniteMdp& mdp, const StochasticPolicy& policy);
// g_pi(s) = sum_a pi(s, a) g(s, a).
Vector policy_cost(const FiniteMdp& mdp, const StochasticPolicy& policy);

// One-step lookahead g(s,a) + gamma * sum_s' P(s'|s,a) J(s').
QFunction backup(const FiniteMdp& mdp, const ValueFunction& J);

/// Cost-to-go J_pi, the fixed point of T_pi.
ValueFunction evaluate_policy(const FiniteMdp& mdp, const StochasticPolicy& policy);

/// Q_pi = g + gamma P Pi_pi Q_pi. Solved through the state-value system
/// (I - gamma P_pi) J = g_pi, which has the same unique fixed point, then
/// Q = backup(J).
QFunction solve_q(const FiniteMdp& mdp, const StochasticPolicy& policy);

// J(s) = sum_a pi(s,a) Q(s,a).
ValueFunction values_from_q(const QFunction& q, const StochasticPolicy& policy);

ValueFunction bellman_policy(const FiniteMdp& mdp, const ValueFunction& J,
                             const StochasticPolicy& policy);
ValueFunction bellman_optimal(const FiniteMdp& mdp, const ValueFunction& J);

/// Deterministic policy picking argmin_a Q(s, a); lowest index wins ties.
StochasticPolicy greedy_policy(const QFunction& q);

struct PolicyIterationResult {
  StochasticPolicy policy;
  ValueFunction values;
  int iterations = 0;
  // J of every evaluated policy, in order; the last entry equals `values`.
  std::vector<Vector> value_history;
};

/// Howard policy iteration started from the greedy policy of J = 0. An action
/// is only replaced when another is strictly better by more than a relative
/// 1e-12, which guarantees termination under rounding.
PolicyIterationResult policy_iteration(const FiniteMdp& mdp, int max_iterations = 10'000);

/// Normalized discounted state-occupancy measure
/// eta^T = (1 - gamma) rho^T (I - gamma P_pi)^{-1}.
OccupancyMeasure occupancy(const FiniteMdp& mdp, const StochasticPolicy& policy);

/// sum_s eta(s) |J(s) - TJ(s)|.
double weighted_bellman_error(const ValueFunction& J, const FiniteMdp& mdp,
                              const OccupancyMeasure& eta);

/// Scalar loss rho^T J_pi.
double average_cost(const FiniteMdp& mdp, const StochasticPolicy& policy);

struct RandomMdpOptions {
  double gamma = 0.9;
  std::optional<Vector> rho;  // uniform when empty
};

/// Costs i.i.d. U[0,1]; each transition row i.i.d. U[0,1] then normalized.
/// Deterministic given `seed`.
FiniteMdp random_mdp(int n_states, int n_actions, std::uint64_t seed,
                     const RandomMdpOptions& options = {});

}  // namespace pgland
