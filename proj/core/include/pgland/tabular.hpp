#pragma once

#include <string>
#include <vector>

#include "pgland/error.hpp"
#include "pgland/mdp.hpp"

namespace pgland {

/// Unconstrained softmax parameters, one row per state. Flattened parameter
/// vectors use row-major order: index s * n_actions + a.
struct SoftmaxParams {
  Matrix theta;

  static SoftmaxParams zeros(int n_states, int n_actions) {
    return {Matrix::Zero(n_states, n_actions)};
  }
  static SoftmaxParams from_flat(const Vector& flat, int n_states, int n_actions);
  Vector flat() const;
};

struct GradientReport {
  Vector gradient;
  double loss = 0.0;
  double grad_norm = 0.0;
};

// Thrown by improvement_direction when a policy row is too close to a vertex
// for the softmax Jacobian to be inverted on the tangent space.
class DegenerateJacobian : public NumericalError {
 public:
  DegenerateJacobian(int state, double min_prob);
  int state() const { return state_; }

 private:
  int state_;
};

/// pi(s, i) = exp(theta_si) / sum_j exp(theta_sj), stabilized by subtracting
/// each row's maximum.
StochasticPolicy softmax_policy(const SoftmaxParams& params);
Vector softmax_row(const Eigen::Ref<const Vector>& logits);

/// d pi(s, i) / d theta_sj: pi_i (1 - pi_i) on the diagonal and -pi_i pi_j
/// off it. Entries across different states are identically zero.
Matrix softmax_jacobian(const SoftmaxParams& params, int s);

/// Per-(state, action) weights w(s,a) = eta(s) Q(s,a) / (1 - gamma), so that for
/// any parameterization d l / d theta = sum_{s,a} w(s,a) d pi(s,a) / d theta.
/// Also carries the loss and the pieces it was computed from.
struct PolicyGradientTerms {
  Matrix weights;
  QFunction q;
  ValueFunction values;
  OccupancyMeasure eta;
  double loss = 0.0;
};
PolicyGradientTerms policy_gradient_terms(const FiniteMdp& mdp, const StochasticPolicy& policy);

/// Exact gradient of l(theta) = rho^T J_theta for the per-state softmax class.
GradientReport exact_policy_gradient(const FiniteMdp& mdp, const SoftmaxParams& params);

/// Minimum-norm u with J(pi) u = d, where J(pi) = diag(pi) - pi pi^T is the
/// softmax Jacobian of one row and d sums to zero. Closed form
/// u = d / pi - mean(d / pi).
Vector softmax_tangent_solve(const Eigen::Ref<const Vector>& pi, const Eigen::Ref<const Vector>& d);

/// Direction u (flat) whose directional derivative of pi_theta equals
/// pi_plus - pi_theta in every state, pi_plus being the greedy policy of Q_theta.
/// Throws DegenerateJacobian when a row's smallest probability is below 1e-12.
Vector improvement_direction(const FiniteMdp& mdp, const SoftmaxParams& params);

/// Partition of states into blocks that share one softmax row.
class Aggregation {
 public:
  Aggregation(std::vector<int> block_of_state, int n_blocks);

  static Aggregation identity(int n_states);
  static Aggregation single_block(int n_states);
  // Contiguous blocks of (nearly) equal size.
  static Aggregation contiguous(int n_states, int n_blocks);

  int n_states() const { return static_cast<int>(block_of_.size()); }
  int n_blocks() const { return n_blocks_; }
  int block_of(int s) const { return block_of_[static_cast<std::size_t>(s)]; }
  const std::vector<int>& blocks() const { return block_of_; }

 private:
  std::vector<int> block_of_;
  int n_blocks_;
};

/// Every state in block i plays softmax(theta_blocks.row(i)).
StochasticPolicy aggregated_softmax(const Matrix& theta_blocks, const Aggregation& agg);

/// Gradient of l with respect to the (block, action) parameters, flattened
/// row-major: the per-state softmax gradients summed over each block.
GradientReport aggregated_policy_gradient(const FiniteMdp& mdp, const Matrix& theta_blocks,
                                          const Aggregation& agg);

}  // namespace pgland
