#include "pgland/tabular.hpp"

#include <cmath>
#include <string>

namespace pgland {

namespace {

constexpr double kMinRowProbability = 1e-12;

}  // namespace

SoftmaxParams SoftmaxParams::from_flat(const Vector& flat, int n_states, int n_actions) {
  if (flat.size() != static_cast<Eigen::Index>(n_states) * n_actions) {
    throw DimensionError("flat softmax parameters have the wrong length");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return {Eigen::Map<const RowMajor>(flat.data(), n_states, n_actions)};
}

Vector SoftmaxParams::flat() const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = theta;
  return Eigen::Map<const Vector>(rm.data(), rm.size());
}

DegenerateJacobian::DegenerateJacobian(int state, double min_prob)
    : NumericalError("softmax Jacobian is degenerate at state " + std::to_string(state) +
                     " (smallest action probability " + std::to_string(min_prob) + ")"),
      state_(state) {}

Vector softmax_row(const Eigen::Ref<const Vector>& logits) {
  const double shift = logits.maxCoeff();
  Vector e = (logits.array() - shift).exp();
  return e / e.sum();
}

StochasticPolicy softmax_policy(const SoftmaxParams& params) {
  if (!params.theta.allFinite()) throw InvalidArgument("softmax parameters must be finite");
  Matrix probs(params.theta.rows(), params.theta.cols());
  for (Eigen::Index s = 0; s < params.theta.rows(); ++s) {
    probs.row(s) = softmax_row(params.theta.row(s).transpose()).transpose();
  }
  return StochasticPolicy(std::move(probs));
}

Matrix softmax_jacobian(const SoftmaxParams& params, int s) {
  if (s < 0 || s >= params.theta.rows()) throw DimensionError("state index out of range");
  const Vector pi = softmax_row(params.theta.row(s).transpose());
  Matrix jac = -pi * pi.transpose();
  jac.diagonal() += pi;
  return jac;
}

PolicyGradientTerms policy_gradient_terms(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  PolicyGradientTerms terms;
  terms.values = evaluate_policy(mdp, policy);
  terms.q = backup(mdp, terms.values);
  terms.eta = occupancy(mdp, policy);
  terms.loss = mdp.rho().dot(terms.values.values);
  terms.weights = (terms.eta.eta / (1.0 - mdp.gamma())).asDiagonal() * terms.q.values;
  return terms;
}

GradientReport exact_policy_gradient(const FiniteMdp& mdp, const SoftmaxParams& params) {
  const StochasticPolicy policy = softmax_policy(params);
  const PolicyGradientTerms terms = policy_gradient_terms(mdp, policy);
  // sum_a w(s,a) dpi(s,a)/dtheta_sj = pi(s,j) (w(s,j) - sum_a pi(s,a) w(s,a)).
  const Vector baseline = terms.weights.cwiseProduct(policy.probs()).rowwise().sum();
  const Matrix grad =
      policy.probs().cwiseProduct(terms.weights - baseline.replicate(1, mdp.n_actions()));
  GradientReport report;
  report.gradient = SoftmaxParams{grad}.flat();
  report.loss = terms.loss;
  report.grad_norm = report.gradient.norm();
  return report;
}

Vector softmax_tangent_solve(const Eigen::Ref<const Vector>& pi, const Eigen::Ref<const Vector>& d) {
  Vector u = d.cwiseQuotient(pi);
  u.array() -= u.mean();
  return u;
}

Vector improvement_direction(const FiniteMdp& mdp, const SoftmaxParams& params) {
  const StochasticPolicy policy = softmax_policy(params);
  const QFunction q = solve_q(mdp, policy);
  const StochasticPolicy greedy = greedy_policy(q);
  Matrix u(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    const Vector pi = policy.probs().row(s).transpose();
    if (pi.minCoeff() < kMinRowProbability) throw DegenerateJacobian(s, pi.minCoeff());
    const Vector d = greedy.probs().row(s).transpose() - pi;
    u.row(s) = softmax_tangent_solve(pi, d).transpose();
  }
  return SoftmaxParams{u}.flat();
}

Aggregation::Aggregation(std::vector<int> block_of_state, int n_blocks)
    : block_of_(std::move(block_of_state)), n_blocks_(n_blocks) {
  if (block_of_.empty() || n_blocks_ < 1) throw InvalidArgument("aggregation needs states and blocks");
  std::vector<int> sizes(static_cast<std::size_t>(n_blocks_), 0);
  for (std::size_t s = 0; s < block_of_.size(); ++s) {
    const int b = block_of_[s];
    if (b < 0 || b >= n_blocks_) {
      throw InvalidArgument("state " + std::to_string(s) + " is not mapped to a valid block");
    }
    ++sizes[static_cast<std::size_t>(b)];
  }
  for (int b = 0; b < n_blocks_; ++b) {
    if (sizes[static_cast<std::size_t>(b)] == 0) {
      throw InvalidArgument("block " + std::to_string(b) + " is empty");
    }
  }
}

Aggregation Aggregation::identity(int n_states) {
  std::vector<int> blocks(static_cast<std::size_t>(n_states));
  for (int s = 0; s < n_states; ++s) blocks[static_cast<std::size_t>(s)] = s;
  return {std::move(blocks), n_states};
}

Aggregation Aggregation::single_block(int n_states) {
  return {std::vector<int>(static_cast<std::size_t>(n_states), 0), 1};
}

Aggregation Aggregation::contiguous(int n_states, int n_blocks) {
  if (n_blocks < 1 || n_blocks > n_states) throw InvalidArgument("need 1 <= n_blocks <= n_states");
  std::vector<int> blocks(static_cast<std::size_t>(n_states));
  for (int s = 0; s < n_states; ++s) {
    blocks[static_cast<std::size_t>(s)] = static_cast<int>(static_cast<long>(s) * n_blocks / n_states);
  }
  return {std::move(blocks), n_blocks};
}

StochasticPolicy aggregated_softmax(const Matrix& theta_blocks, const Aggregation& agg) {
  if (theta_blocks.rows() != agg.n_blocks()) {
    throw DimensionError("one parameter row per aggregation block is required");
  }
  if (!theta_blocks.allFinite()) throw InvalidArgument("softmax parameters must be finite");
  Matrix block_probs(theta_blocks.rows(), theta_blocks.cols());
  for (Eigen::Index b = 0; b < theta_blocks.rows(); ++b) {
    block_probs.row(b) = softmax_row(theta_blocks.row(b).transpose()).transpose();
  }
  Matrix probs(agg.n_states(), theta_blocks.cols());
  for (int s = 0; s < agg.n_states(); ++s) probs.row(s) = block_probs.row(agg.block_of(s));
  return StochasticPolicy(std::move(probs));
}

GradientReport aggregated_policy_gradient(const FiniteMdp& mdp, const Matrix& theta_blocks,
                                          const Aggregation& agg) {
  if (agg.n_states() != mdp.n_states()) throw DimensionError("aggregation does not cover the MDP");
  const StochasticPolicy policy = aggregated_softmax(theta_blocks, agg);
  const PolicyGradientTerms terms = policy_gradient_terms(mdp, policy);
  Matrix grad = Matrix::Zero(agg.n_blocks(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    const auto pi = policy.probs().row(s);
    const double baseline = terms.weights.row(s).dot(pi);
    grad.row(agg.block_of(s)).array() += pi.array() * (terms.weights.row(s).array() - baseline);
  }
  GradientReport report;
  report.gradient = SoftmaxParams{grad}.flat();
  report.loss = terms.loss;
  report.grad_norm = report.gradient.norm();
  return report;
}

}  // namespace pgland
