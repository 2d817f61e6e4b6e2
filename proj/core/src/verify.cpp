#include "pgland/verify.hpp"

#include <cmath>
#include <string>

#include "pgland/error.hpp"

namespace pgland {

DescentReport verify_descent(const FiniteMdp& mdp, const SoftmaxParams& params) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const Vector u = improvement_direction(mdp, params);
  const StochasticPolicy policy = softmax_policy(params);
  const ValueFunction J = evaluate_policy(mdp, policy);
  const OccupancyMeasure eta = occupancy(mdp, policy);
  const double inv = 1.0 / (1.0 - mdp.gamma());

  DescentReport report;
  report.theta = params.flat();
  report.direction_norm = u.norm();
  report.bound = -inv * weighted_bellman_error(J, mdp, eta);
  report.scale = inv * std::max(J.values.lpNorm<Eigen::Infinity>(), 1e-300) * std::max(report.direction_norm, 1.0);

  if (report.direction_norm == 0.0) {
    report.directional_derivative = 0.0;
  } else {
    const Vector unit = u / report.direction_norm;
    const double h = 1e-6 * (1.0 + report.theta.norm());
    auto loss_at = [&](double alpha) {
      return average_cost(mdp, softmax_policy(SoftmaxParams::from_flat(report.theta + alpha * unit, S, A)));
    };
    report.directional_derivative = report.direction_norm * (loss_at(h) - loss_at(-h)) / (2.0 * h);
  }
  report.slack = report.bound - report.directional_derivative;
  return report;
}

FiniteHorizonReport verify_finite_horizon(const InventoryProblem& prob, const BaseStock& theta,
                                          const BaseStock& optimum, const FiniteHorizonOptions& options) {
  if (theta.theta.size() != prob.horizon || optimum.theta.size() != prob.horizon) {
    throw DimensionError("thresholds must have one entry per period");
  }
  FiniteHorizonReport report;
  report.direction = Vector::Zero(prob.horizon);
  const double h = options.step;
  for (int t = prob.horizon - 1; t >= 0; --t) {
    if (std::abs(theta.theta(t) - optimum.theta(t)) <= options.stage_tol) continue;
    Vector direction = Vector::Zero(prob.horizon);
    direction(t) = optimum.theta(t) - theta.theta(t);
    BaseStock plus{(theta.theta + h * direction).cwiseMax(0.0)};
    BaseStock minus{(theta.theta - h * direction).cwiseMax(0.0)};
    const McEstimate diff = mc_cost_difference(prob, plus, minus, options.n_paths, options.seed, options.threads);
    const double d = diff.mean / (2.0 * h);
    const double se = diff.std_err / (2.0 * h);
    if (std::abs(d) <= options.noise_std_errs * se) {
      ++report.within_noise;
      continue;
    }
    report.stage = t;
    report.direction = direction;
    report.directional_derivative = d;
    report.std_err = se;
    return report;
  }
  report.vacuous = true;
  return report;
}

ApproximationReport verify_approximation(const FiniteMdp& mdp, const Aggregation& agg,
                                         const Matrix& theta_blocks, double max_grad_norm) {
  const GradientReport grad = aggregated_policy_gradient(mdp, theta_blocks, agg);
  if (!(grad.grad_norm <= max_grad_norm)) {
    throw InvalidArgument("parameters are not near-stationary (gradient norm " +
                          std::to_string(grad.grad_norm) + ")");
  }
  const int A = mdp.n_actions();
  const double g = mdp.gamma();
  const StochasticPolicy policy = aggregated_softmax(theta_blocks, agg);
  const ValueFunction J = evaluate_policy(mdp, policy);
  const QFunction q = backup(mdp, J);
  const Vector TJ = q.values.rowwise().minCoeff();
  const OccupancyMeasure eta = occupancy(mdp, policy);

  ApproximationReport report;
  report.theta_blocks = theta_blocks;
  report.grad_norm = grad.grad_norm;
  report.bellman_error_eta = eta.eta.dot((J.values - TJ).cwiseAbs());

  // (T_pi J - T J)(s) = sum_a pi(a) (Q(s,a) - TJ(s)) >= 0 is affine in the block's
  // shared distribution, so the infimum over the class is attained at a vertex
  // chosen independently per block.
  Matrix block_excess = Matrix::Zero(agg.n_blocks(), A);
  for (int s = 0; s < mdp.n_states(); ++s) {
    block_excess.row(agg.block_of(s)) += eta.eta(s) * (q.values.row(s).array() - TJ(s)).matrix();
  }
  Matrix best_target = Matrix::Zero(agg.n_blocks(), A);
  for (int b = 0; b < agg.n_blocks(); ++b) {
    Eigen::Index best = 0;
    report.approx_error += block_excess.row(b).minCoeff(&best);
    best_target(b, best) = 1.0;
  }

  // Minimum-norm direction whose policy derivative is (pi* - pi) in every block:
  // u_a = pi*_a / pi_a - 1, centered.
  Matrix u(agg.n_blocks(), A);
  for (int b = 0; b < agg.n_blocks(); ++b) {
    const Vector pi = softmax_row(theta_blocks.row(b).transpose());
    for (int a = 0; a < A; ++a) u(b, a) = best_target(b, a) > 0.0 ? 1.0 / pi(a) - 1.0 : -1.0;
    u.row(b).array() -= u.row(b).mean();
  }

  report.c_rho = 1.0 / mdp.rho().minCoeff();
  report.loss = grad.loss;
  report.optimum = mdp.rho().dot(policy_iteration(mdp).values.values);
  report.gap = report.loss - report.optimum;
  report.bound_rhs = report.c_rho / ((1.0 - g) * (1.0 - g)) * report.approx_error;
  report.stationarity_slack = (1.0 - g) * grad.grad_norm * u.norm();
  report.bellman_tol = report.stationarity_slack + 1e-8;
  report.gap_tol = report.c_rho / ((1.0 - g) * (1.0 - g)) * report.stationarity_slack + 1e-8;
  return report;
}

SoftPiReport verify_soft_pi(const FiniteMdp& mdp, const StochasticPolicy& policy, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const ValueFunction J = evaluate_policy(mdp, policy);
  const QFunction q = backup(mdp, J);
  const StochasticPolicy improved = greedy_policy(q);
  const StochasticPolicy mixed((1.0 - alpha) * policy.probs() + alpha * improved.probs());

  const Vector TJ = q.values.rowwise().minCoeff();
  const Vector T_mixed = values_from_q(q, mixed).values;
  const Vector blend = (1.0 - alpha) * J.values + alpha * TJ;

  SoftPiReport report;
  report.alpha = alpha;
  report.kappa = mdp.gamma();
  report.c_lower = mdp.rho().minCoeff();
  report.c_upper = 1.0;
  report.lambda = report.c_lower / report.c_upper * (1.0 - report.kappa);
  const double loss = mdp.rho().dot(J.values);
  const double optimum = mdp.rho().dot(policy_iteration(mdp).values.values);
  report.improvement = loss - average_cost(mdp, mixed);
  report.rhs = alpha * report.lambda * (loss - optimum);
  report.chain_violation_upper = std::max(0.0, (T_mixed - J.values).maxCoeff());
  report.chain_violation_lower = std::max(0.0, (blend - T_mixed).maxCoeff());
  report.instantiation =
      "norm = sup norm; kappa = gamma; C = 1 from ||J||_{1,rho} <= ||J||_inf; "
      "c = min_s rho(s) from ||J||_{1,rho} >= min_s rho(s) ||J||_inf";
  return report;
}

}  // namespace pgland
