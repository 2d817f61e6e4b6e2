#include "pgland/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgland/error.hpp"
#include "pgland/random.hpp"

namespace pgland {

void StoppingProblem::validate() const {
  const Eigen::Index X = context_kernel.rows();
  if (X < 1 || context_kernel.cols() != X) throw DimensionError("context kernel must be |X| x |X|");
  if (offers.size() < 1) throw DimensionError("need at least one offer");
  if (emission.rows() != X || emission.cols() != offers.size()) {
    throw DimensionError("emission must be |X| x |Y|");
  }
  if (!offers.allFinite()) throw InvalidArgument("offers must be finite");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  for (const Matrix* m : {&context_kernel, &emission}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      if ((m->row(r).array() < 0.0).any() || std::abs(m->row(r).sum() - 1.0) > 1e-12) {
        throw InvalidArgument("context kernel and emission rows must be probability vectors");
      }
    }
  }
}

Vector StoppingMdp::decode_values(const Vector& cost_to_go) const {
  Vector v = Vector::Constant(cost_to_go.size(), reward_offset) - cost_to_go;
  v(v.size() - 1) = 0.0;
  return v;
}

double StoppingMdp::decode_objective(double cost_loss) const {
  const double rho_terminal = mdp.rho()(mdp.n_states() - 1);
  return reward_offset * (1.0 - rho_terminal) - cost_loss;
}

StoppingMdp build_stopping_mdp(const StoppingProblem& p) {
  p.validate();
  const int X = p.n_contexts();
  const int Y = p.n_offers();
  const int S = p.n_states();
  const int T = p.terminal_state();
  const double y_max = std::max(0.0, p.offers.maxCoeff());

  Matrix cost = Matrix::Zero(S, 2);
  Matrix P = Matrix::Zero(2 * S, S);
  for (int x = 0; x < X; ++x) {
    // Reject: next context x' ~ p(.|x), then offer y' ~ q_{x'}.
    Vector next(S);
    next.setZero();
    for (int x2 = 0; x2 < X; ++x2) {
      for (int y2 = 0; y2 < Y; ++y2) {
        next(p.state_index(x2, y2)) = p.context_kernel(x, x2) * p.emission(x2, y2);
      }
    }
    next /= next.sum();
    for (int y = 0; y < Y; ++y) {
      const int s = p.state_index(x, y);
      cost(s, kReject) = y_max * (1.0 - p.gamma);
      cost(s, kAccept) = y_max - p.offers(y);
      P.row(2 * s + kReject) = next.transpose();
      P(2 * s + kAccept, T) = 1.0;
    }
  }
  P(2 * T + kReject, T) = 1.0;
  P(2 * T + kAccept, T) = 1.0;
  Vector rho = Vector::Constant(S, 1.0 / S);
  return {FiniteMdp(std::move(cost), std::move(P), p.gamma, std::move(rho)), y_max};
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

StochasticPolicy threshold_policy(const StoppingProblem& p, const ThresholdParams& params) {
  if (params.theta.size() != 2 * p.n_contexts()) throw DimensionError("need 2|X| threshold parameters");
  if (!params.theta.allFinite()) throw InvalidArgument("threshold parameters must be finite");
  Matrix probs(p.n_states(), 2);
  for (int x = 0; x < p.n_contexts(); ++x) {
    for (int y = 0; y < p.n_offers(); ++y) {
      const double f = logistic(params.bias(x) + params.slope(x) * p.offers(y));
      probs(p.state_index(x, y), kAccept) = f;
      probs(p.state_index(x, y), kReject) = 1.0 - f;
    }
  }
  probs.row(p.terminal_state()).setConstant(0.5);
  return StochasticPolicy(std::move(probs));
}

GradientReport threshold_policy_gradient(const StoppingProblem& p, const StoppingMdp& built,
                                         const ThresholdParams& params) {
  const StochasticPolicy policy = threshold_policy(p, params);
  const PolicyGradientTerms terms = policy_gradient_terms(built.mdp, policy);
  Vector grad = Vector::Zero(2 * p.n_contexts());
  for (int x = 0; x < p.n_contexts(); ++x) {
    for (int y = 0; y < p.n_offers(); ++y) {
      const int s = p.state_index(x, y);
      const double f = policy(s, kAccept);
      // d pi(s, accept) = f (1 - f) dz, d pi(s, reject) = -that.
      const double dz = (terms.weights(s, kAccept) - terms.weights(s, kReject)) * f * (1.0 - f);
      grad(2 * x) += dz;
      grad(2 * x + 1) += dz * p.offers(y);
    }
  }
  GradientReport report;
  report.gradient = std::move(grad);
  report.loss = terms.loss;
  report.grad_norm = report.gradient.norm();
  return report;
}

double stopping_reward(const StoppingProblem& p, const StoppingMdp& built, const ThresholdParams& params) {
  return built.decode_objective(average_cost(built.mdp, threshold_policy(p, params)));
}

namespace {

Vector continuation_from_values(const StoppingProblem& p, const Vector& reward_values) {
  Vector c(p.n_contexts());
  for (int x = 0; x < p.n_contexts(); ++x) {
    double total = 0.0;
    for (int x2 = 0; x2 < p.n_contexts(); ++x2) {
      double inner = 0.0;
      for (int y2 = 0; y2 < p.n_offers(); ++y2) {
        inner += p.emission(x2, y2) * reward_values(p.state_index(x2, y2));
      }
      total += p.context_kernel(x, x2) * inner;
    }
    c(x) = p.gamma * total;
  }
  return c;
}

}  // namespace

Vector continuation_value(const StoppingProblem& p, const StoppingMdp& built,
                          const ThresholdParams& params) {
  const ValueFunction J = evaluate_policy(built.mdp, threshold_policy(p, params));
  return continuation_from_values(p, built.decode_values(J.values));
}

StoppingDescent stopping_descent_direction(const StoppingProblem& p, const StoppingMdp& built,
                                           const ThresholdParams& params) {
  const StochasticPolicy policy = threshold_policy(p, params);
  const ValueFunction J = evaluate_policy(built.mdp, policy);
  const OccupancyMeasure eta = occupancy(built.mdp, policy);
  StoppingDescent out;
  out.continuation = continuation_from_values(p, built.decode_values(J.values));
  out.direction.resize(2 * p.n_contexts());
  double total = 0.0;
  for (int x = 0; x < p.n_contexts(); ++x) {
    out.direction(2 * x) = -out.continuation(x);
    out.direction(2 * x + 1) = 1.0;
    for (int y = 0; y < p.n_offers(); ++y) {
      const int s = p.state_index(x, y);
      const double f = policy(s, kAccept);
      const double gap = p.offers(y) - out.continuation(x);
      total += eta.eta(s) * gap * gap * f * (1.0 - f);
    }
  }
  out.reward_derivative = total / (1.0 - p.gamma);
  return out;
}

ThresholdEvaluation evaluate_threshold(const StoppingProblem& p, const ThresholdParams& params,
                                       bool with_gradient) {
  p.validate();
  if (params.theta.size() != 2 * p.n_contexts()) throw DimensionError("need 2|X| threshold parameters");
  const int X = p.n_contexts();
  const int Y = p.n_offers();
  const double g = p.gamma;
  const double rho0 = 1.0 / p.n_states();
  const double y_max = std::max(0.0, p.offers.maxCoeff());

  Matrix accept(X, Y);
  for (int x = 0; x < X; ++x) {
    for (int y = 0; y < Y; ++y) accept(x, y) = logistic(params.bias(x) + params.slope(x) * p.offers(y));
  }
  const Vector a = (p.emission.array() * accept.array()).rowwise().sum();
  const Vector m = p.emission.cwiseProduct(accept) * p.offers;

  // c = gamma P (m + diag(1 - a) c)
  const Matrix reject_diag = (Vector::Ones(X) - a).asDiagonal();
  const Matrix I = Matrix::Identity(X, X);
  ThresholdEvaluation out;
  out.continuation = (I - g * p.context_kernel * reject_diag).partialPivLu().solve(g * p.context_kernel * m);

  double total = 0.0;
  for (int x = 0; x < X; ++x) {
    for (int y = 0; y < Y; ++y) {
      total += accept(x, y) * p.offers(y) + (1.0 - accept(x, y)) * out.continuation(x);
    }
  }
  out.reward = rho0 * total;
  out.cost_loss = y_max * (1.0 - rho0) - out.reward;
  if (!with_gradient) return out;

  // Rejection mass d(x) = sum_y eta(x, y)(1 - pi(x, y)) solves
  // d = (1 - gamma) r0 + gamma diag(1 - a) P^T d.
  const Vector r0 = rho0 * (Matrix::Ones(X, Y) - accept).rowwise().sum();
  const Vector d = (I - g * reject_diag * p.context_kernel.transpose()).partialPivLu().solve((1.0 - g) * r0);
  const Vector z = p.context_kernel.transpose() * d;
  out.eta.resize(p.n_states());
  out.gradient = Vector::Zero(2 * X);
  for (int x = 0; x < X; ++x) {
    for (int y = 0; y < Y; ++y) {
      const double e = (1.0 - g) * rho0 + g * p.emission(x, y) * z(x);
      out.eta(p.state_index(x, y)) = e;
      const double f = accept(x, y);
      const double dz = -e / (1.0 - g) * (p.offers(y) - out.continuation(x)) * f * (1.0 - f);
      out.gradient(2 * x) += dz;
      out.gradient(2 * x + 1) += dz * p.offers(y);
    }
  }
  out.eta(p.terminal_state()) = 1.0 - out.eta.head(X * Y).sum();
  return out;
}

StoppingOptimum solve_stopping(const StoppingProblem& p, const StoppingMdp& built) {
  StoppingOptimum opt{policy_iteration(built.mdp), 0.0, {}, true};
  opt.cost_loss = built.mdp.rho().dot(opt.solution.values.values);
  opt.thresholds.assign(static_cast<std::size_t>(p.n_contexts()), std::numeric_limits<double>::infinity());
  std::vector<int> order(static_cast<std::size_t>(p.n_offers()));
  for (int y = 0; y < p.n_offers(); ++y) order[static_cast<std::size_t>(y)] = y;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p.offers(a) < p.offers(b); });
  for (int x = 0; x < p.n_contexts(); ++x) {
    bool seen_accept = false;
    for (int y : order) {
      const bool accept = opt.solution.policy(p.state_index(x, y), kAccept) > 0.5;
      if (accept && !seen_accept) {
        seen_accept = true;
        opt.thresholds[static_cast<std::size_t>(x)] = p.offers(y);
      } else if (!accept && seen_accept) {
        opt.up_closed = false;
      }
    }
  }
  return opt;
}

StoppingProblem random_stopping_problem(int n_contexts, int n_offers, std::uint64_t seed, double gamma) {
  if (n_contexts < 1 || n_offers < 1) throw InvalidArgument("need positive sizes");
  Rng rng(seed);
  StoppingProblem p;
  p.gamma = gamma;
  p.offers.resize(n_offers);
  for (int y = 0; y < n_offers; ++y) p.offers(y) = rng.uniform();
  std::sort(p.offers.begin(), p.offers.end());
  p.context_kernel.resize(n_contexts, n_contexts);
  for (int x = 0; x < n_contexts; ++x) {
    for (int x2 = 0; x2 < n_contexts; ++x2) p.context_kernel(x, x2) = rng.uniform();
    p.context_kernel.row(x) /= p.context_kernel.row(x).sum();
  }
  p.emission.resize(n_contexts, n_offers);
  for (int x = 0; x < n_contexts; ++x) {
    for (int y = 0; y < n_offers; ++y) p.emission(x, y) = rng.uniform();
    p.emission.row(x) /= p.emission.row(x).sum();
  }
  return p;
}

}  // namespace pgland
