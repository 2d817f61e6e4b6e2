#include "pgland/mdp.hpp"

#include <cmath>
#include <string>

#include "pgland/error.hpp"
#include "pgland/random.hpp"

namespace pgland {

namespace {

constexpr double kStochasticTol = 1e-12;
// Systems with more unknowns than this are solved by fixed-point sweeps.
constexpr Eigen::Index kDirectSolveLimit = 10'000;
constexpr double kSweepTol = 1e-12;

void require_stochastic_rows(const Matrix& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() < 0.0).any() || !m.row(r).allFinite()) {
      throw InvalidArgument(std::string(what) + ": row " + std::to_string(r) +
                            " has negative or non-finite entries");
    }
    if (std::abs(m.row(r).sum() - 1.0) > kStochasticTol) {
      throw InvalidArgument(std::string(what) + ": row " + std::to_string(r) +
                            " does not sum to 1");
    }
  }
}

void require_policy_shape(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw DimensionError("policy is " + std::to_string(policy.n_states()) + "x" +
                         std::to_string(policy.n_actions()) + " but the MDP has " +
                         std::to_string(mdp.n_states()) + " states and " +
                         std::to_string(mdp.n_actions()) + " actions");
  }
}

void require_value_shape(const FiniteMdp& mdp, const Vector& v, const char* what) {
  if (v.size() != mdp.n_states()) {
    throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) +
                         " entries, MDP has " + std::to_string(mdp.n_states()) + " states");
  }
}

// Solves x = b + gamma * M x for a substochastic-times-gamma matrix M, either
// directly or by sweeps when the system is large.
Vector solve_discounted(const Matrix& M, const Vector& b, double gamma, bool transpose) {
  const Eigen::Index n = M.rows();
  if (n <= kDirectSolveLimit) {
    Matrix system = Matrix::Identity(n, n);
    if (transpose) {
      system.noalias() -= gamma * M.transpose();
    } else {
      system.noalias() -= gamma * M;
    }
    Eigen::PartialPivLU<Matrix> lu(system);
    Vector x = lu.solve(b);
    if (!x.allFinite()) throw NumericalError("linear solve produced non-finite values");
    return x;
  }
  Vector x = b;
  for (int sweep = 0; sweep < 1'000'000; ++sweep) {
    Vector next = transpose ? Vector(b + gamma * (M.transpose() * x)) : Vector(b + gamma * (M * x));
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x.swap(next);
    if (change <= kSweepTol * (1.0 + x.lpNorm<Eigen::Infinity>())) return x;
  }
  throw NumericalError("fixed-point sweeps did not converge");
}

}  // namespace

FiniteMdp::FiniteMdp(Matrix cost, Matrix transition, double gamma, Vector rho)
    : cost_(std::move(cost)), transition_(std::move(transition)), gamma_(gamma), rho_(std::move(rho)) {
  const Eigen::Index S = cost_.rows();
  const Eigen::Index A = cost_.cols();
  if (S < 1 || A < 1) throw DimensionError("MDP needs at least one state and one action");
  if (transition_.rows() != S * A || transition_.cols() != S) {
    throw DimensionError("transition matrix must be (n_states*n_actions) x n_states");
  }
  if (rho_.size() != S) throw DimensionError("rho must have one entry per state");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!cost_.allFinite() || (cost_.array() < 0.0).any()) {
    throw InvalidArgument("costs must be finite and nonnegative");
  }
  require_stochastic_rows(transition_, "transition");
  if (!rho_.allFinite() || (rho_.array() <= 0.0).any()) {
    throw InvalidArgument("rho must be strictly positive on every state");
  }
  if (std::abs(rho_.sum() - 1.0) > kStochasticTol) throw InvalidArgument("rho must sum to 1");
}

FiniteMdp FiniteMdp::with_gamma(double gamma) const { return {cost_, transition_, gamma, rho_}; }
FiniteMdp FiniteMdp::with_rho(Vector rho) const { return {cost_, transition_, gamma_, std::move(rho)}; }
FiniteMdp FiniteMdp::with_cost(Matrix cost) const { return {std::move(cost), transition_, gamma_, rho_}; }

StochasticPolicy::StochasticPolicy(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) throw DimensionError("empty policy");
  require_stochastic_rows(probs_, "policy");
}

StochasticPolicy StochasticPolicy::uniform(int n_states, int n_actions) {
  return StochasticPolicy(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

StochasticPolicy StochasticPolicy::deterministic(const std::vector<int>& actions, int n_actions) {
  Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) throw DimensionError("action index out of range");
    probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return StochasticPolicy(std::move(probs));
}

std::vector<int> StochasticPolicy::modal_actions() const {
  std::vector<int> out(static_cast<std::size_t>(n_states()));
  for (int s = 0; s < n_states(); ++s) {
    int best = 0;
    for (int a = 1; a < n_actions(); ++a) {
      if (probs_(s, a) > probs_(s, best)) best = a;
    }
    out[static_cast<std::size_t>(s)] = best;
  }
  return out;
}

Matrix policy_transition(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  require_policy_shape(mdp, policy);
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  Matrix P_pi = Matrix::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double p = policy(s, a);
      if (p != 0.0) P_pi.row(s).noalias() += p * mdp.transition_row(s, a);
    }
  }
  return P_pi;
}

Vector policy_cost(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  require_policy_shape(mdp, policy);
  return mdp.cost().cwiseProduct(policy.probs()).rowwise().sum();
}

QFunction backup(const FiniteMdp& mdp, const ValueFunction& J) {
  require_value_shape(mdp, J.values, "value function");
  const Vector next = mdp.transition() * J.values;  // indexed s * A + a
  const Eigen::Map<const Matrix> expected(next.data(), mdp.n_actions(), mdp.n_states());
  return {mdp.cost() + mdp.gamma() * expected.transpose()};
}

ValueFunction evaluate_policy(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  return {solve_discounted(policy_transition(mdp, policy), policy_cost(mdp, policy), mdp.gamma(),
                           /*transpose=*/false)};
}

QFunction solve_q(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  return backup(mdp, evaluate_policy(mdp, policy));
}

ValueFunction values_from_q(const QFunction& q, const StochasticPolicy& policy) {
  if (q.values.rows() != policy.n_states() || q.values.cols() != policy.n_actions()) {
    throw DimensionError("Q-function and policy shapes differ");
  }
  return {q.values.cwiseProduct(policy.probs()).rowwise().sum()};
}

ValueFunction bellman_policy(const FiniteMdp& mdp, const ValueFunction& J,
                             const StochasticPolicy& policy) {
  require_policy_shape(mdp, policy);
  return values_from_q(backup(mdp, J), policy);
}

ValueFunction bellman_optimal(const FiniteMdp& mdp, const ValueFunction& J) {
  const QFunction q = backup(mdp, J);
  return {q.values.rowwise().minCoeff()};
}

StochasticPolicy greedy_policy(const QFunction& q) {
  std::vector<int> actions(static_cast<std::size_t>(q.values.rows()));
  for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
    Eigen::Index best = 0;
    q.values.row(s).minCoeff(&best);  // first minimal index
    actions[static_cast<std::size_t>(s)] = static_cast<int>(best);
  }
  return StochasticPolicy::deterministic(actions, static_cast<int>(q.values.cols()));
}

PolicyIterationResult policy_iteration(const FiniteMdp& mdp, int max_iterations) {
  const int S = mdp.n_states();
  std::vector<int> actions = greedy_policy(QFunction{mdp.cost()}).modal_actions();
  PolicyIterationResult result{StochasticPolicy::deterministic(actions, mdp.n_actions()), {}, 0, {}};
  for (int it = 1; it <= max_iterations; ++it) {
    result.iterations = it;
    result.values = evaluate_policy(mdp, result.policy);
    result.value_history.push_back(result.values.values);
    const QFunction q = backup(mdp, result.values);
    bool changed = false;
    for (int s = 0; s < S; ++s) {
      Eigen::Index best = 0;
      const double best_q = q.values.row(s).minCoeff(&best);
      const double current_q = q.values(s, actions[static_cast<std::size_t>(s)]);
      if (best_q < current_q - 1e-12 * (1.0 + std::abs(current_q))) {
        actions[static_cast<std::size_t>(s)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) return result;
    result.policy = StochasticPolicy::deterministic(actions, mdp.n_actions());
  }
  throw NumericalError("policy iteration did not converge in " + std::to_string(max_iterations) +
                       " iterations");
}

OccupancyMeasure occupancy(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  const Vector rhs = (1.0 - mdp.gamma()) * mdp.rho();
  return {solve_discounted(policy_transition(mdp, policy), rhs, mdp.gamma(), /*transpose=*/true),
          true};
}

double weighted_bellman_error(const ValueFunction& J, const FiniteMdp& mdp,
                              const OccupancyMeasure& eta) {
  require_value_shape(mdp, eta.eta, "occupancy measure");
  const ValueFunction TJ = bellman_optimal(mdp, J);
  return eta.eta.dot((J.values - TJ.values).cwiseAbs());
}

double average_cost(const FiniteMdp& mdp, const StochasticPolicy& policy) {
  return mdp.rho().dot(evaluate_policy(mdp, policy).values);
}

FiniteMdp random_mdp(int n_states, int n_actions, std::uint64_t seed, const RandomMdpOptions& options) {
  if (n_states < 1 || n_actions < 1) throw InvalidArgument("random_mdp needs positive sizes");
  Rng rng(seed);
  Matrix cost(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) cost(s, a) = rng.uniform();
  }
  Matrix P(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    for (int s2 = 0; s2 < n_states; ++s2) P(r, s2) = rng.uniform();
    P.row(r) /= P.row(r).sum();
  }
  Vector rho = options.rho ? *options.rho : Vector::Constant(n_states, 1.0 / n_states);
  return {std::move(cost), std::move(P), options.gamma, std::move(rho)};
}

}  // namespace pgland
