#include "pgland/reinforce.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "pgland/error.hpp"
#include "pgland/parallel.hpp"
#include "pgland/random.hpp"

namespace pgland {

double Trajectory::total_cost() const { return std::accumulate(costs.begin(), costs.end(), 0.0); }

Trajectory sample_trajectory(const FiniteMdp& mdp, const SoftmaxParams& params, std::uint64_t seed) {
  const StochasticPolicy policy = softmax_policy(params);
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw DimensionError("softmax parameters do not match the MDP");
  }
  Rng rng(seed);
  Trajectory traj;
  traj.horizon = rng.geometric(1.0 - mdp.gamma());
  int s = rng.categorical(mdp.rho(), mdp.n_states());
  for (long t = 0; t <= traj.horizon; ++t) {
    const int a = rng.categorical(policy.probs().row(s), mdp.n_actions());
    traj.states.push_back(s);
    traj.actions.push_back(a);
    traj.costs.push_back(mdp.cost()(s, a));
    s = rng.categorical(mdp.transition_row(s, a), mdp.n_states());
  }
  traj.states.push_back(s);
  return traj;
}

Vector reinforce_gradient(const Trajectory& traj, const SoftmaxParams& params) {
  const StochasticPolicy policy = softmax_policy(params);
  Matrix score = Matrix::Zero(policy.n_states(), policy.n_actions());
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    const int s = traj.states[t];
    const int a = traj.actions[t];
    if (s < 0 || s >= policy.n_states() || a < 0 || a >= policy.n_actions()) {
      throw DimensionError("trajectory does not match the parameter shape");
    }
    if (!(policy(s, a) > 0.0)) {
      throw InvalidArgument("action " + std::to_string(a) + " has zero probability in state " +
                            std::to_string(s));
    }
    score.row(s) -= policy.probs().row(s);
    score(s, a) += 1.0;
  }
  return traj.total_cost() * SoftmaxParams{score}.flat();
}

ReinforceEstimate reinforce_estimate(const FiniteMdp& mdp, const SoftmaxParams& params, long n_samples,
                                     std::uint64_t seed, int threads) {
  if (n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
  const Eigen::Index dim = params.theta.size();
  constexpr long kChunk = 1024;
  const long n_chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<std::vector<RunningMoments>> partial(static_cast<std::size_t>(n_chunks));
  for_each_chunk(n_samples, kChunk, threads, [&](long chunk, long begin, long end) {
    std::vector<RunningMoments> m(static_cast<std::size_t>(dim));
    for (long i = begin; i < end; ++i) {
      const Trajectory traj = sample_trajectory(mdp, params, substream_seed(seed, static_cast<std::uint64_t>(i)));
      const Vector g = reinforce_gradient(traj, params);
      for (Eigen::Index j = 0; j < dim; ++j) m[static_cast<std::size_t>(j)].add(g(j));
    }
    partial[static_cast<std::size_t>(chunk)] = std::move(m);
  });
  ReinforceEstimate out;
  out.mean.resize(dim);
  out.std_err.resize(dim);
  out.n_samples = n_samples;
  for (Eigen::Index j = 0; j < dim; ++j) {
    RunningMoments total;
    for (const auto& chunk : partial) total.merge(chunk[static_cast<std::size_t>(j)]);
    out.mean(j) = total.mean;
    out.std_err(j) = total.std_err();
  }
  return out;
}

}  // namespace pgland
