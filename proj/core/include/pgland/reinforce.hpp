#pragma once

#include <cstdint>
#include <vector>

#include "pgland/mdp.hpp"
#include "pgland/tabular.hpp"

namespace pgland {

/// One episode of the geometric-horizon sampler: decisions at t = 0..H and
/// the state s_{H+1} reached afterwards.
struct Trajectory {
  std::vector<int> states;   // s_0 .. s_{H+1}
  std::vector<int> actions;  // a_0 .. a_H
  std::vector<double> costs; // c_0 .. c_H
  long horizon = 0;          // H

  double total_cost() const;
};

/// s_0 ~ rho, H ~ Geometric(1 - gamma) counting failures (support 0, 1, ...),
/// then H + 1 decisions under softmax(theta). Deterministic per seed.
Trajectory sample_trajectory(const FiniteMdp& mdp, const SoftmaxParams& params, std::uint64_t seed);

/// c(tau) sum_t grad log pi(s_t, a_t), flattened like SoftmaxParams::flat().
/// d log pi(s, a) / d theta_sj = 1(a = j) - pi(s, j).
Vector reinforce_gradient(const Trajectory& traj, const SoftmaxParams& params);

struct ReinforceEstimate {
  Vector mean;
  Vector std_err;
  long n_samples = 0;
};

/// Sample mean of reinforce_gradient over trajectories drawn with seeds
/// substream_seed(seed, i). Identical for any thread count.
ReinforceEstimate reinforce_estimate(const FiniteMdp& mdp, const SoftmaxParams& params, long n_samples,
                                     std::uint64_t seed, int threads = 0);

}  // namespace pgland
