#include <cmath>

#include <gtest/gtest.h>

#include "pgland/parallel.hpp"
#include "pgland/reinforce.hpp"
#include "support.hpp"

using namespace pgland;

TEST(SampleTrajectory, VanishingDiscountHasOneDecision) {
  const FiniteMdp mdp = random_mdp(3, 2, 1, {1e-12, std::nullopt});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Trajectory t = sample_trajectory(mdp, SoftmaxParams::zeros(3, 2), seed);
    EXPECT_EQ(t.horizon, 0);
    EXPECT_EQ(t.actions.size(), 1u);
    EXPECT_EQ(t.states.size(), 2u);
  }
}

TEST(SampleTrajectory, ConsistentWithModelAndDeterministic) {
  const FiniteMdp mdp = random_mdp(4, 3, 2);
  Rng rng(2);
  SoftmaxParams p = SoftmaxParams::zeros(4, 3);
  for (int s = 0; s < 4; ++s) p.theta.row(s) = test::random_vector(rng, 3).transpose();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Trajectory t = sample_trajectory(mdp, p, seed);
    ASSERT_EQ(t.actions.size(), static_cast<std::size_t>(t.horizon + 1));
    ASSERT_EQ(t.states.size(), t.actions.size() + 1);
    double total = 0.0;
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
      EXPECT_EQ(t.costs[i], mdp.cost()(t.states[i], t.actions[i]));
      EXPECT_GT(mdp.transition_row(t.states[i], t.actions[i])(t.states[i + 1]), 0.0);
      total += t.costs[i];
    }
    EXPECT_DOUBLE_EQ(t.total_cost(), total);
    const Trajectory again = sample_trajectory(mdp, p, seed);
    EXPECT_EQ(again.states, t.states);
    EXPECT_EQ(again.actions, t.actions);
  }
}

TEST(SampleTrajectory, GeometricHorizonMean) {
  const FiniteMdp mdp = random_mdp(2, 2, 3);
  RunningMoments m;
  for (std::uint64_t i = 0; i < 100'000; ++i) {
    m.add(static_cast<double>(sample_trajectory(mdp, SoftmaxParams::zeros(2, 2), substream_seed(3, i)).horizon));
  }
  EXPECT_NEAR(m.mean, 9.0, 4.0 * m.std_err());
}

TEST(SampleTrajectory, VisitFrequenciesMatchOccupancy) {
  const FiniteMdp mdp = random_mdp(3, 2, 4);
  const SoftmaxParams p = SoftmaxParams::zeros(3, 2);
  const OccupancyMeasure eta = occupancy(mdp, softmax_policy(p));
  std::vector<RunningMoments> visits(3);
  for (std::uint64_t i = 0; i < 100'000; ++i) {
    const Trajectory t = sample_trajectory(mdp, p, substream_seed(4, i));
    Vector count = Vector::Zero(3);
    for (std::size_t k = 0; k < t.actions.size(); ++k) count(t.states[k]) += 1.0;
    for (int s = 0; s < 3; ++s) visits[static_cast<std::size_t>(s)].add(count(s));
  }
  // Expected decisions in s: sum_t gamma^t P(s_t = s) = eta(s) / (1 - gamma).
  for (int s = 0; s < 3; ++s) {
    const RunningMoments& v = visits[static_cast<std::size_t>(s)];
    EXPECT_NEAR(v.mean, eta.eta(s) / (1.0 - mdp.gamma()), 4.0 * v.std_err()) << "state " << s;
  }
}

TEST(ReinforceGradient, SingleStepFormula) {
  const FiniteMdp mdp(Matrix::Constant(1, 2, 0.7), Matrix::Ones(2, 1), 0.5, Vector::Ones(1));
  Matrix th(1, 2);
  th << 0.3, -0.4;
  const SoftmaxParams p{th};
  const Vector pi = softmax_policy(p).probs().row(0).transpose();
  Trajectory t;
  t.states = {0, 0};
  t.actions = {1};
  t.costs = {0.7};
  t.horizon = 0;
  const Vector g = reinforce_gradient(t, p);
  EXPECT_NEAR(g(0), 0.7 * (0.0 - pi(0)), 1e-15);
  EXPECT_NEAR(g(1), 0.7 * (1.0 - pi(1)), 1e-15);
}

TEST(ReinforceGradient, SaturatedPolicyHasNoScore) {
  Matrix th(2, 2);
  th << 40.0, 0.0, 0.0, 40.0;
  Trajectory t;
  t.states = {0, 1, 0};
  t.actions = {0, 1};
  t.costs = {0.5, 0.25};
  t.horizon = 1;
  EXPECT_LE(reinforce_gradient(t, {th}).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ReinforceEstimate, UnbiasedAndThreadInvariant) {
  const FiniteMdp mdp = random_mdp(3, 2, 10);
  Rng rng(10);
  SoftmaxParams p = SoftmaxParams::zeros(3, 2);
  for (int s = 0; s < 3; ++s) p.theta.row(s) = test::random_vector(rng, 2).transpose();
  const ReinforceEstimate e = reinforce_estimate(mdp, p, 100'000, 11);
  const Vector exact = exact_policy_gradient(mdp, p).gradient;
  for (int i = 0; i < exact.size(); ++i) EXPECT_NEAR(e.mean(i), exact(i), 4.0 * e.std_err(i)) << "component " << i;
  const ReinforceEstimate one = reinforce_estimate(mdp, p, 10'000, 12, 1);
  const ReinforceEstimate many = reinforce_estimate(mdp, p, 10'000, 12, 4);
  EXPECT_TRUE(one.mean == many.mean);
  EXPECT_TRUE(one.std_err == many.std_err);
  EXPECT_EQ(one.n_samples, 10'000);
}
