#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pgland/mdp.hpp"
#include "pgland/parallel.hpp"
#include "pgland/random.hpp"
#include "support.hpp"

using namespace pgland;

namespace {

Vector value_iteration_policy(const FiniteMdp& mdp, const StochasticPolicy& pi, int sweeps) {
  Vector J = Vector::Zero(mdp.n_states());
  for (int k = 0; k < sweeps; ++k) {
    Vector next(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) {
      double v = 0.0;
      for (int a = 0; a < mdp.n_actions(); ++a) {
        v += pi(s, a) * (mdp.cost()(s, a) + mdp.gamma() * mdp.transition_row(s, a).dot(J));
      }
      next(s) = v;
    }
    J = next;
  }
  return J;
}

// Every deterministic policy, J minimized pointwise.
Vector brute_force_optimum(const FiniteMdp& mdp) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  long total = 1;
  for (int s = 0; s < S; ++s) total *= A;
  Vector best = Vector::Constant(S, std::numeric_limits<double>::infinity());
  std::vector<int> actions(static_cast<std::size_t>(S));
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int s = 0; s < S; ++s) {
      actions[static_cast<std::size_t>(s)] = static_cast<int>(c % A);
      c /= A;
    }
    const QFunction q = solve_q(mdp, StochasticPolicy::deterministic(actions, A));
    Vector J(S);
    for (int s = 0; s < S; ++s) J(s) = q.values(s, actions[static_cast<std::size_t>(s)]);
    best = best.cwiseMin(J);
  }
  return best;
}

StochasticPolicy random_policy(Rng& rng, int S, int A) {
  Matrix p(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) p(s, a) = rng.uniform() + 1e-3;
    p.row(s) /= p.row(s).sum();
  }
  return StochasticPolicy(p);
}

}  // namespace

TEST(FiniteMdp, RejectsInvalidInput) {
  const Matrix g = Matrix::Ones(2, 1);
  Matrix P(2, 2);
  P << 0.5, 0.5, 1.0, 0.0;
  const Vector rho = Vector::Constant(2, 0.5);
  EXPECT_NO_THROW(FiniteMdp(g, P, 0.9, rho));
  Matrix bad_rows = P;
  bad_rows(0, 0) = 0.7;
  EXPECT_THROW(FiniteMdp(g, bad_rows, 0.9, rho), InvalidArgument);
  EXPECT_THROW(FiniteMdp(-g, P, 0.9, rho), InvalidArgument);
  EXPECT_THROW(FiniteMdp(g, P, 1.0, rho), InvalidArgument);
  EXPECT_THROW(FiniteMdp(g, P, 0.0, rho), InvalidArgument);
  EXPECT_THROW(FiniteMdp(g, P, 0.9, Vector::Constant(2, 0.4)), InvalidArgument);
  EXPECT_THROW(FiniteMdp(g, Matrix::Constant(3, 2, 0.5), 0.9, rho), DimensionError);
  EXPECT_THROW(FiniteMdp(g, P, 0.9, Vector::Constant(3, 1.0 / 3)), DimensionError);
}

TEST(SolveQ, VanishingDiscountGivesCost) {
  const FiniteMdp mdp = random_mdp(4, 3, 21, {1e-12, std::nullopt});
  const QFunction q = solve_q(mdp, StochasticPolicy::uniform(4, 3));
  EXPECT_LE((q.values - mdp.cost()).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(SolveQ, MatchesValueIteration) {
  const FiniteMdp mdp = random_mdp(2, 2, 0);
  const StochasticPolicy pi = StochasticPolicy::deterministic({0, 0}, 2);
  const QFunction q = solve_q(mdp, pi);
  const Vector J = value_iteration_policy(mdp, pi, 10'000);
  const QFunction oracle = backup(mdp, ValueFunction{J});
  EXPECT_LE((q.values - oracle.values).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SolveQ, FixedPointOnLargeInstance) {
  const FiniteMdp mdp = random_mdp(100, 20, 1);
  const StochasticPolicy pi = StochasticPolicy::uniform(100, 20);
  const ValueFunction J = values_from_q(solve_q(mdp, pi), pi);
  EXPECT_LE((bellman_policy(mdp, J, pi).values - J.values).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SolveQ, TwoStateClosedForm) {
  Matrix g(2, 2);
  g << 1.0, 2.0, 0.5, 3.0;
  Matrix P(4, 2);
  P << 0.3, 0.7, 0.9, 0.1, 0.6, 0.4, 0.2, 0.8;
  const FiniteMdp mdp(g, P, 0.8, Vector::Constant(2, 0.5));
  Matrix probs(2, 2);
  probs << 0.25, 0.75, 0.6, 0.4;
  const StochasticPolicy pi(probs);
  // P_pi and g_pi by hand, then the 2x2 inverse by the adjugate.
  const double p00 = 0.25 * 0.3 + 0.75 * 0.9, p01 = 1.0 - p00;
  const double p10 = 0.6 * 0.6 + 0.4 * 0.2, p11 = 1.0 - p10;
  const double g0 = 0.25 * 1.0 + 0.75 * 2.0, g1 = 0.6 * 0.5 + 0.4 * 3.0;
  const double a = 1 - 0.8 * p00, b = -0.8 * p01, c = -0.8 * p10, d = 1 - 0.8 * p11;
  const double det = a * d - b * c;
  const double J0 = (d * g0 - b * g1) / det, J1 = (-c * g0 + a * g1) / det;
  const QFunction q = solve_q(mdp, pi);
  for (int s = 0; s < 2; ++s) {
    for (int act = 0; act < 2; ++act) {
      const double expect = g(s, act) + 0.8 * (P(s * 2 + act, 0) * J0 + P(s * 2 + act, 1) * J1);
      EXPECT_NEAR(q.values(s, act), expect, 1e-12);
    }
  }
}

TEST(BellmanPolicy, ZeroValueGivesExpectedCost) {
  const FiniteMdp mdp = random_mdp(5, 3, 2);
  Rng rng(1);
  const StochasticPolicy pi = random_policy(rng, 5, 3);
  const Vector T0 = bellman_policy(mdp, ValueFunction{Vector::Zero(5)}, pi).values;
  const Vector expect = (pi.probs().array() * mdp.cost().array()).rowwise().sum();
  EXPECT_LE((T0 - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BellmanOperators, AreGammaContractions) {
  const FiniteMdp mdp = random_mdp(5, 3, 2);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const StochasticPolicy pi = random_policy(rng, 5, 3);
    const ValueFunction J1{test::random_vector(rng, 5, -10, 10)};
    const ValueFunction J2{test::random_vector(rng, 5, -10, 10)};
    const double dist = (J1.values - J2.values).cwiseAbs().maxCoeff();
    const double dpi =
        (bellman_policy(mdp, J1, pi).values - bellman_policy(mdp, J2, pi).values).cwiseAbs().maxCoeff();
    const double dopt = (bellman_optimal(mdp, J1).values - bellman_optimal(mdp, J2).values).cwiseAbs().maxCoeff();
    EXPECT_LE(dpi, mdp.gamma() * dist + 1e-12);
    EXPECT_LE(dopt, mdp.gamma() * dist + 1e-12);
  }
}

TEST(BellmanOptimal, MatchesExhaustiveMinimization) {
  const FiniteMdp mdp = random_mdp(4, 4, 3);
  Rng rng(4);
  const ValueFunction J{test::random_vector(rng, 4, 0, 5)};
  const Vector TJ = bellman_optimal(mdp, J).values;
  for (int s = 0; s < 4; ++s) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 4; ++a) {
      double v = mdp.cost()(s, a);
      for (int t = 0; t < 4; ++t) v += mdp.gamma() * mdp.transition()(s * 4 + a, t) * J.values(t);
      best = std::min(best, v);
    }
    EXPECT_NEAR(TJ(s), best, 1e-14);
  }
}

TEST(BellmanOptimal, VanishingDiscountIsMinCost) {
  const FiniteMdp mdp = random_mdp(4, 3, 5, {1e-12, std::nullopt});
  Rng rng(5);
  const Vector TJ = bellman_optimal(mdp, ValueFunction{test::random_vector(rng, 4)}).values;
  EXPECT_LE((TJ - mdp.cost().rowwise().minCoeff()).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(PolicyIteration, DominantAction) {
  FiniteMdp base = random_mdp(6, 3, 8);
  Matrix g = base.cost().array() + 1.0;
  g.col(2).setZero();
  const PolicyIterationResult r = policy_iteration(base.with_cost(g));
  for (int a : r.policy.modal_actions()) EXPECT_EQ(a, 2);
}

TEST(PolicyIteration, MatchesBruteForce) {
  const FiniteMdp mdp = random_mdp(6, 3, 4);
  const PolicyIterationResult r = policy_iteration(mdp);
  EXPECT_LE((r.values.values - brute_force_optimum(mdp)).cwiseAbs().maxCoeff(), 1e-9);
  for (int s = 0; s < 6; ++s) EXPECT_DOUBLE_EQ(r.policy.probs().row(s).maxCoeff(), 1.0);
}

TEST(PolicyIteration, BellmanResidualAndMonotonicity) {
  const FiniteMdp mdp = random_mdp(100, 20, 1);
  const PolicyIterationResult r = policy_iteration(mdp);
  EXPECT_LE((bellman_optimal(mdp, r.values).values - r.values.values).cwiseAbs().maxCoeff(), 1e-10);
  ASSERT_FALSE(r.value_history.empty());
  for (std::size_t k = 1; k < r.value_history.size(); ++k) {
    const Vector diff = r.value_history[k] - r.value_history[k - 1];
    EXPECT_LE(diff.maxCoeff(), 1e-10);
    if (k + 1 < r.value_history.size()) EXPECT_LT(diff.minCoeff(), 0.0);
  }
  EXPECT_NEAR(average_cost(mdp, r.policy), mdp.rho().dot(r.values.values), 1e-12);
}

TEST(Backups, PolicyValueDominatesOptimalBackup) {
  const FiniteMdp mdp = random_mdp(8, 4, 9);
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    const StochasticPolicy pi = random_policy(rng, 8, 4);
    const ValueFunction J = evaluate_policy(mdp, pi);
    EXPECT_GE((J.values - bellman_optimal(mdp, J).values).minCoeff(), -1e-12);
  }
}

TEST(Occupancy, VanishingDiscountIsRho) {
  Vector rho(4);
  rho << 0.1, 0.2, 0.3, 0.4;
  const FiniteMdp mdp = random_mdp(4, 2, 5, {1e-12, rho});
  const OccupancyMeasure eta = occupancy(mdp, StochasticPolicy::uniform(4, 2));
  EXPECT_TRUE(eta.normalized);
  EXPECT_LE((eta.eta - rho).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Occupancy, TruncatedSeriesAndBalance) {
  const FiniteMdp mdp = random_mdp(5, 2, 5);
  const StochasticPolicy pi = StochasticPolicy::uniform(5, 2);
  const OccupancyMeasure eta = occupancy(mdp, pi);
  const Matrix Ppi = policy_transition(mdp, pi);
  Eigen::RowVectorXd term = mdp.rho().transpose();
  Eigen::RowVectorXd series = Eigen::RowVectorXd::Zero(5);
  double discount = 1.0;
  for (int t = 0; t <= 1000; ++t) {
    series += discount * term;
    term = term * Ppi;
    discount *= mdp.gamma();
  }
  series *= 1.0 - mdp.gamma();
  EXPECT_LE((eta.eta - series.transpose()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(eta.eta.sum(), 1.0, 1e-9);
  const Vector balance = eta.eta.transpose() * (Matrix::Identity(5, 5) - mdp.gamma() * Ppi);
  EXPECT_LE((balance - (1.0 - mdp.gamma()) * mdp.rho()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(WeightedBellmanError, Cases) {
  const FiniteMdp mdp = random_mdp(4, 2, 6);
  const PolicyIterationResult opt = policy_iteration(mdp);
  const OccupancyMeasure uniform{Vector::Constant(4, 0.25), true};
  EXPECT_LE(weighted_bellman_error(opt.values, mdp, uniform), 1e-9);

  // J = J* + c / (1 - gamma) makes J - TJ = c everywhere.
  const double c = 0.7;
  const ValueFunction shifted{opt.values.values.array() + c / (1.0 - mdp.gamma())};
  EXPECT_NEAR(weighted_bellman_error(shifted, mdp, uniform), c, 1e-12);

  Rng rng(6);
  const ValueFunction J{test::random_vector(rng, 4, 0, 3)};
  const OccupancyMeasure eta = occupancy(mdp, random_policy(rng, 4, 2));
  const Vector TJ = bellman_optimal(mdp, J).values;
  double direct = 0.0;
  for (int s = 0; s < 4; ++s) direct += eta.eta(s) * std::abs(J.values(s) - TJ(s));
  EXPECT_DOUBLE_EQ(weighted_bellman_error(J, mdp, eta), direct);
}

TEST(AverageCost, LinearInCosts) {
  const FiniteMdp mdp = random_mdp(6, 3, 10);
  const StochasticPolicy pi = StochasticPolicy::uniform(6, 3);
  EXPECT_NEAR(average_cost(mdp.with_cost(2.0 * mdp.cost()), pi), 2.0 * average_cost(mdp, pi), 1e-12);
}

TEST(AverageCost, MatchesMonteCarlo) {
  const FiniteMdp mdp = random_mdp(3, 2, 7);
  Rng prng(70);
  const StochasticPolicy pi = random_policy(prng, 3, 2);
  // Undiscounted cost over a Geometric(1 - gamma) number of extra steps has
  // the discounted cost as its mean.
  Rng rng(71);
  RunningMoments m;
  for (long i = 0; i < 1'000'000; ++i) {
    int s = rng.categorical(mdp.rho(), 3);
    double total = 0.0;
    for (;;) {
      const int a = rng.categorical(pi.probs().row(s), 2);
      total += mdp.cost()(s, a);
      if (rng.uniform() >= mdp.gamma()) break;
      s = rng.categorical(mdp.transition_row(s, a), 3);
    }
    m.add(total);
  }
  EXPECT_NEAR(average_cost(mdp, pi), m.mean, 4.0 * m.std_err());
}

TEST(RandomMdp, DeterministicAndSingleState) {
  const FiniteMdp a = random_mdp(7, 3, 42);
  const FiniteMdp b = random_mdp(7, 3, 42);
  EXPECT_TRUE(a.cost() == b.cost());
  EXPECT_TRUE(a.transition() == b.transition());
  EXPECT_TRUE(a.rho() == b.rho());
  EXPECT_GE(a.cost().minCoeff(), 0.0);
  EXPECT_LE(a.cost().maxCoeff(), 1.0);
  EXPECT_LE((a.transition().rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);

  const FiniteMdp one = random_mdp(1, 1, 3);
  EXPECT_NEAR(average_cost(one, StochasticPolicy::uniform(1, 1)), one.cost()(0, 0) / (1.0 - one.gamma()), 1e-12);
  const FiniteMdp big = random_mdp(100, 20, 5);
  EXPECT_EQ(big.n_states(), 100);
  EXPECT_EQ(big.n_actions(), 20);
  EXPECT_DOUBLE_EQ(big.gamma(), 0.9);
}

TEST(Parallel, ChunkedReductionIndependentOfThreads) {
  auto reduce = [](int threads) {
    const long n = 10'000;
    std::vector<RunningMoments> parts(5);
    for_each_chunk(n, 2048, threads, [&](long chunk, long begin, long end) {
      RunningMoments m;
      for (long i = begin; i < end; ++i) {
        Rng rng(substream_seed(9, static_cast<std::uint64_t>(i)));
        m.add(rng.normal());
      }
      parts[static_cast<std::size_t>(chunk)] = m;
    });
    RunningMoments total;
    for (const auto& p : parts) total.merge(p);
    return total;
  };
  const RunningMoments one = reduce(1);
  for (int t : {2, 3, 8}) {
    const RunningMoments many = reduce(t);
    EXPECT_EQ(one.count, many.count);
    EXPECT_EQ(one.mean, many.mean);
    EXPECT_EQ(one.m2, many.m2);
  }
}

TEST(Parallel, MergeMatchesSequential) {
  Rng rng(2);
  RunningMoments all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-3, 7);
    all.add(x);
    (i < 400 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_EQ(left.count, all.count);
  EXPECT_NEAR(left.mean, all.mean, 1e-12);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-10);
}

TEST(Parallel, LowestChunkExceptionWins) {
  try {
    for_each_chunk(100, 10, 4, [](long chunk, long, long) {
      if (chunk == 3 || chunk == 7) throw InvalidArgument("chunk " + std::to_string(chunk));
    });
    FAIL() << "no exception";
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "chunk 3");
  }
}

TEST(Rng, UniformRangeAndGeometricMean) {
  Rng rng(11);
  RunningMoments geo;
  for (int i = 0; i < 200'000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    geo.add(static_cast<double>(rng.geometric(0.1)));
  }
  EXPECT_NEAR(geo.mean, 9.0, 4.0 * geo.std_err());
  EXPECT_NE(substream_seed(1, 0), substream_seed(1, 1));
  EXPECT_NE(substream_seed(1, 0), substream_seed(2, 0));
}
