#include <benchmark/benchmark.h>

#include "pgland/inventory.hpp"
#include "pgland/lqr.hpp"
#include "pgland/mdp.hpp"
#include "pgland/reinforce.hpp"
#include "pgland/stopping.hpp"
#include "pgland/tabular.hpp"

using namespace pgland;

namespace {

void BM_PolicyEvaluation(benchmark::State& state) {
  const int S = static_cast<int>(state.range(0));
  const FiniteMdp mdp = random_mdp(S, 20, 1);
  const StochasticPolicy pi = StochasticPolicy::uniform(S, 20);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_policy(mdp, pi));
}
BENCHMARK(BM_PolicyEvaluation)->Arg(10)->Arg(100)->Arg(400);

void BM_ExactPolicyGradient(benchmark::State& state) {
  const int S = static_cast<int>(state.range(0));
  const FiniteMdp mdp = random_mdp(S, 20, 2);
  const SoftmaxParams p = SoftmaxParams::zeros(S, 20);
  for (auto _ : state) benchmark::DoNotOptimize(exact_policy_gradient(mdp, p));
}
BENCHMARK(BM_ExactPolicyGradient)->Arg(10)->Arg(100);

void BM_PolicyIteration(benchmark::State& state) {
  const FiniteMdp mdp = random_mdp(static_cast<int>(state.range(0)), 20, 3);
  for (auto _ : state) benchmark::DoNotOptimize(policy_iteration(mdp));
}
BENCHMARK(BM_PolicyIteration)->Arg(100);

void BM_ThresholdEvaluation(benchmark::State& state) {
  const StoppingProblem p = random_stopping_problem(10, 50, 4);
  const ThresholdParams th = ThresholdParams::zeros(10);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_threshold(p, th));
}
BENCHMARK(BM_ThresholdEvaluation);

void BM_ThresholdGradientGeneric(benchmark::State& state) {
  const StoppingProblem p = random_stopping_problem(10, 50, 4);
  const StoppingMdp built = build_stopping_mdp(p);
  const ThresholdParams th = ThresholdParams::zeros(10);
  for (auto _ : state) benchmark::DoNotOptimize(threshold_policy_gradient(p, built, th));
}
BENCHMARK(BM_ThresholdGradientGeneric);

void BM_LqrGradient(benchmark::State& state) {
  const LqrSystem sys = random_lqr_system(3, 2, 5);
  const LinearGain gain{Matrix::Zero(2, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(lqr_gradient(sys, gain));
}
BENCHMARK(BM_LqrGradient);

void BM_InventoryMcGradient(benchmark::State& state) {
  const InventoryProblem prob;
  const BaseStock theta{Vector::Constant(prob.horizon, 5.0)};
  const long n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(mc_gradient(prob, theta, n, 6, 1));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_InventoryMcGradient)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_ReinforceEstimate(benchmark::State& state) {
  const FiniteMdp mdp = random_mdp(3, 2, 7);
  const SoftmaxParams p = SoftmaxParams::zeros(3, 2);
  const long n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(reinforce_estimate(mdp, p, n, 8, 1));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ReinforceEstimate)->Arg(10'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
