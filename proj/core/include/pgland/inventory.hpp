#pragma once

#include <cstdint>
#include <functional>

#include "pgland/error.hpp"
#include "pgland/mdp.hpp"
#include "pgland/random.hpp"

namespace pgland {

struct UniformLaw {
  double lo = 0.0;
  double hi = 0.0;

  double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
  double mean() const { return 0.5 * (lo + hi); }
};

/// Multi-period newsvendor with backlogging. In period t the policy orders
/// a_t >= 0, demand w_t ~ U[0, demand_max] arrives, and the period costs
/// c a_t + r(s_t + a_t - w_t) with r(x) = p max(0, -x) + b max(0, x).
struct InventoryProblem {
  int horizon = 5;
  double order_cost = 1.0;    // c
  double holding_cost = 1.0;  // b
  double backlog_cost = 2.0;  // p
  double demand_max = 10.0;
  UniformLaw init_state{0.0, 5.0};

  /// Throws InvalidArgument unless costs are positive and p > c.
  void validate() const;
  double stage_cost(double order, double end_inventory) const;
  /// Derivative of r; zero is returned at the kink x = 0.
  double holding_backlog_slope(double x) const;
};

/// Order-up-to levels, one per period.
struct BaseStock {
  Vector theta;
};

struct EpisodePath {
  Vector states;   // s_1 .. s_{H+1}; s_{H+1} is the inventory left after period H
  Vector orders;   // a_1 .. a_H
  Vector demands;  // w_1 .. w_H
  double total_cost = 0.0;
};

// The pathwise derivative does not exist at this sample path.
class KinkError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

EpisodePath simulate_episode(const InventoryProblem& prob, const BaseStock& policy,
                             const Vector& demands, double s1);

/// Derivative of the episode cost with respect to each threshold along a fixed
/// demand path. With tau_i the next period after i that places an order:
///   0                                    if s_i > theta_i,
///   sum_{h=i+1}^{tau_i} r'(s_h)          if an order follows,
///   c + sum_{h=i+1}^{H+1} r'(s_h)        otherwise,
/// where s_h is the pre-order inventory of period h and s_{H+1} the closing
/// inventory. Throws KinkError if some s_i is within 1e-12 of theta_i or some
/// s_h (h >= 2) within 1e-12 of zero.
Vector pathwise_gradient(const InventoryProblem& prob, const BaseStock& policy, const Vector& demands,
                         double s1);

struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
};

struct McGradient {
  Vector mean;
  Vector std_err;
  long resampled = 0;  // paths redrawn after hitting a kink
};

/// Path `i` draws (s_1, w_1..w_H) from Rng(substream_seed(seed, i)), so results
/// are identical for any thread count. `threads` = 0 uses all cores.
McEstimate mc_cost(const InventoryProblem& prob, const BaseStock& policy, long n_paths,
                   std::uint64_t seed, int threads = 0);

/// Mean and standard error of cost(theta_a) - cost(theta_b) on common paths.
McEstimate mc_cost_difference(const InventoryProblem& prob, const BaseStock& a, const BaseStock& b,
                              long n_paths, std::uint64_t seed, int threads = 0);

/// Average pathwise gradient. Kinked paths are redrawn from the same
/// substream; more than 0.1% redraws throws NumericalError.
McGradient mc_gradient(const InventoryProblem& prob, const BaseStock& policy, long n_paths,
                       std::uint64_t seed, int threads = 0);

/// Draws (s_1, demands) once so a sample-average objective can be evaluated
/// repeatedly. Path i comes from the same substream as in mc_cost, so
/// sample_cost(prob, policy, draw_paths(prob, n, seed)) equals mc_cost(prob,
/// policy, n, seed) exactly; sample_gradient likewise matches mc_gradient.
struct PathSample {
  Vector s1;
  Matrix demands;  // periods x paths
  std::uint64_t seed = 0;
  long size() const { return static_cast<long>(s1.size()); }
};

PathSample draw_paths(const InventoryProblem& prob, long n_paths, std::uint64_t seed, int threads = 0);
McEstimate sample_cost(const InventoryProblem& prob, const BaseStock& policy, const PathSample& sample,
                       int threads = 0);
McGradient sample_gradient(const InventoryProblem& prob, const BaseStock& policy, const PathSample& sample,
                           int threads = 0);

/// Golden-section search for the minimizer of a unimodal f on [lo, hi];
/// returns x within `tol` of the minimizer.
double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol);

struct BaseStockOracleOptions {
  long paths_per_eval = 100'000;
  std::uint64_t seed = 0;
  double tol = 1e-4;
  int threads = 0;
};

/// Optimal base-stock levels by backward induction. For stage h, with
/// thresholds h+1..H already fixed, golden-section search minimizes the Monte
/// Carlo estimate of the cost from stage h onward when the stage starts below
/// the bracket (so the policy orders up to theta), over [0, demand_max * H].
/// Each stage uses one set of demand paths for every evaluation.
BaseStock optimal_basestock(const InventoryProblem& prob, const BaseStockOracleOptions& options = {});

}  // namespace pgland
