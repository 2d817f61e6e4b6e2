#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "pgland/error.hpp"
#include "pgland/mdp.hpp"

namespace pgland {

/// Something to minimize. `loss` may throw InfeasibleParameter (or return a
/// non-finite value) for parameters outside its domain; the line search treats
/// that as a failed trial step.
struct Objective {
  std::function<double(const Vector&)> loss;
  std::function<Vector(const Vector&)> gradient;
  int dim = 0;
  std::optional<double> oracle_optimum;
  // Applied to every trial point, e.g. a clamp onto a box.
  std::function<Vector(Vector)> projection;
};

struct LineSearchConfig {
  double beta = 0.5;
  int max_halvings = 60;
};

struct StopRule {
  // Stop once ||grad|| <= grad_tol_scale * (1 + |loss|).
  double grad_tol_scale = 1e-8;
  int max_iters = 10'000;
};

struct RunRow {
  int iteration = 0;
  double loss = 0.0;
  double optimality_gap = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;
  double step_size = 0.0;
  double wall_time_s = 0.0;
};

struct RunRecord {
  std::vector<RunRow> rows;
};

class LineSearchError : public NumericalError {
 public:
  LineSearchError(const std::string& what, double last_step)
      : NumericalError(what), last_step_(last_step) {}
  double last_step() const { return last_step_; }

 private:
  double last_step_;
};

/// Backtracking from t = 1 / ||grad||: returns the first t = beta^j / ||grad||
/// with loss(theta - t grad) <= loss(theta) - (t / 2) ||grad||^2.
/// `current_loss` avoids re-evaluating loss(theta) when the caller has it.
double backtracking_line_search(const Objective& obj, const Vector& theta, const Vector& grad,
                                const LineSearchConfig& cfg,
                                std::optional<double> current_loss = std::nullopt);

struct DescentResult {
  Vector theta;
  RunRecord record;
  bool converged = false;
};

/// theta_{k+1} = theta_k - t_k grad(theta_k) with t_k from the line search.
/// One row per iteration; the last row is the final iterate (step 0).
/// A line-search failure throws DescentFailure carrying the partial result.
/// `observe` sees every iterate, including the first and the last.
using IterateObserver = std::function<void(int iteration, const Vector& theta)>;

DescentResult gradient_descent(const Objective& obj, const Vector& theta0, const LineSearchConfig& cfg,
                               const StopRule& stop, const IterateObserver& observe = {});

class DescentFailure : public LineSearchError {
 public:
  DescentFailure(const LineSearchError& cause, DescentResult partial)
      : LineSearchError(cause.what(), cause.last_step()), partial_(std::move(partial)) {}
  const DescentResult& partial() const { return partial_; }

 private:
  DescentResult partial_;
};

/// Step-size schedule for stochastic gradients: t_k = base / (k + 1) when
/// `harmonic`, otherwise t_k = base.
struct StepSchedule {
  double base = 0.1;
  bool harmonic = false;
  double at(int k) const { return harmonic ? base / (k + 1) : base; }
};

/// Plain (stochastic) gradient iteration without line search. `loss` is only
/// evaluated for logging when `log_every` > 0.
DescentResult stochastic_gradient_descent(const Objective& obj, const Vector& theta0,
                                          const StepSchedule& schedule, int iterations, int log_every = 1);

}  // namespace pgland
