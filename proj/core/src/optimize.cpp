#include "pgland/optimize.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace pgland {

namespace {

Vector project(const Objective& obj, Vector theta) {
  return obj.projection ? obj.projection(std::move(theta)) : theta;
}

// Loss at a trial point; infeasible points count as +inf.
double trial_loss(const Objective& obj, const Vector& theta) {
  try {
    const double v = obj.loss(theta);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const InfeasibleParameter&) {
    return std::numeric_limits<double>::infinity();
  }
}

double gap_of(const Objective& obj, double loss) {
  return obj.oracle_optimum ? loss - *obj.oracle_optimum : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double backtracking_line_search(const Objective& obj, const Vector& theta, const Vector& grad,
                                const LineSearchConfig& cfg, std::optional<double> current_loss) {
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw InvalidArgument("line search beta must lie in (0, 1)");
  const double norm = grad.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("line search needs a nonzero finite gradient");
  const double f0 = current_loss ? *current_loss : obj.loss(theta);
  const double sq = norm * norm;
  double t = 1.0 / norm;
  for (int j = 0; j <= cfg.max_halvings; ++j) {
    const double f = trial_loss(obj, project(obj, theta - t * grad));
    if (f <= f0 - 0.5 * t * sq) return t;
    if (j < cfg.max_halvings) t *= cfg.beta;
  }
  throw LineSearchError("no step satisfied the sufficient-decrease test after " +
                            std::to_string(cfg.max_halvings) + " reductions",
                        t);
}

DescentResult gradient_descent(const Objective& obj, const Vector& theta0, const LineSearchConfig& cfg,
                               const StopRule& stop, const IterateObserver& observe) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  DescentResult result;
  result.theta = project(obj, theta0);
  double loss = obj.loss(result.theta);
  if (!std::isfinite(loss)) throw InvalidArgument("initial parameters are infeasible");

  for (int k = 0;; ++k) {
    if (observe) observe(k, result.theta);
    const Vector grad = obj.gradient(result.theta);
    const double gnorm = grad.norm();
    RunRow row{k, loss, gap_of(obj, loss), gnorm, 0.0, 0.0};
    if (gnorm <= stop.grad_tol_scale * (1.0 + std::abs(loss)) || k >= stop.max_iters) {
      result.converged = gnorm <= stop.grad_tol_scale * (1.0 + std::abs(loss));
      row.wall_time_s = elapsed();
      result.record.rows.push_back(row);
      return result;
    }
    double t = 0.0;
    try {
      t = backtracking_line_search(obj, result.theta, grad, cfg, loss);
    } catch (const LineSearchError& e) {
      row.wall_time_s = elapsed();
      result.record.rows.push_back(row);
      throw DescentFailure(e, std::move(result));
    }
    row.step_size = t;
    row.wall_time_s = elapsed();
    result.record.rows.push_back(row);
    result.theta = project(obj, result.theta - t * grad);
    loss = obj.loss(result.theta);
  }
}

DescentResult stochastic_gradient_descent(const Objective& obj, const Vector& theta0,
                                          const StepSchedule& schedule, int iterations, int log_every) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  DescentResult result;
  result.theta = project(obj, theta0);
  for (int k = 0; k <= iterations; ++k) {
    const bool last = k == iterations;
    const bool log = log_every > 0 && (k % log_every == 0 || last);
    Vector grad;
    if (!last || log) grad = obj.gradient(result.theta);
    if (log) {
      const double loss = obj.loss(result.theta);
      result.record.rows.push_back({k, loss, gap_of(obj, loss), grad.norm(), last ? 0.0 : schedule.at(k),
                                    std::chrono::duration<double>(Clock::now() - start).count()});
    }
    if (last) break;
    result.theta = project(obj, result.theta - schedule.at(k) * grad);
  }
  return result;
}

}  // namespace pgland
