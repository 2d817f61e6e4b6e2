#include <cmath>

#include <gtest/gtest.h>

#include "pgland/lqr.hpp"
#include "pgland/optimize.hpp"
#include "pgland/tabular.hpp"
#include "support.hpp"

using namespace pgland;

namespace {

Objective scalar(std::function<double(double)> f, std::function<double(double)> df) {
  Objective obj;
  obj.dim = 1;
  obj.loss = [f](const Vector& x) { return f(x(0)); };
  obj.gradient = [df](const Vector& x) { return Vector::Constant(1, df(x(0))); };
  return obj;
}

Objective bowl() {
  Objective obj;
  obj.dim = 2;
  obj.loss = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  obj.gradient = [](const Vector& x) { return x; };
  obj.oracle_optimum = 0.0;
  return obj;
}

void expect_armijo_certificate(const Objective& obj, const DescentResult& r) {
  const auto& rows = r.record.rows;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double t = rows[i].step_size;
    const double g = rows[i].grad_norm;
    EXPECT_LE(rows[i + 1].loss, rows[i].loss - 0.5 * t * g * g + 1e-15 * std::abs(rows[i].loss)) << "row " << i;
    EXPECT_LT(rows[i + 1].loss, rows[i].loss) << "row " << i;
  }
  (void)obj;
}

}  // namespace

TEST(LineSearch, QuadraticFirstStep) {
  const Objective obj = scalar([](double x) { return x * x; }, [](double x) { return 2 * x; });
  EXPECT_DOUBLE_EQ(backtracking_line_search(obj, Vector::Constant(1, 2.0), Vector::Constant(1, 4.0), {}), 0.25);
}

TEST(LineSearch, LinearAcceptsUnitStep) {
  const Objective obj = scalar([](double x) { return x; }, [](double) { return 1.0; });
  EXPECT_DOUBLE_EQ(backtracking_line_search(obj, Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), {}), 1.0);
}

TEST(LineSearch, BacktracksPastAWall) {
  const Objective throwing = scalar(
      [](double x) {
        if (x < 1.5) throw InfeasibleParameter("wall");
        return x;
      },
      [](double) { return 1.0; });
  EXPECT_DOUBLE_EQ(backtracking_line_search(throwing, Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), {}), 0.5);
  const Objective infinite = scalar([](double x) { return x < 1.5 ? INFINITY : x; }, [](double) { return 1.0; });
  EXPECT_DOUBLE_EQ(backtracking_line_search(infinite, Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), {}), 0.5);
}

TEST(LineSearch, Errors) {
  const Objective obj = scalar([](double x) { return x; }, [](double) { return 1.0; });
  EXPECT_THROW(backtracking_line_search(obj, Vector::Constant(1, 2.0), Vector::Constant(1, -1.0), {0.5, 10}),
               LineSearchError);
  EXPECT_THROW(backtracking_line_search(obj, Vector::Constant(1, 2.0), Vector::Zero(1), {}), InvalidArgument);
  EXPECT_THROW(backtracking_line_search(obj, Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), {1.0, 10}),
               InvalidArgument);
}

TEST(GradientDescent, QuadraticBowl) {
  const Objective obj = bowl();
  const DescentResult r = gradient_descent(obj, Vector::Constant(2, 1.0), {}, {1e-10, 200});
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.record.rows.back().grad_norm, 1e-10);
  EXPECT_LE(r.record.rows.back().iteration, 200);
  EXPECT_EQ(r.record.rows.back().step_size, 0.0);
  expect_armijo_certificate(obj, r);
}

TEST(GradientDescent, ProjectionKeepsIteratesFeasible) {
  Objective obj;
  obj.dim = 2;
  obj.loss = [](const Vector& x) { return (x.array() + 1.0).square().sum(); };
  obj.gradient = [](const Vector& x) { return Vector(2.0 * (x.array() + 1.0)); };
  obj.projection = [](Vector x) { return Vector(x.cwiseMax(0.0)); };
  bool feasible = true;
  int seen = 0;
  try {
    gradient_descent(obj, Vector::Constant(2, 1.0), {}, {1e-10, 100}, [&](int, const Vector& x) {
      feasible = feasible && (x.array() >= 0.0).all();
      ++seen;
    });
  } catch (const DescentFailure& e) {
    // At the corner the projected steps cannot decrease the loss further.
    EXPECT_LE(e.partial().theta.cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_TRUE(feasible);
  EXPECT_GT(seen, 0);
}

TEST(GradientDescent, TabularRunIsMonotoneWithArmijoCertificate) {
  const FiniteMdp mdp = random_mdp(10, 4, 3);
  Objective obj;
  obj.dim = 40;
  obj.loss = [&](const Vector& th) { return average_cost(mdp, softmax_policy(SoftmaxParams::from_flat(th, 10, 4))); };
  obj.gradient = [&](const Vector& th) {
    return exact_policy_gradient(mdp, SoftmaxParams::from_flat(th, 10, 4)).gradient;
  };
  const DescentResult r = gradient_descent(obj, Vector::Zero(40), {}, {1e-8, 300});
  ASSERT_GE(r.record.rows.size(), 10u);
  expect_armijo_certificate(obj, r);
}

TEST(GradientDescent, LqrIteratesStayStable) {
  const LqrSystem sys = random_lqr_system(3, 2, 4);
  Objective obj;
  obj.dim = 6;
  auto gain = [](const Vector& x) { return LinearGain{Eigen::Map<const Matrix>(x.data(), 2, 3)}; };
  obj.loss = [&](const Vector& x) { return lqr_cost(sys, gain(x)); };
  obj.gradient = [&](const Vector& x) {
    const Matrix g = lqr_gradient(sys, gain(x));
    return Vector(Eigen::Map<const Vector>(g.data(), 6));
  };
  bool stable = true;
  const DescentResult r = gradient_descent(obj, Vector::Zero(6), {}, {1e-8, 10'000}, [&](int, const Vector& x) {
    stable = stable && is_stable(sys, gain(x));
  });
  EXPECT_TRUE(stable);
  EXPECT_TRUE(r.converged);
  const LinearGain star = optimal_gain(sys);
  EXPECT_LE((gain(r.theta).theta - star.theta).norm(), 1e-6);
}

TEST(GradientDescent, FailureCarriesPartialResult) {
  Objective obj = bowl();
  obj.gradient = [](const Vector& x) { return Vector(-x); };
  try {
    gradient_descent(obj, Vector::Constant(2, 1.0), {0.5, 5}, {1e-10, 100});
    FAIL() << "expected DescentFailure";
  } catch (const DescentFailure& e) {
    EXPECT_EQ(e.partial().record.rows.size(), 1u);
    EXPECT_TRUE(e.partial().theta == Vector::Constant(2, 1.0));
  }
}

TEST(StochasticGradientDescent, SchedulesAndLogging) {
  EXPECT_DOUBLE_EQ((StepSchedule{0.3, true}).at(2), 0.1);
  EXPECT_DOUBLE_EQ((StepSchedule{0.3, false}).at(7), 0.3);
  const Objective obj = bowl();
  const DescentResult r = stochastic_gradient_descent(obj, Vector::Constant(2, 1.0), {0.5, false}, 60, 10);
  EXPECT_LE(r.theta.norm(), 1e-15);
  ASSERT_EQ(r.record.rows.size(), 7u);
  EXPECT_EQ(r.record.rows.back().iteration, 60);
  const DescentResult quiet = stochastic_gradient_descent(obj, Vector::Constant(2, 1.0), {0.5, true}, 20, 0);
  EXPECT_TRUE(quiet.record.rows.empty());
}
