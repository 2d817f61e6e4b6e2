#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "pgland/error.hpp"
#include "pgland/mdp.hpp"
#include "pgland/random.hpp"

namespace pgland::test {

inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector plus = x;
    Vector minus = x;
    plus(i) += h;
    minus(i) -= h;
    g(i) = (f(plus) - f(minus)) / (2.0 * h);
  }
  return g;
}

// ||a - b|| <= rel (max(||a||, ||b||) + floor)
inline ::testing::AssertionResult close_rel(const Vector& a, const Vector& b, double rel, double floor = 1e-10) {
  const double err = (a - b).norm();
  const double bound = rel * (std::max(a.norm(), b.norm()) + floor);
  if (err <= bound) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "error " << err << " exceeds " << bound << "\n  a = " << a.transpose()
                                       << "\n  b = " << b.transpose();
}

inline Vector random_vector(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

}  // namespace pgland::test
