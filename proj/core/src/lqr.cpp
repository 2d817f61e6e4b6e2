#include "pgland/lqr.hpp"

#include <cmath>
#include <string>

#include "pgland/random.hpp"

namespace pgland {

namespace {

constexpr double kStabilityMargin = 1e-12;
constexpr double kLyapunovTol = 1e-12;
constexpr int kLyapunovMaxSweeps = 100'000;

bool is_symmetric(const Matrix& M, double tol = 1e-10) {
  return M.rows() == M.cols() && (M - M.transpose()).lpNorm<Eigen::Infinity>() <= tol * (1.0 + M.lpNorm<Eigen::Infinity>());
}

double min_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_gain_shape(const LqrSystem& sys, const LinearGain& gain) {
  if (gain.theta.rows() != sys.k() || gain.theta.cols() != sys.n()) {
    throw DimensionError("gain must be " + std::to_string(sys.k()) + "x" + std::to_string(sys.n()));
  }
  if (!gain.theta.allFinite()) throw InvalidArgument("gain has non-finite entries");
}

// X = C + gamma M' X M, iterated from X = C. Caller guarantees sqrt(gamma) rho(M) < 1.
Matrix discounted_lyapunov(const Matrix& M, const Matrix& C, double gamma, bool transpose) {
  Matrix X = C;
  for (int sweep = 0; sweep < kLyapunovMaxSweeps; ++sweep) {
    Matrix next = transpose ? Matrix(C + gamma * M.transpose() * X * M) : Matrix(C + gamma * M * X * M.transpose());
    next = 0.5 * (next + next.transpose());
    const double change = (next - X).lpNorm<Eigen::Infinity>();
    X.swap(next);
    if (!X.allFinite()) break;
    if (change <= kLyapunovTol * (1.0 + X.lpNorm<Eigen::Infinity>())) return X;
  }
  throw NumericalError("discounted Lyapunov iteration did not converge");
}

}  // namespace

LqrSystem::LqrSystem(Matrix A, Matrix B, Matrix R, Matrix K, double gamma, Matrix noise_cov,
                     Matrix init_cov)
    : A_(std::move(A)),
      B_(std::move(B)),
      R_(std::move(R)),
      K_(std::move(K)),
      gamma_(gamma),
      noise_cov_(std::move(noise_cov)),
      init_cov_(std::move(init_cov)) {
  const Eigen::Index n = A_.rows();
  const Eigen::Index k = B_.cols();
  if (n < 1 || k < 1 || A_.cols() != n || B_.rows() != n) throw DimensionError("A must be n x n and B n x k");
  if (R_.rows() != k || R_.cols() != k) throw DimensionError("R must be k x k");
  if (K_.rows() != n || K_.cols() != n) throw DimensionError("K must be n x n");
  if (noise_cov_.rows() != n || noise_cov_.cols() != n) throw DimensionError("noise covariance must be n x n");
  if (init_cov_.rows() != n || init_cov_.cols() != n) throw DimensionError("initial covariance must be n x n");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!is_symmetric(R_) || min_eigenvalue(R_) <= 0.0) throw InvalidArgument("R must be symmetric positive definite");
  if (!is_symmetric(K_) || min_eigenvalue(K_) <= 0.0) throw InvalidArgument("K must be symmetric positive definite");
  if (!is_symmetric(noise_cov_) || min_eigenvalue(noise_cov_) < -1e-12) {
    throw InvalidArgument("noise covariance must be symmetric positive semidefinite");
  }
  if (!is_symmetric(init_cov_) || min_eigenvalue(init_cov_) < -1e-12) {
    throw InvalidArgument("initial covariance must be symmetric positive semidefinite");
  }
  Matrix ctrb(n, n * k);
  Matrix block = B_;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * k, k) = block;
    block = A_ * block;
  }
  Eigen::FullPivLU<Matrix> lu(ctrb);
  lu.setThreshold(1e-10);
  if (lu.rank() < n) throw InvalidArgument("(A, B) is not controllable");
}

LqrSystem::LqrSystem(Matrix A, Matrix B, Matrix R, Matrix K, double gamma)
    : LqrSystem(A, B, R, K, gamma, Matrix::Zero(A.rows(), A.rows()), Matrix::Identity(A.rows(), A.rows())) {}

Matrix closed_loop(const LqrSystem& sys, const LinearGain& gain) {
  require_gain_shape(sys, gain);
  return sys.A() + sys.B() * gain.theta;
}

double spectral_radius(const Matrix& M) {
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const LqrSystem& sys, const LinearGain& gain) {
  const Matrix M = closed_loop(sys, gain);
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0) < 1.0 - kStabilityMargin;
}

ValueMatrix evaluate_gain(const LqrSystem& sys, const LinearGain& gain) {
  const Matrix M = closed_loop(sys, gain);
  if (!(spectral_radius(M) < 1.0)) {
    throw InfeasibleParameter("gain is not stabilizing (spectral radius of A + B theta >= 1)");
  }
  const Matrix stage = sys.K() + gain.theta.transpose() * sys.R() * gain.theta;
  ValueMatrix v;
  v.L = discounted_lyapunov(M, stage, sys.gamma(), /*transpose=*/true);
  v.offset = sys.gamma() / (1.0 - sys.gamma()) * (v.L * sys.noise_cov()).trace();
  return v;
}

double lqr_cost(const LqrSystem& sys, const LinearGain& gain) {
  const ValueMatrix v = evaluate_gain(sys, gain);
  return (v.L * sys.init_cov()).trace() + v.offset;
}

LinearGain policy_iteration_step(const LqrSystem& sys, const LinearGain& gain) {
  const ValueMatrix v = evaluate_gain(sys, gain);
  const double g = sys.gamma();
  const Matrix H = sys.R() + g * sys.B().transpose() * v.L * sys.B();
  return {-g * H.ldlt().solve(sys.B().transpose() * v.L * sys.A())};
}

LinearGain optimal_gain(const LqrSystem& sys, int max_iterations) {
  LinearGain gain{Matrix::Zero(sys.k(), sys.n())};
  if (!is_stable(sys, gain)) {
    gain.theta = -sys.B().completeOrthogonalDecomposition().pseudoInverse() * sys.A();
    if (!(spectral_radius(closed_loop(sys, gain)) < 1.0)) {
      throw NumericalError("could not find a stabilizing initial gain (tried 0 and -pinv(B) A)");
    }
  }
  for (int it = 0; it < max_iterations; ++it) {
    LinearGain next = policy_iteration_step(sys, gain);
    const double change = (next.theta - gain.theta).norm();
    gain = std::move(next);
    if (change <= 1e-12) return gain;
  }
  throw NumericalError("LQR policy iteration did not converge");
}

Matrix discounted_state_moment(const LqrSystem& sys, const LinearGain& gain) {
  const Matrix M = closed_loop(sys, gain);
  if (!(spectral_radius(M) < 1.0)) throw InfeasibleParameter("gain is not stabilizing");
  const double g = sys.gamma();
  const Matrix base = sys.init_cov() + g / (1.0 - g) * sys.noise_cov();
  return discounted_lyapunov(M, base, g, /*transpose=*/false);
}

Matrix lqr_gradient(const LqrSystem& sys, const LinearGain& gain) {
  const ValueMatrix v = evaluate_gain(sys, gain);
  const Matrix sigma = discounted_state_moment(sys, gain);
  const double g = sys.gamma();
  const Matrix E = (sys.R() + g * sys.B().transpose() * v.L * sys.B()) * gain.theta +
                   g * sys.B().transpose() * v.L * sys.A();
  return 2.0 * E * sigma;
}

double lqr_q_value(const LqrSystem& sys, const Matrix& L, const Vector& s, const Vector& a) {
  const Vector next = sys.A() * s + sys.B() * a;
  return a.dot(sys.R() * a) + sys.gamma() * next.dot(L * next);
}

LqrSystem random_lqr_system(int n, int k, std::uint64_t seed, double gamma, double noise_scale) {
  Rng rng(seed);
  Matrix A(n, n);
  Matrix B(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-0.5, 0.5);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) B(i, j) = rng.uniform(-1.0, 1.0);
  }
  return {std::move(A), std::move(B), Matrix::Identity(k, k), Matrix::Identity(n, n), gamma,
          noise_scale * Matrix::Identity(n, n), Matrix::Identity(n, n)};
}

}  // namespace pgland
