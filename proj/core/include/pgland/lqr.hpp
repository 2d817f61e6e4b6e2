#pragma once

#include <cstdint>

#include "pgland/error.hpp"
#include "pgland/mdp.hpp"

namespace pgland {

/// Discounted LQR: s' = A s + B a + w, stage cost a'Ra + s'Ks, w ~ (0, noise_cov),
/// s_0 ~ (0, init_cov). Construction checks R, K positive definite, the noise and
/// initial covariances positive semidefinite, and (A, B) controllable.
class LqrSystem {
 public:
  LqrSystem(Matrix A, Matrix B, Matrix R, Matrix K, double gamma, Matrix noise_cov,
            Matrix init_cov);
  // Noise-free system with identity initial covariance.
  LqrSystem(Matrix A, Matrix B, Matrix R, Matrix K, double gamma);

  int n() const { return static_cast<int>(A_.rows()); }
  int k() const { return static_cast<int>(B_.cols()); }
  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& R() const { return R_; }
  const Matrix& K() const { return K_; }
  double gamma() const { return gamma_; }
  const Matrix& noise_cov() const { return noise_cov_; }
  const Matrix& init_cov() const { return init_cov_; }

 private:
  Matrix A_, B_, R_, K_;
  double gamma_;
  Matrix noise_cov_, init_cov_;
};

/// Linear feedback a = theta s, theta of shape k x n.
struct LinearGain {
  Matrix theta;
};

/// J_theta(s) = s' L s + offset.
struct ValueMatrix {
  Matrix L;
  double offset = 0.0;
};

/// Closed-loop matrix A + B theta.
Matrix closed_loop(const LqrSystem& sys, const LinearGain& gain);

/// Membership in the stable set: largest singular value of A + B theta below
/// 1 - 1e-12. Stricter than the spectral-radius condition that evaluation needs.
bool is_stable(const LqrSystem& sys, const LinearGain& gain);
double spectral_radius(const Matrix& M);

/// Unique PSD solution of L = K + theta'R theta + gamma (A+B theta)' L (A+B theta)
/// by fixed-point iteration (tolerance 1e-12, at most 1e5 sweeps), and the
/// noise offset gamma / (1 - gamma) tr(L W). Requires spectral radius of the
/// closed loop below 1; throws InfeasibleParameter otherwise.
ValueMatrix evaluate_gain(const LqrSystem& sys, const LinearGain& gain);

/// l(theta) = tr(L init_cov) + offset.
double lqr_cost(const LqrSystem& sys, const LinearGain& gain);

/// Greedy gain for Q_theta: -gamma (R + gamma B'LB)^{-1} B'LA.
LinearGain policy_iteration_step(const LqrSystem& sys, const LinearGain& gain);

/// Optimal gain by policy iteration from theta = 0 (if stable) or
/// theta = -pinv(B) A. Stops when successive gains differ by <= 1e-12 (Frobenius).
LinearGain optimal_gain(const LqrSystem& sys, int max_iterations = 1000);

/// Discounted state second moment Sigma = S0 + gamma M Sigma M' with
/// S0 = init_cov + gamma / (1 - gamma) noise_cov and M = A + B theta.
Matrix discounted_state_moment(const LqrSystem& sys, const LinearGain& gain);

/// grad l(theta) = 2 [(R + gamma B'LB) theta + gamma B'LA] Sigma_theta.
Matrix lqr_gradient(const LqrSystem& sys, const LinearGain& gain);

/// Q_theta(s, a) = a'Ra + gamma (As + Ba)' L (As + Ba) for L from evaluate_gain
/// (the state cost s'Ks is omitted; it does not depend on a).
double lqr_q_value(const LqrSystem& sys, const Matrix& L, const Vector& s, const Vector& a);

/// Reproducible test system: A ~ U[-0.5, 0.5], B ~ U[-1, 1], R = K = I,
/// identity initial covariance, optional isotropic noise.
LqrSystem random_lqr_system(int n, int k, std::uint64_t seed, double gamma = 0.9,
                            double noise_scale = 0.0);

}  // namespace pgland
