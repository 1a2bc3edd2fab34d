#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hybridcp/cp_model.hpp"
#include "hybridcp/factor_updates.hpp"

namespace hybridcp {

/// Matrix-free operator H: R^n -> R^m, used only through H x and H^T y.
class LinearOperator {
public:
  using Apply = std::function<Vector(const Vector&)>;

  LinearOperator(Index rows, Index cols, Apply apply, Apply apply_adjoint);

  static LinearOperator dense(Matrix h);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& y) const;

private:
  Index rows_;
  Index cols_;
  Apply apply_;
  Apply adjoint_;
};

/// Proximal map of lambda*||.||_1: componentwise shrink toward zero by lambda.
Vector soft_threshold(const Vector& v, double lambda);

/**
 * One proximal-gradient step on alpha for 1/2 ||t - alpha Q||^2 + lambda ||alpha||_1
 * with step 1/(s * eta), eta = largest eigenvalue of Q Q^T.
 */
Vector ista_alpha_step(const CPModel& m, const Tensor3& t, double lambda, const StepControl& ctl);

/// Same step expressed through Q Q^T and Q t.
Vector ista_alpha_step(const Matrix& gram, const Vector& qt, const Vector& alpha, double lambda,
                       double safety);

/// Diagonal reweighting L(s) = diag(1 / sqrt(f_tau(|s_i|))).
struct IrnWeights {
  double tau1 = 1e-10;
  double tau2 = 1e-14;
  Vector diag;

  /// Diagonal of L^{-1}.
  Vector inverse() const { return diag.cwiseInverse(); }
};

/// f_tau(x) = x if x >= tau1 else tau2. Requires 0 < tau2 < tau1.
IrnWeights irn_weights(const Vector& s, double tau1, double tau2);

/// L = I.
IrnWeights identity_weights(Index n);

/**
 * Flexible Golub-Kahan factorization state after k steps:
 *   H P_k = U_{k+1} M_k,   H^T U_{k+1} = V_{k+1} T_{k+1}
 * with P_k = [L_1^{-1} v_1, ..., L_k^{-1} v_k], M_k upper Hessenberg and
 * T_{k+1} upper triangular.
 */
struct FgkState {
  Index k = 0;
  Matrix U;  ///< m x (k+1)
  Matrix V;  ///< n x (k+1)
  Matrix P;  ///< n x k
  Matrix M;  ///< (k+1) x k
  Matrix Tt; ///< (k+1) x (k+1)
  double beta1 = 0.0;
  /// Set when a new basis vector could not be formed; the last column of U
  /// (or V) is then zero and expansion must stop.
  bool breakdown = false;
};

enum class FgkStatus { Expanded, Breakdown };

/// u_1 = d / ||d||, v_1 = H^T u_1 / ||H^T u_1||.
FgkState fgk_init(const LinearOperator& h, const Vector& d);

/// Append p_k = L_k^{-1} v_k, u_{k+1} and v_{k+1}; two-pass classical Gram-Schmidt.
FgkStatus fgk_expand(FgkState& state, const LinearOperator& h, const IrnWeights& weights);

/// argmin_q ||M q - beta1 e_1||^2 + lambda ||q||^2 via the SVD of M.
Vector projected_tikhonov(const Matrix& m, double beta1, double lambda);
Vector projected_tikhonov(const FgkState& state, double lambda);

/// Singular values of M_k and the data vector g = beta1 U_full^T e_1 (length k+1).
struct ProjectedSpectrum {
  Vector sigma;
  Vector g;
};

ProjectedSpectrum projected_spectrum(const Matrix& m, double beta1);

/**
 * Weighted GCV function of the projected problem
 *   G(lambda) = k ||(I - M Phi) beta1 e_1||^2 / trace(I - omega M Phi)^2,
 *   Phi = (M^T M + lambda I)^{-1} M^T.
 */
double wgcv_objective(const ProjectedSpectrum& spectrum, double lambda, double omega);

/**
 * Minimize `wgcv_objective` over lambda in [1e-10, 1] * sigma_max^2: a
 * 200-point log grid followed by golden-section refinement. Returns
 * `fallback` when the objective is not finite.
 */
double wgcv_select(const Matrix& m, double beta1, double omega, double fallback);
double wgcv_select(const FgkState& state, double omega, double fallback);

/**
 * Weight for which the presumed-optimal lambda = sigma_min^2 is a
 * stationary point of the weighted GCV function. NaN when undefined.
 */
double omega_estimate(const ProjectedSpectrum& spectrum);

struct HybridConfig {
  int max_iterations = 0; ///< 0 means min(rows, cols)
  double tau1 = 1e-10;
  double tau2 = 1e-14;
  bool adaptive_omega = true;
  double omega = 1.0; ///< used when adaptive_omega is false
  double stagnation_tol = 1e-6;
  /// Returned by the selector if the first WGCV evaluation fails.
  double initial_lambda = 0.0;
  /// Testing hooks: hold lambda fixed and/or keep L_k = I.
  std::optional<double> fixed_lambda;
  bool freeze_weights = false;
};

struct HybridResult {
  Vector s;
  std::vector<double> lambdas;
  std::vector<double> projected_residuals;
  std::vector<double> omegas;
  int iterations = 0;
  bool breakdown = false;
};

/**
 * Approximately solve min_s ||H s - d||^2 + lambda ||s||_1 by reweighting
 * the l1 term as ||L(s_{k-1}) s||^2 and expanding a flexible Golub-Kahan
 * basis, picking lambda on each projected problem by weighted GCV.
 */
HybridResult solve_l1_hybrid(const LinearOperator& h, const Vector& d, const HybridConfig& cfg);

} // namespace hybridcp
