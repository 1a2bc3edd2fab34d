#pragma once

#include <array>

#include "hybridcp/cp_model.hpp"

namespace hybridcp {

enum class Mode { A = 1, B = 2, C = 3 };

inline int mode_index(Mode mode) { return static_cast<int>(mode); }

/// Scalar: one step 1/(s L) for the whole factor. PerColumn: column r uses
/// 1/(s l_r) with l_r the r-th absolute row sum of D W^T W D, a diagonal
/// majorizer of the same Hessian.
enum class StepRule { Scalar, PerColumn };

/// Step-size state for the majorize-minimize factor updates.
struct StepControl {
  double safety = 1.05;                       ///< s > 1
  std::array<double, 3> lipschitz{1.0, 1.0, 1.0}; ///< current estimate per mode A, B, C
  StepRule rule = StepRule::Scalar;

  double step(Mode mode) const { return 1.0 / (safety * lipschitz[mode_index(mode) - 1]); }
};

/// Khatri-Rao product paired with `mode`: C⊙B for A, C⊙A for B, B⊙A for C.
Matrix mode_khatri_rao(Mode mode, const CPModel& m);

/// W^T W for the mode's Khatri-Rao product, via Hadamard product of factor Grams.
Matrix mode_gram(Mode mode, const CPModel& m);

/// T(mode) * W without forming W (matricized tensor times Khatri-Rao product).
Matrix mttkrp(Mode mode, const CPModel& m, const Tensor3& t);

/**
 * Gradient of f = 1/2 ||T - [alpha; A, B, C]||_F^2 with respect to one factor:
 *   (X D W^T - T(n)) W D
 */
Matrix gradient(Mode mode, const CPModel& m, const Tensor3& t);

/// Largest eigenvalue of D W^T W D, floored at 1e-12.
double lipschitz_estimate(Mode mode, const CPModel& m);

/**
 * One projected gradient step on a single factor followed by column
 * normalization. Refreshes `ctl.lipschitz` for the mode first. A column whose
 * step vanishes keeps its previous value. Alpha is left untouched.
 */
CPModel mm_update(Mode mode, const CPModel& m, const Tensor3& t, StepControl& ctl);

/// Solution G = X D of (W^T W + rho I) G^T = (T(n) W)^T, before normalization.
Matrix regularized_ls_factor(Mode mode, const CPModel& m, const Tensor3& t, double rho);

/// One Tikhonov-damped ALS sweep over A, B, C; each solve is renormalized into alpha.
CPModel regularized_als_step(const CPModel& m, const Tensor3& t, double rho);

/// 1e-6 * ||T||_F / sqrt(R).
double default_als_rho(const Tensor3& t, Index rank);

struct AlsResult {
  CPModel model;
  int sweeps = 0;
  double relative_error = 0.0;
};

/// Repeat `regularized_als_step` until the relative fit changes by less than `tol`.
AlsResult regularized_als(const CPModel& init, const Tensor3& t, double rho, int max_sweeps,
                          double tol);

} // namespace hybridcp
