#pragma once

#include <cstdint>
#include <vector>

#include "hybridcp/cp_model.hpp"
#include "hybridcp/factor_updates.hpp"
#include "hybridcp/hybrid_l1.hpp"

namespace hybridcp {

enum class AlphaMode { Hybrid, FixedLambda };

struct CompletionConfig {
  Index rank = 50;        ///< upper-bound rank R0
  int max_iterations = 500;
  double tolerance = 1e-3; ///< on the observed-entry relative residual
  AlphaMode mode = AlphaMode::Hybrid;
  double lambda = 35.0; ///< fixed-lambda mode only
  std::uint64_t seed = 0;
  double truncation = 1e-2;
  double safety = 1.05;
  StepRule step_rule = StepRule::Scalar;
  bool record_timing = true;
  HybridConfig hybrid{};

  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  double residual = 0.0; ///< ||(S - T)|_Omega|| / ||T|_Omega||
  double lambda = 0.0;
  double wall_ms = 0.0;
};

struct CompletionResult {
  CPModel model;     ///< final normalized model at rank R0
  CPModel truncated; ///< components with |alpha_r| >= truncation * max |alpha|
  Tensor3 completed; ///< reconstruction with the observed entries restored exactly
  std::vector<TraceRow> trace;
  std::vector<std::vector<double>> lambda_histories; ///< per-iteration hybrid lambda sequences
  std::vector<std::vector<double>> residual_histories;
  bool converged = false;
};

/**
 * Low-rank CP completion of `t` from the entries in `mask`.
 *
 * Each outer iteration imputes the missing entries from the current model,
 * takes one majorize-minimize step on A, B and C in turn, then updates alpha
 * either with the hybrid l1 solver (lambda chosen by weighted GCV) or with a
 * single fixed-lambda soft-thresholding step. Stops once the relative
 * residual on the observed entries drops below `tolerance`.
 */
CompletionResult complete(const Tensor3& t, const Mask& mask, const CompletionConfig& cfg);

/// Seeded standard-normal factors with unit columns and alpha fit by least squares to `t`.
CPModel initial_model(const Tensor3& t, Index rank, std::uint64_t seed);

/**
 * The alpha least-squares problem min ||alpha Q - t|| rewritten in an
 * orthonormal basis of span{rows of Q, t}: returns H ((r+1) x R) and d with
 * ||H alpha - d|| = ||alpha Q - t|| for every alpha.
 */
struct AlphaSubproblem {
  Matrix h;
  Vector d;
};
AlphaSubproblem alpha_subproblem(const CPModel& m, const Tensor3& t);

/// Uniformly sample ceil(fraction * IJK) observed entries without replacement.
Mask make_random_mask(Dims dims, double fraction, std::uint64_t seed);

/// Observe everything except the pixel rectangle [x0, x1) x [y0, y1) in every channel.
Mask make_rect_mask(Dims dims, Index x0, Index y0, Index x1, Index y1);

/// ||s - a||_F / ||a||_F.
double relative_error(const Tensor3& s, const Tensor3& a);

/// ||(s - t)|_Omega|| / ||t|_Omega|| (absolute when t vanishes on Omega).
double observed_residual(const Tensor3& s, const Tensor3& t, const Mask& mask);

} // namespace hybridcp
