#pragma once

#include "hybridcp/tensor.hpp"

namespace hybridcp {

/**
 * CP model [alpha; A, B, C]_R: a sum of R scaled rank-one tensors
 * alpha_r * a_r ∘ b_r ∘ c_r. Factor columns are kept at unit length by
 * `normalize`, so alpha carries all of the scale.
 */
struct CPModel {
  Matrix A; ///< I x R
  Matrix B; ///< J x R
  Matrix C; ///< K x R
  Vector alpha;

  Index rank() const { return alpha.size(); }
  Dims dims() const { return {A.rows(), B.rows(), C.rows()}; }

  /// Throws ArgumentError when factor column counts disagree with alpha.
  void validate() const;
};

/// Upper bound min{IJ, JK, IK} on the rank of any I x J x K tensor.
Index max_rank(Dims dims);

Tensor3 reconstruct(const CPModel& m);

/**
 * Rescale every factor column to unit length, moving the norms into alpha.
 * Signs are fixed so the first nonzero entry of each a_r is positive; the
 * flip is absorbed by b_r.
 *
 * Throws DegenerateComponentError on an exactly zero column.
 */
CPModel normalize(const CPModel& m);

/// R x IJK matrix whose row r is vectorize(a_r ∘ b_r ∘ c_r).
Matrix build_Q(const CPModel& m);

/// Q Q^T computed from factor Gram matrices (A^T A) .* (B^T B) .* (C^T C).
Matrix q_gram(const CPModel& m);

/// Q t where t = vectorize(T); entry r is the contraction of T with a_r, b_r, c_r.
Vector q_apply(const CPModel& m, const Tensor3& t);

/**
 * Keep components with |alpha_r| >= eps * max|alpha|, sorted by descending
 * |alpha_r|. Requires 0 < eps < 1.
 */
CPModel truncate_rank(const CPModel& m, double eps);

/// Drop the listed components (used when a column degenerates).
CPModel drop_components(const CPModel& m, const std::vector<Index>& components);

} // namespace hybridcp
