#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace hybridcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Tensor extents (I, J, K).
struct Dims {
  Index I = 1;
  Index J = 1;
  Index K = 1;

  Index size() const { return I * J * K; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/**
 * Dense third-order tensor.
 *
 * Entries are stored row-major over (i, j, k): the flat offset of (i, j, k)
 * is (i*J + j)*K + k, so k varies fastest. This is also the vectorization
 * order, which makes `vectorize` a plain copy.
 */
class Tensor3 {
public:
  Tensor3() = default;
  explicit Tensor3(Dims dims);
  Tensor3(Dims dims, std::vector<double> values);

  const Dims& dims() const { return dims_; }
  Index size() const { return dims_.size(); }

  double& operator()(Index i, Index j, Index k) { return values_[offset(i, j, k)]; }
  double operator()(Index i, Index j, Index k) const { return values_[offset(i, j, k)]; }

  Index offset(Index i, Index j, Index k) const { return (i * dims_.J + j) * dims_.K + k; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Eigen::Map<Vector> flat() { return {values_.data(), size()}; }
  Eigen::Map<const Vector> flat() const { return {values_.data(), size()}; }

  bool all_finite() const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
  Dims dims_{};
  std::vector<double> values_ = std::vector<double>(1, 0.0);
};

double frobenius_norm(const Tensor3& t);

/// 0-based index triple.
using Triple = std::array<Index, 3>;

/**
 * Observed index set. Triples are kept sorted and unique; a boolean cache
 * laid out like Tensor3 gives O(1) membership.
 */
class Mask {
public:
  Mask() = default;
  Mask(Dims dims, std::vector<Triple> observed);

  static Mask full(Dims dims);

  const Dims& dims() const { return dims_; }
  const std::vector<Triple>& observed() const { return observed_; }
  std::size_t count() const { return observed_.size(); }
  double fill_fraction() const;

  bool contains(Index i, Index j, Index k) const {
    return flags_[static_cast<std::size_t>((i * dims_.J + j) * dims_.K + k)] != 0;
  }
  bool contains_offset(Index flat) const { return flags_[static_cast<std::size_t>(flat)] != 0; }

  friend bool operator==(const Mask& a, const Mask& b) {
    return a.dims_ == b.dims_ && a.observed_ == b.observed_;
  }

private:
  Dims dims_{};
  std::vector<Triple> observed_;
  std::vector<unsigned char> flags_ = std::vector<unsigned char>(1, 0);
};

/**
 * Mode-n unfolding, mode in {1, 2, 3}.
 *
 * Column orderings are chosen so that for T = [alpha; A, B, C]
 *   T(1) = A D (C ⊙ B)^T,  T(2) = B D (C ⊙ A)^T,  T(3) = C D (B ⊙ A)^T
 * hold exactly with `khatri_rao` below:
 *   mode 1: I x JK, column k*J + j
 *   mode 2: J x IK, column k*I + i
 *   mode 3: K x IJ, column j*I + i
 */
Matrix matricize(const Tensor3& t, int mode);

/// Inverse of `matricize`.
Tensor3 dematricize(const Matrix& unfolded, int mode, Dims dims);

Vector vectorize(const Tensor3& t);
Tensor3 from_vector(const Vector& v, Dims dims);

/// Column-wise Kronecker product: column r is x_r ⊗ y_r (IJ x R).
Matrix khatri_rao(const Matrix& x, const Matrix& y);

/// T on the observed set, S everywhere else.
Tensor3 masked_copy(const Tensor3& t, const Tensor3& s, const Mask& mask);

} // namespace hybridcp
