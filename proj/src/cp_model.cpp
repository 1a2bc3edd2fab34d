#include "hybridcp/cp_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hybridcp/error.hpp"

namespace hybridcp {

void CPModel::validate() const {
  const Index R = alpha.size();
  if (A.cols() != R || B.cols() != R || C.cols() != R) {
    throw ArgumentError("CP model factor column counts (" + std::to_string(A.cols()) + ", " +
                        std::to_string(B.cols()) + ", " + std::to_string(C.cols()) +
                        ") do not match alpha length " + std::to_string(R));
  }
  if (A.rows() < 1 || B.rows() < 1 || C.rows() < 1) {
    throw ArgumentError("CP model factors must have at least one row");
  }
}

Index max_rank(Dims dims) {
  return std::min({dims.I * dims.J, dims.J * dims.K, dims.I * dims.K});
}

Tensor3 reconstruct(const CPModel& m) {
  m.validate();
  const Dims dims = m.dims();
  Tensor3 t(dims);
  // T(1) = A D (C ⊙ B)^T, filled slice by slice over k.
  const Matrix AD = m.A * m.alpha.asDiagonal();
  for (Index k = 0; k < dims.K; ++k) {
    const Matrix slice = AD * m.C.row(k).asDiagonal() * m.B.transpose(); // I x J
    for (Index i = 0; i < dims.I; ++i)
      for (Index j = 0; j < dims.J; ++j) t(i, j, k) = slice(i, j);
  }
  return t;
}

CPModel normalize(const CPModel& m) {
  m.validate();
  CPModel out = m;
  for (Index r = 0; r < m.rank(); ++r) {
    const double na = out.A.col(r).norm();
    const double nb = out.B.col(r).norm();
    const double nc = out.C.col(r).norm();
    if (na == 0.0) throw DegenerateComponentError(static_cast<std::size_t>(r), 'A');
    if (nb == 0.0) throw DegenerateComponentError(static_cast<std::size_t>(r), 'B');
    if (nc == 0.0) throw DegenerateComponentError(static_cast<std::size_t>(r), 'C');
    out.A.col(r) /= na;
    out.B.col(r) /= nb;
    out.C.col(r) /= nc;
    out.alpha(r) *= na * nb * nc;

    Index first = 0;
    while (first < out.A.rows() && out.A(first, r) == 0.0) ++first;
    if (out.A(first, r) < 0.0) {
      out.A.col(r) = -out.A.col(r);
      out.B.col(r) = -out.B.col(r);
    }
  }
  return out;
}

Matrix build_Q(const CPModel& m) {
  m.validate();
  const Dims dims = m.dims();
  const Index JK = dims.J * dims.K;
  Matrix Q(m.rank(), dims.size());
  for (Index r = 0; r < m.rank(); ++r) {
    Vector bc(JK);
    for (Index j = 0; j < dims.J; ++j) bc.segment(j * dims.K, dims.K) = m.B(j, r) * m.C.col(r);
    for (Index i = 0; i < dims.I; ++i) Q.row(r).segment(i * JK, JK) = m.A(i, r) * bc.transpose();
  }
  return Q;
}

Matrix q_gram(const CPModel& m) {
  m.validate();
  const Matrix ga = m.A.transpose() * m.A;
  const Matrix gb = m.B.transpose() * m.B;
  const Matrix gc = m.C.transpose() * m.C;
  return ga.cwiseProduct(gb).cwiseProduct(gc);
}

Vector q_apply(const CPModel& m, const Tensor3& t) {
  m.validate();
  if (!(m.dims() == t.dims())) throw ArgumentError("q_apply: model and tensor dims differ");
  const Dims dims = m.dims();
  // Contract k first: X(i*J + j, r) = sum_k t_ijk c_kr.
  Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> slab(t.values().data(), dims.K, dims.I * dims.J,
                                                         Eigen::OuterStride<>(dims.K));
  const Matrix X = slab.transpose() * m.C; // IJ x R
  Vector out(m.rank());
  for (Index r = 0; r < m.rank(); ++r) {
    Eigen::Map<const Matrix> xr(X.col(r).data(), dims.J, dims.I); // (j, i)
    out(r) = m.A.col(r).dot(xr.transpose() * m.B.col(r));
  }
  return out;
}

CPModel truncate_rank(const CPModel& m, double eps) {
  m.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("truncate_rank: eps must lie in (0, 1)");
  if (m.rank() == 0) return m;
  const double amax = m.alpha.cwiseAbs().maxCoeff();
  std::vector<Index> keep;
  for (Index r = 0; r < m.rank(); ++r) {
    if (std::abs(m.alpha(r)) >= eps * amax) keep.push_back(r);
  }
  std::stable_sort(keep.begin(), keep.end(), [&](Index a, Index b) {
    return std::abs(m.alpha(a)) > std::abs(m.alpha(b));
  });
  CPModel out;
  const auto n = static_cast<Index>(keep.size());
  out.A.resize(m.A.rows(), n);
  out.B.resize(m.B.rows(), n);
  out.C.resize(m.C.rows(), n);
  out.alpha.resize(n);
  for (Index c = 0; c < n; ++c) {
    const Index r = keep[static_cast<std::size_t>(c)];
    out.A.col(c) = m.A.col(r);
    out.B.col(c) = m.B.col(r);
    out.C.col(c) = m.C.col(r);
    out.alpha(c) = m.alpha(r);
  }
  return out;
}

CPModel drop_components(const CPModel& m, const std::vector<Index>& components) {
  std::vector<Index> keep;
  for (Index r = 0; r < m.rank(); ++r) {
    if (std::find(components.begin(), components.end(), r) == components.end()) keep.push_back(r);
  }
  CPModel out;
  const auto n = static_cast<Index>(keep.size());
  out.A.resize(m.A.rows(), n);
  out.B.resize(m.B.rows(), n);
  out.C.resize(m.C.rows(), n);
  out.alpha.resize(n);
  for (Index c = 0; c < n; ++c) {
    const Index r = keep[static_cast<std::size_t>(c)];
    out.A.col(c) = m.A.col(r);
    out.B.col(c) = m.B.col(r);
    out.C.col(c) = m.C.col(r);
    out.alpha(c) = m.alpha(r);
  }
  return out;
}

} // namespace hybridcp
