#include "hybridcp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hybridcp/error.hpp"

namespace hybridcp {

namespace {

void check_dims(Dims dims) {
  if (dims.I < 1 || dims.J < 1 || dims.K < 1) {
    throw ArgumentError("tensor dims must be positive, got (" + std::to_string(dims.I) + ", " +
                        std::to_string(dims.J) + ", " + std::to_string(dims.K) + ")");
  }
}

void check_mode(int mode) {
  if (mode < 1 || mode > 3) {
    throw ArgumentError("matricization mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

} // namespace

Tensor3::Tensor3(Dims dims) : dims_(dims) {
  check_dims(dims);
  values_.assign(static_cast<std::size_t>(dims.size()), 0.0);
}

Tensor3::Tensor3(Dims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
  check_dims(dims);
  if (static_cast<Index>(values_.size()) != dims.size()) {
    throw ArgumentError("tensor value count " + std::to_string(values_.size()) +
                        " does not match dims product " + std::to_string(dims.size()));
  }
}

bool Tensor3::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double frobenius_norm(const Tensor3& t) { return t.flat().norm(); }

Mask::Mask(Dims dims, std::vector<Triple> observed) : dims_(dims), observed_(std::move(observed)) {
  check_dims(dims);
  for (const auto& [i, j, k] : observed_) {
    if (i < 0 || i >= dims.I || j < 0 || j >= dims.J || k < 0 || k >= dims.K) {
      throw ArgumentError("mask index (" + std::to_string(i) + ", " + std::to_string(j) + ", " +
                          std::to_string(k) + ") out of range");
    }
  }
  std::sort(observed_.begin(), observed_.end());
  if (std::adjacent_find(observed_.begin(), observed_.end()) != observed_.end()) {
    throw ArgumentError("mask contains duplicate indices");
  }
  flags_.assign(static_cast<std::size_t>(dims.size()), 0);
  for (const auto& [i, j, k] : observed_) {
    flags_[static_cast<std::size_t>((i * dims.J + j) * dims.K + k)] = 1;
  }
}

Mask Mask::full(Dims dims) {
  check_dims(dims);
  std::vector<Triple> all;
  all.reserve(static_cast<std::size_t>(dims.size()));
  for (Index i = 0; i < dims.I; ++i)
    for (Index j = 0; j < dims.J; ++j)
      for (Index k = 0; k < dims.K; ++k) all.push_back({i, j, k});
  return Mask(dims, std::move(all));
}

double Mask::fill_fraction() const {
  return static_cast<double>(observed_.size()) / static_cast<double>(dims_.size());
}

Matrix matricize(const Tensor3& t, int mode) {
  check_mode(mode);
  const auto [I, J, K] = t.dims();
  Matrix out;
  switch (mode) {
  case 1:
    out.resize(I, J * K);
    for (Index i = 0; i < I; ++i)
      for (Index j = 0; j < J; ++j)
        for (Index k = 0; k < K; ++k) out(i, k * J + j) = t(i, j, k);
    break;
  case 2:
    out.resize(J, I * K);
    for (Index i = 0; i < I; ++i)
      for (Index j = 0; j < J; ++j)
        for (Index k = 0; k < K; ++k) out(j, k * I + i) = t(i, j, k);
    break;
  default:
    out.resize(K, I * J);
    for (Index i = 0; i < I; ++i)
      for (Index j = 0; j < J; ++j)
        for (Index k = 0; k < K; ++k) out(k, j * I + i) = t(i, j, k);
    break;
  }
  return out;
}

Tensor3 dematricize(const Matrix& unfolded, int mode, Dims dims) {
  check_mode(mode);
  Tensor3 t(dims);
  const auto [I, J, K] = dims;
  const Index rows = mode == 1 ? I : mode == 2 ? J : K;
  if (unfolded.rows() != rows || unfolded.cols() * rows != dims.size()) {
    throw ArgumentError("unfolding shape does not match tensor dims");
  }
  for (Index i = 0; i < I; ++i)
    for (Index j = 0; j < J; ++j)
      for (Index k = 0; k < K; ++k) {
        switch (mode) {
        case 1: t(i, j, k) = unfolded(i, k * J + j); break;
        case 2: t(i, j, k) = unfolded(j, k * I + i); break;
        default: t(i, j, k) = unfolded(k, j * I + i); break;
        }
      }
  return t;
}

Vector vectorize(const Tensor3& t) { return t.flat(); }

Tensor3 from_vector(const Vector& v, Dims dims) {
  return Tensor3(dims, std::vector<double>(v.data(), v.data() + v.size()));
}

Matrix khatri_rao(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) {
    throw ArgumentError("khatri_rao: column counts differ (" + std::to_string(x.cols()) + " vs " +
                        std::to_string(y.cols()) + ")");
  }
  const Index I = x.rows();
  const Index J = y.rows();
  Matrix out(I * J, x.cols());
  for (Index r = 0; r < x.cols(); ++r)
    for (Index i = 0; i < I; ++i) out.col(r).segment(i * J, J) = x(i, r) * y.col(r);
  return out;
}

Tensor3 masked_copy(const Tensor3& t, const Tensor3& s, const Mask& mask) {
  if (!(t.dims() == s.dims()) || !(t.dims() == mask.dims())) {
    throw ArgumentError("masked_copy: tensor and mask dims differ");
  }
  Tensor3 out = s;
  auto dst = out.values();
  auto src = t.values();
  for (Index n = 0; n < t.size(); ++n) {
    if (mask.contains_offset(n)) dst[static_cast<std::size_t>(n)] = src[static_cast<std::size_t>(n)];
  }
  return out;
}

} // namespace hybridcp
