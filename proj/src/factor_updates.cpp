#include "hybridcp/factor_updates.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hybridcp/error.hpp"

namespace hybridcp {

namespace {

const Matrix& factor(Mode mode, const CPModel& m) {
  switch (mode) {
  case Mode::A: return m.A;
  case Mode::B: return m.B;
  default: return m.C;
  }
}

Matrix& factor(Mode mode, CPModel& m) {
  switch (mode) {
  case Mode::A: return m.A;
  case Mode::B: return m.B;
  default: return m.C;
  }
}

void check_dims(const CPModel& m, const Tensor3& t) {
  m.validate();
  if (!(m.dims() == t.dims())) throw ArgumentError("model and tensor dims differ");
}

} // namespace

Matrix mode_khatri_rao(Mode mode, const CPModel& m) {
  switch (mode) {
  case Mode::A: return khatri_rao(m.C, m.B);
  case Mode::B: return khatri_rao(m.C, m.A);
  default: return khatri_rao(m.B, m.A);
  }
}

Matrix mode_gram(Mode mode, const CPModel& m) {
  const Matrix ga = m.A.transpose() * m.A;
  const Matrix gb = m.B.transpose() * m.B;
  const Matrix gc = m.C.transpose() * m.C;
  switch (mode) {
  case Mode::A: return gb.cwiseProduct(gc);
  case Mode::B: return ga.cwiseProduct(gc);
  default: return ga.cwiseProduct(gb);
  }
}

Matrix mttkrp(Mode mode, const CPModel& m, const Tensor3& t) {
  check_dims(m, t);
  const auto [I, J, K] = t.dims();
  const Index R = m.rank();
  // The tensor viewed as K x IJ, column i*J + j holds the tube fiber t(i, j, :).
  Eigen::Map<const Matrix> slab(t.values().data(), K, I * J);
  if (mode == Mode::C) return slab * khatri_rao(m.A, m.B);

  const Matrix X = slab.transpose() * m.C; // IJ x R, row i*J + j
  Matrix out(mode == Mode::A ? I : J, R);
  for (Index r = 0; r < R; ++r) {
    Eigen::Map<const Matrix> xr(X.col(r).data(), J, I); // (j, i)
    if (mode == Mode::A)
      out.col(r) = xr.transpose() * m.B.col(r);
    else
      out.col(r) = xr * m.A.col(r);
  }
  return out;
}

Matrix gradient(Mode mode, const CPModel& m, const Tensor3& t) {
  const Matrix mk = mttkrp(mode, m, t);
  const auto D = m.alpha.asDiagonal();
  const Matrix& X = factor(mode, m);
  return (X * D * mode_gram(mode, m) - mk) * D;
}

double lipschitz_estimate(Mode mode, const CPModel& m) {
  m.validate();
  const auto D = m.alpha.asDiagonal();
  const Matrix h = D * mode_gram(mode, m) * D;
  if (h.size() == 0) return 1e-12;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues().maxCoeff(), 1e-12);
}

CPModel mm_update(Mode mode, const CPModel& m, const Tensor3& t, StepControl& ctl) {
  const Index slot = mode_index(mode) - 1;
  ctl.lipschitz[static_cast<std::size_t>(slot)] = lipschitz_estimate(mode, m);
  const Matrix g = gradient(mode, m, t);

  CPModel out = m;
  Matrix& X = factor(mode, out);
  Matrix Dn = X - ctl.step(mode) * g;
  if (ctl.rule == StepRule::PerColumn) {
    const auto D = m.alpha.asDiagonal();
    const Matrix h = D * mode_gram(mode, m) * D;
    for (Index r = 0; r < X.cols(); ++r) {
      const double l = h.row(r).cwiseAbs().sum();
      if (l > 1e-12) Dn.col(r) = X.col(r) - g.col(r) / (ctl.safety * l);
    }
  }
  for (Index r = 0; r < X.cols(); ++r) {
    const double n = Dn.col(r).norm();
    if (n > 0.0 && std::isfinite(n)) X.col(r) = Dn.col(r) / n;
  }
  return out;
}

Matrix regularized_ls_factor(Mode mode, const CPModel& m, const Tensor3& t, double rho) {
  if (!(rho >= 0.0)) throw ArgumentError("regularized ALS requires rho >= 0");
  const Matrix rhs = mttkrp(mode, m, t).transpose(); // R x n
  Matrix gram = mode_gram(mode, m);
  if (rho == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    if (ev.size() > 0 && ev.minCoeff() <= 1e-13 * std::max(ev.maxCoeff(), 1e-300)) {
      throw NumericalRankError(
          "Khatri-Rao Gram matrix is numerically singular; use a damping rho > 0");
    }
  }
  gram.diagonal().array() += rho;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalRankError("damped normal equations are not positive definite; increase rho");
  }
  return llt.solve(rhs).transpose();
}

CPModel regularized_als_step(const CPModel& m, const Tensor3& t, double rho) {
  CPModel out = m;
  for (Mode mode : {Mode::A, Mode::B, Mode::C}) {
    const Matrix G = regularized_ls_factor(mode, out, t, rho);
    Matrix& X = factor(mode, out);
    for (Index r = 0; r < G.cols(); ++r) {
      const double n = G.col(r).norm();
      if (n > 0.0 && std::isfinite(n)) {
        X.col(r) = G.col(r) / n;
        out.alpha(r) = n;
      } else {
        out.alpha(r) = 0.0;
      }
    }
  }
  return out;
}

double default_als_rho(const Tensor3& t, Index rank) {
  return 1e-6 * frobenius_norm(t) / std::sqrt(static_cast<double>(std::max<Index>(rank, 1)));
}

AlsResult regularized_als(const CPModel& init, const Tensor3& t, double rho, int max_sweeps,
                          double tol) {
  const double tnorm = frobenius_norm(t);
  const double scale = tnorm > 0.0 ? tnorm : 1.0;
  AlsResult res{init, 0, 0.0};
  double previous = (t.flat() - reconstruct(init).flat()).norm() / scale;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    res.model = regularized_als_step(res.model, t, rho);
    res.sweeps = sweep;
    const double err = (t.flat() - reconstruct(res.model).flat()).norm() / scale;
    res.relative_error = err;
    if (std::abs(previous - err) <= tol * std::max(err, 1e-300) || err <= 1e-14) break;
    previous = err;
  }
  return res;
}

} // namespace hybridcp
