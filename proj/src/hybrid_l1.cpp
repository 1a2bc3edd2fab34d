#include "hybridcp/hybrid_l1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hybridcp/error.hpp"

namespace hybridcp {

namespace {

constexpr double kBreakdownTol = 1e-14;
constexpr int kGridPoints = 200;

// Two passes of classical Gram-Schmidt against the columns of Q.
// Returns the accumulated projection coefficients.
Vector orthogonalize(const Eigen::Ref<const Matrix>& Q, Vector& w) {
  Vector h = Q.transpose() * w;
  w.noalias() -= Q * h;
  const Vector h2 = Q.transpose() * w;
  w.noalias() -= Q * h2;
  return h + h2;
}

void append_column(Matrix& m, const Vector& col) {
  m.conservativeResize(col.size(), m.cols() + 1);
  m.col(m.cols() - 1) = col;
}

double golden_section(const std::function<double(double)>& f, double a, double b) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 100 && std::abs(b - a) > 1e-10 * std::max(1.0, std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

} // namespace

LinearOperator::LinearOperator(Index rows, Index cols, Apply apply, Apply apply_adjoint)
  : rows_(rows), cols_(cols), apply_(std::move(apply)), adjoint_(std::move(apply_adjoint)) {}

LinearOperator LinearOperator::dense(Matrix h) {
  auto shared = std::make_shared<const Matrix>(std::move(h));
  return LinearOperator(
      shared->rows(), shared->cols(), [shared](const Vector& x) -> Vector { return *shared * x; },
      [shared](const Vector& y) -> Vector { return shared->transpose() * y; });
}

Vector LinearOperator::apply(const Vector& x) const {
  if (x.size() != cols_) throw ArgumentError("operator applied to vector of wrong length");
  return apply_(x);
}

Vector LinearOperator::apply_adjoint(const Vector& y) const {
  if (y.size() != rows_) throw ArgumentError("operator adjoint applied to vector of wrong length");
  return adjoint_(y);
}

Vector soft_threshold(const Vector& v, double lambda) {
  if (!(lambda >= 0.0)) throw ArgumentError("soft_threshold requires lambda >= 0");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    out(i) = a <= lambda ? 0.0 : v(i) - lambda * (v(i) > 0.0 ? 1.0 : -1.0);
  }
  return out;
}

Vector ista_alpha_step(const Matrix& gram, const Vector& qt, const Vector& alpha, double lambda,
                       double safety) {
  double eta = 1e-12;
  if (gram.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    eta = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  }
  const double step = 1.0 / (safety * eta);
  const Vector grad = gram * alpha - qt;
  return soft_threshold(alpha - step * grad, lambda * step);
}

Vector ista_alpha_step(const CPModel& m, const Tensor3& t, double lambda, const StepControl& ctl) {
  return ista_alpha_step(q_gram(m), q_apply(m, t), m.alpha, lambda, ctl.safety);
}

IrnWeights irn_weights(const Vector& s, double tau1, double tau2) {
  if (!(tau2 > 0.0 && tau2 < tau1)) throw ArgumentError("IRN thresholds need 0 < tau2 < tau1");
  IrnWeights w{tau1, tau2, Vector(s.size())};
  for (Index i = 0; i < s.size(); ++i) {
    const double a = std::abs(s(i));
    w.diag(i) = 1.0 / std::sqrt(a >= tau1 ? a : tau2);
  }
  return w;
}

IrnWeights identity_weights(Index n) {
  IrnWeights w;
  w.diag = Vector::Ones(n);
  return w;
}

FgkState fgk_init(const LinearOperator& h, const Vector& d) {
  if (d.size() != h.rows()) throw ArgumentError("fgk_init: data length does not match operator");
  FgkState st;
  st.beta1 = d.norm();
  st.P.resize(h.cols(), 0);
  st.M.resize(1, 0);
  st.Tt = Matrix::Zero(1, 1);
  if (st.beta1 == 0.0 || !std::isfinite(st.beta1)) {
    st.U = Matrix::Zero(h.rows(), 1);
    st.V = Matrix::Zero(h.cols(), 1);
    st.breakdown = true;
    return st;
  }
  st.U = d / st.beta1;
  const Vector z = h.apply_adjoint(st.U.col(0));
  const double zn = z.norm();
  if (zn == 0.0) {
    st.V = Matrix::Zero(h.cols(), 1);
    st.breakdown = true;
    return st;
  }
  st.V = z / zn;
  st.Tt(0, 0) = zn;
  return st;
}

FgkStatus fgk_expand(FgkState& st, const LinearOperator& h, const IrnWeights& weights) {
  if (st.breakdown) return FgkStatus::Breakdown;
  const Index k = st.k;
  if (weights.diag.size() != h.cols()) throw ArgumentError("fgk_expand: weight length mismatch");

  const Vector p = weights.inverse().cwiseProduct(st.V.col(k));
  append_column(st.P, p);

  Vector w = h.apply(p);
  const double wscale = w.norm();
  const Vector mcol = orthogonalize(st.U, w);
  const double wn = w.norm();

  st.M.conservativeResize(k + 2, k + 1);
  st.M.row(k + 1).setZero();
  st.M.col(k).head(k + 1) = mcol;

  Matrix tt = Matrix::Zero(k + 2, k + 2);
  tt.topLeftCorner(k + 1, k + 1) = st.Tt;
  st.Tt = std::move(tt);
  st.k = k + 1;

  if (wscale == 0.0 || wn <= kBreakdownTol * wscale) {
    st.M(k + 1, k) = 0.0;
    append_column(st.U, Vector::Zero(h.rows()));
    append_column(st.V, Vector::Zero(h.cols()));
    st.breakdown = true;
    return FgkStatus::Breakdown;
  }
  st.M(k + 1, k) = wn;
  append_column(st.U, w / wn);

  Vector z = h.apply_adjoint(st.U.col(k + 1));
  const double zscale = z.norm();
  const Vector tcol = orthogonalize(st.V, z);
  const double zn = z.norm();
  st.Tt.col(k + 1).head(k + 1) = tcol;
  if (zscale == 0.0 || zn <= kBreakdownTol * zscale) {
    append_column(st.V, Vector::Zero(h.cols()));
    st.breakdown = true;
    return FgkStatus::Breakdown;
  }
  st.Tt(k + 1, k + 1) = zn;
  append_column(st.V, z / zn);
  return FgkStatus::Expanded;
}

namespace {

using ProjectedSvd = Eigen::JacobiSVD<Matrix>;

ProjectedSvd projected_svd(const Matrix& m) {
  return ProjectedSvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

ProjectedSpectrum spectrum_of(const ProjectedSvd& svd, double beta1) {
  return {svd.singularValues(), beta1 * svd.matrixU().row(0).transpose()};
}

Vector tikhonov_from(const ProjectedSvd& svd, const ProjectedSpectrum& sp, double lambda) {
  const Vector& sigma = sp.sigma;
  const double cutoff = static_cast<double>(sp.g.size()) * std::numeric_limits<double>::epsilon() *
                        (sigma.size() > 0 ? sigma(0) : 0.0);
  Vector filt(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma(i);
    if (lambda == 0.0)
      filt(i) = s > cutoff ? 1.0 / s : 0.0;
    else
      filt(i) = s / (s * s + lambda);
  }
  return svd.matrixV() * filt.cwiseProduct(sp.g.head(sigma.size()));
}

double select_lambda(const ProjectedSpectrum& sp, double omega, double fallback);

} // namespace

Vector projected_tikhonov(const Matrix& m, double beta1, double lambda) {
  if (!(lambda >= 0.0)) throw ArgumentError("projected_tikhonov requires lambda >= 0");
  if (m.cols() == 0) return Vector(0);
  const ProjectedSvd svd = projected_svd(m);
  return tikhonov_from(svd, spectrum_of(svd, beta1), lambda);
}

Vector projected_tikhonov(const FgkState& state, double lambda) {
  return projected_tikhonov(state.M, state.beta1, lambda);
}

ProjectedSpectrum projected_spectrum(const Matrix& m, double beta1) {
  return spectrum_of(projected_svd(m), beta1);
}

double wgcv_objective(const ProjectedSpectrum& sp, double lambda, double omega) {
  const Index k = sp.sigma.size();
  double residual = 0.0;
  double filtered = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double s2 = sp.sigma(i) * sp.sigma(i);
    const double r = lambda * sp.g(i) / (s2 + lambda);
    residual += r * r;
    filtered += s2 / (s2 + lambda);
  }
  for (Index i = k; i < sp.g.size(); ++i) residual += sp.g(i) * sp.g(i);
  const double trace = static_cast<double>(sp.g.size()) - omega * filtered;
  return static_cast<double>(k) * residual / (trace * trace);
}

double wgcv_select(const Matrix& m, double beta1, double omega, double fallback) {
  if (m.cols() == 0) return fallback;
  return select_lambda(projected_spectrum(m, beta1), omega, fallback);
}

namespace {

double select_lambda(const ProjectedSpectrum& sp, double omega, double fallback) {
  const double smax = sp.sigma.size() > 0 ? sp.sigma(0) : 0.0;
  if (!(smax > 0.0) || !std::isfinite(smax)) return fallback;

  const double lo = std::log(1e-10 * smax * smax);
  const double hi = std::log(smax * smax);
  auto objective = [&](double loglam) { return wgcv_objective(sp, std::exp(loglam), omega); };

  int best = -1;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> grid(kGridPoints);
  for (int i = 0; i < kGridPoints; ++i) {
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (kGridPoints - 1);
    const double v = objective(grid[static_cast<std::size_t>(i)]);
    if (std::isfinite(v) && v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best < 0) return fallback;
  const double a = grid[static_cast<std::size_t>(std::max(best - 1, 0))];
  const double b = grid[static_cast<std::size_t>(std::min(best + 1, kGridPoints - 1))];
  const double refined = golden_section(objective, a, b);
  const double refined_val = objective(refined);
  const double pick = std::isfinite(refined_val) && refined_val <= best_val
                          ? refined
                          : grid[static_cast<std::size_t>(best)];
  return std::exp(pick);
}

} // namespace

double wgcv_select(const FgkState& state, double omega, double fallback) {
  return wgcv_select(state.M, state.beta1, omega, fallback);
}

double omega_estimate(const ProjectedSpectrum& sp) {
  const Index k = sp.sigma.size();
  if (k == 0) return std::numeric_limits<double>::quiet_NaN();
  const double lambda = sp.sigma(k - 1) * sp.sigma(k - 1);
  if (!(lambda > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  // Stationarity of G in lambda: lambda m v2 (1 - omega t1/m) = omega t4 (t5 + t0).
  double t0 = 0.0;
  for (Index i = k; i < sp.g.size(); ++i) t0 += sp.g(i) * sp.g(i);
  double t1 = 0.0, t4 = 0.0, t5 = 0.0, v2 = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double s2 = sp.sigma(i) * sp.sigma(i);
    const double tt = 1.0 / (s2 + lambda);
    const double g2 = sp.g(i) * sp.g(i);
    t1 += s2 * tt;
    t4 += s2 * tt * tt;
    t5 += lambda * lambda * g2 * tt * tt;
    v2 += g2 * s2 * tt * tt * tt;
  }
  const double m = static_cast<double>(sp.g.size());
  return m * lambda * v2 / (lambda * v2 * t1 + t4 * (t5 + t0));
}

HybridResult solve_l1_hybrid(const LinearOperator& h, const Vector& d, const HybridConfig& cfg) {
  if (!(cfg.tau2 > 0.0 && cfg.tau2 < cfg.tau1)) {
    throw ArgumentError("IRN thresholds need 0 < tau2 < tau1");
  }
  if (!(cfg.omega > 0.0 && cfg.omega <= 1.0)) throw ArgumentError("WGCV weight must lie in (0, 1]");
  const Index n = h.cols();
  const int kmax = cfg.max_iterations > 0 ? cfg.max_iterations
                                          : static_cast<int>(std::min(h.rows(), h.cols()));

  HybridResult res;
  res.s = Vector::Zero(n);
  FgkState st = fgk_init(h, d);
  if (st.breakdown) {
    res.breakdown = true;
    return res;
  }

  double lambda = cfg.initial_lambda;
  double omega_sum = 0.0;
  int omega_count = 0;
  for (int k = 1; k <= kmax; ++k) {
    const IrnWeights w = (k == 1 || cfg.freeze_weights) ? identity_weights(n)
                                                        : irn_weights(res.s, cfg.tau1, cfg.tau2);
    const FgkStatus status = fgk_expand(st, h, w);

    double omega = cfg.omega;
    const ProjectedSvd svd = projected_svd(st.M);
    const ProjectedSpectrum sp = spectrum_of(svd, st.beta1);
    if (cfg.adaptive_omega) {
      const double est = omega_estimate(sp);
      if (std::isfinite(est)) {
        omega_sum += std::clamp(est, 1e-3, 1.0);
        ++omega_count;
      }
      omega = omega_count > 0 ? omega_sum / omega_count : 1.0;
    }
    lambda = cfg.fixed_lambda ? *cfg.fixed_lambda : select_lambda(sp, omega, lambda);

    const Vector q = tikhonov_from(svd, sp, lambda);
    Vector rhs = Vector::Zero(st.M.rows());
    rhs(0) = st.beta1;
    const Vector s_new = st.P * q;

    res.lambdas.push_back(lambda);
    res.omegas.push_back(omega);
    res.projected_residuals.push_back((st.M * q - rhs).norm());
    res.iterations = k;

    const double snorm = res.s.norm();
    const bool stagnated = k > 1 && snorm > 0.0 && (s_new - res.s).norm() <= cfg.stagnation_tol * snorm;
    res.s = s_new;
    if (status == FgkStatus::Breakdown) {
      res.breakdown = true;
      break;
    }
    if (stagnated) break;
  }
  return res;
}

} // namespace hybridcp
