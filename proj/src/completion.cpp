#include "hybridcp/completion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "hybridcp/error.hpp"

namespace hybridcp {

void CompletionConfig::validate() const {
  if (rank < 1) throw ArgumentError("rank must be at least 1");
  if (max_iterations < 1) throw ArgumentError("max_iterations must be at least 1");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ArgumentError("tolerance must lie in (0, 1)");
  if (!(truncation > 0.0 && truncation < 1.0)) throw ArgumentError("truncation must lie in (0, 1)");
  if (!(safety > 1.0)) throw ArgumentError("step safety factor must exceed 1");
  if (mode == AlphaMode::FixedLambda && !(lambda >= 0.0)) {
    throw ArgumentError("fixed lambda must be non-negative");
  }
}

CPModel initial_model(const Tensor3& t, Index rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Dims dims = t.dims();
  CPModel m;
  auto fill = [&](Matrix& x, Index rows) {
    x.resize(rows, rank);
    for (Index c = 0; c < rank; ++c)
      for (Index r = 0; r < rows; ++r) x(r, c) = normal(rng);
  };
  fill(m.A, dims.I);
  fill(m.B, dims.J);
  fill(m.C, dims.K);
  m.alpha = Vector::Ones(rank);
  m = normalize(m);
  m.alpha = Vector::Ones(rank);

  // Least-squares alpha through the pseudo-inverse of Q Q^T.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q_gram(m));
  const Vector& ev = eig.eigenvalues();
  const double cutoff = 1e-13 * std::max(ev.maxCoeff(), 1e-300);
  const Vector coeff = eig.eigenvectors().transpose() * q_apply(m, t);
  Vector scaled(rank);
  for (Index i = 0; i < rank; ++i) scaled(i) = ev(i) > cutoff ? coeff(i) / ev(i) : 0.0;
  m.alpha = eig.eigenvectors() * scaled;
  for (Index r = 0; r < rank; ++r) {
    if (std::abs(m.alpha(r)) < 1e-8) m.alpha(r) = m.alpha(r) < 0.0 ? -1e-8 : 1e-8;
  }
  return m;
}

AlphaSubproblem alpha_subproblem(const CPModel& m, const Tensor3& t) {
  const Index R = m.rank();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q_gram(m));
  const Vector& ev = eig.eigenvalues();
  const double cutoff = 1e-13 * std::max(ev.maxCoeff(), 1e-300);
  std::vector<Index> keep;
  for (Index i = R - 1; i >= 0; --i) {
    if (ev(i) > cutoff) keep.push_back(i);
  }
  const auto r = static_cast<Index>(keep.size());
  const Vector qt = q_apply(m, t);

  AlphaSubproblem sub{Matrix::Zero(r + 1, R), Vector::Zero(r + 1)};
  double projected = 0.0;
  for (Index row = 0; row < r; ++row) {
    const Index i = keep[static_cast<std::size_t>(row)];
    const double root = std::sqrt(ev(i));
    sub.h.row(row) = root * eig.eigenvectors().col(i).transpose();
    sub.d(row) = eig.eigenvectors().col(i).dot(qt) / root;
    projected += sub.d(row) * sub.d(row);
  }
  const double tn = t.flat().squaredNorm();
  sub.d(r) = std::sqrt(std::max(tn - projected, 0.0));
  return sub;
}

double relative_error(const Tensor3& s, const Tensor3& a) {
  if (!(s.dims() == a.dims())) throw ArgumentError("relative_error: dims differ");
  const double an = frobenius_norm(a);
  if (an == 0.0) throw ArgumentError("relative_error: reference tensor is zero");
  return (s.flat() - a.flat()).norm() / an;
}

double observed_residual(const Tensor3& s, const Tensor3& t, const Mask& mask) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [i, j, k] : mask.observed()) {
    const double diff = s(i, j, k) - t(i, j, k);
    num += diff * diff;
    den += t(i, j, k) * t(i, j, k);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

Mask make_random_mask(Dims dims, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("mask fraction must lie in (0, 1]");
  const Index total = dims.size();
  const auto count = std::min<Index>(
      total, static_cast<Index>(std::ceil(fraction * static_cast<double>(total) - 1e-9)));
  std::vector<Index> all(static_cast<std::size_t>(total));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(count));
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);

  std::vector<Triple> observed;
  observed.reserve(picked.size());
  for (Index flat : picked) {
    const Index k = flat % dims.K;
    const Index j = (flat / dims.K) % dims.J;
    const Index i = flat / (dims.K * dims.J);
    observed.push_back({i, j, k});
  }
  return Mask(dims, std::move(observed));
}

Mask make_rect_mask(Dims dims, Index x0, Index y0, Index x1, Index y1) {
  if (x0 < 0 || y0 < 0 || x1 > dims.J || y1 > dims.I || x0 > x1 || y0 > y1) {
    throw ArgumentError("rectangle lies outside the image");
  }
  std::vector<Triple> observed;
  for (Index i = 0; i < dims.I; ++i)
    for (Index j = 0; j < dims.J; ++j) {
      if (i >= y0 && i < y1 && j >= x0 && j < x1) continue;
      for (Index k = 0; k < dims.K; ++k) observed.push_back({i, j, k});
    }
  return Mask(dims, std::move(observed));
}

CompletionResult complete(const Tensor3& t, const Mask& mask, const CompletionConfig& cfg) {
  cfg.validate();
  if (!(t.dims() == mask.dims())) throw ArgumentError("tensor and mask dims differ");
  if (mask.count() == 0) throw ArgumentError("mask has no observed entries");
  if (cfg.rank > max_rank(t.dims())) {
    throw ArgumentError("rank " + std::to_string(cfg.rank) + " exceeds the bound min{IJ, JK, IK} = " +
                        std::to_string(max_rank(t.dims())));
  }
  double mean = 0.0;
  for (const auto& [i, j, k] : mask.observed()) {
    if (!std::isfinite(t(i, j, k))) throw DataError("observed tensor entry is not finite");
    mean += t(i, j, k);
  }
  mean /= static_cast<double>(mask.count());

  const auto start = std::chrono::steady_clock::now();
  Tensor3 filled(t.dims());
  std::fill(filled.values().begin(), filled.values().end(), mean);
  filled = masked_copy(t, filled, mask);

  CompletionResult res;
  CPModel model = initial_model(filled, cfg.rank, cfg.seed);
  StepControl ctl;
  ctl.safety = cfg.safety;
  ctl.rule = cfg.step_rule;

  for (int n = 1; n <= cfg.max_iterations; ++n) {
    const Tensor3 work = masked_copy(t, reconstruct(model), mask);
    for (Mode mode : {Mode::A, Mode::B, Mode::C}) model = mm_update(mode, model, work, ctl);

    double lambda = cfg.lambda;
    if (cfg.mode == AlphaMode::Hybrid) {
      const AlphaSubproblem sub = alpha_subproblem(model, work);
      const HybridResult hr = solve_l1_hybrid(LinearOperator::dense(sub.h), sub.d, cfg.hybrid);
      model.alpha = hr.s;
      lambda = hr.lambdas.empty() ? 0.0 : hr.lambdas.back();
      res.lambda_histories.push_back(hr.lambdas);
      res.residual_histories.push_back(hr.projected_residuals);
    } else {
      model.alpha = ista_alpha_step(model, work, cfg.lambda, ctl);
    }

    const double residual = observed_residual(reconstruct(model), t, mask);
    const double ms =
        cfg.record_timing
            ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()
            : 0.0;
    res.trace.push_back({n, residual, lambda, ms});
    if (!std::isfinite(residual)) throw DataError("completion diverged (non-finite residual)");
    if (residual <= cfg.tolerance) {
      res.converged = true;
      break;
    }
  }

  res.model = model;
  res.truncated = truncate_rank(model, cfg.truncation);
  res.completed = masked_copy(t, reconstruct(model), mask);
  return res;
}

} // namespace hybridcp
