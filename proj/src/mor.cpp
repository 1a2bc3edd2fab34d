#include "hybridcp/mor.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "hybridcp/error.hpp"

namespace hybridcp {

ChebDiff cheb_diff(Index N) {
  if (N < 1) throw ArgumentError("cheb_diff requires N >= 1");
  const double pi = std::numbers::pi;
  const double n = static_cast<double>(N);
  ChebDiff out{Vector(N + 1), Matrix::Zero(N + 1, N + 1)};
  // sin form keeps the points exactly antisymmetric
  for (Index j = 0; j <= N; ++j) out.points(j) = std::sin(pi * (n - 2.0 * j) / (2.0 * n));

  Vector c(N + 1);
  for (Index j = 0; j <= N; ++j) c(j) = ((j == 0 || j == N) ? 2.0 : 1.0) * (j % 2 == 0 ? 1.0 : -1.0);
  for (Index i = 0; i <= N; ++i) {
    for (Index j = 0; j <= N; ++j) {
      if (i == j) continue;
      const double dx = 2.0 * std::sin(pi * static_cast<double>(i + j) / (2.0 * n)) *
                        std::sin(pi * static_cast<double>(j - i) / (2.0 * n));
      out.D(i, j) = c(i) / c(j) / dx;
    }
  }
  for (Index i = 0; i <= N; ++i) out.D(i, i) = -out.D.row(i).sum();
  return out;
}

void DiffusionProblem::validate() const {
  if (nx < 3) throw ArgumentError("diffusion problem needs nx >= 3");
  if (!(std::abs(mu1) <= 0.99 && std::abs(mu2) <= 0.99)) {
    throw ArgumentError("diffusion parameters must lie in [-0.99, 0.99]");
  }
}

double DiffusionProblem::rhs(double x, double y) const {
  return source ? source(x, y) : std::exp(4.0 * x * y);
}

namespace {

struct Discretization {
  Vector x;
  Matrix d2;
};

Discretization discretize(Index nx) {
  const ChebDiff cd = cheb_diff(nx - 1);
  return {cd.points, cd.D * cd.D};
}

} // namespace

Matrix solve_diffusion(const DiffusionProblem& p) {
  p.validate();
  const auto [x, d2] = discretize(p.nx);
  const Index n = p.nx - 2;

  // interior unknown (i, j) sits at row i*n + j; x-derivative acts on i, y on j
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n * n * (2 * n - 1)));
  for (Index i = 0; i < n; ++i) {
    const double ax = 1.0 + p.mu1 * x(i + 1);
    for (Index j = 0; j < n; ++j) {
      const double ay = 1.0 + p.mu2 * x(j + 1);
      const Index row = i * n + j;
      for (Index a = 0; a < n; ++a) {
        double v = ax * d2(i + 1, a + 1);
        if (a == i) v += ay * d2(j + 1, j + 1);
        entries.emplace_back(row, a * n + j, v);
      }
      for (Index b = 0; b < n; ++b) {
        if (b == j) continue;
        entries.emplace_back(row, i * n + b, ay * d2(j + 1, b + 1));
      }
    }
  }
  Eigen::SparseMatrix<double> op(n * n, n * n);
  op.setFromTriplets(entries.begin(), entries.end());
  op.makeCompressed();

  Vector f(n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) f(i * n + j) = p.rhs(x(i + 1), x(j + 1));

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(op);
  if (lu.info() != Eigen::Success) throw NumericalRankError("diffusion operator is singular");
  Vector u = lu.solve(f);
  u += lu.solve(Vector(f - op * u));
  if (!u.allFinite()) throw NumericalRankError("diffusion solve produced non-finite values");

  Matrix full = Matrix::Zero(p.nx, p.nx);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) full(i + 1, j + 1) = u(i * n + j);
  return full;
}

double diffusion_residual(const DiffusionProblem& p, const Matrix& u) {
  p.validate();
  if (u.rows() != p.nx || u.cols() != p.nx) throw ArgumentError("solution grid has the wrong size");
  const auto [x, d2] = discretize(p.nx);
  const Matrix uxx = d2 * u;
  const Matrix uyy = u * d2.transpose();
  const Index n = p.nx - 2;
  double num = 0.0;
  double den = 0.0;
  for (Index i = 1; i <= n; ++i)
    for (Index j = 1; j <= n; ++j) {
      const double lu = (1.0 + p.mu1 * x(i)) * uxx(i, j) + (1.0 + p.mu2 * x(j)) * uyy(i, j);
      const double f = p.rhs(x(i), x(j));
      num += (lu - f) * (lu - f);
      den += f * f;
    }
  return std::sqrt(num / den);
}

std::vector<Parameter> parameter_grid(Index n, double lo, double hi) {
  if (n < 1) throw ArgumentError("parameter grid needs at least one point per direction");
  std::vector<Parameter> grid;
  grid.reserve(static_cast<std::size_t>(n * n));
  auto node = [&](Index i) {
    return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b) grid.emplace_back(node(a), node(b));
  return grid;
}

std::vector<Parameter> random_parameters(Index count, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  std::vector<Parameter> out;
  for (Index c = 0; c < count; ++c) {
    const double a = uni(rng);
    const double b = uni(rng);
    out.emplace_back(a, b);
  }
  return out;
}

Tensor3 assemble_snapshots(const std::vector<Parameter>& grid, Index nx) {
  if (grid.empty()) throw ArgumentError("parameter grid is empty");
  const auto K = static_cast<Index>(grid.size());
  Tensor3 t(Dims{nx, nx, K});
  for (Index k = 0; k < K; ++k) {
    const auto [mu1, mu2] = grid[static_cast<std::size_t>(k)];
    const Matrix u = solve_diffusion({nx, mu1, mu2, {}});
    for (Index i = 0; i < nx; ++i)
      for (Index j = 0; j < nx; ++j) t(i, j, k) = u(i, j);
  }
  return t;
}

Vector flatten_solution(const Matrix& u) {
  Vector v(u.size());
  for (Index i = 0; i < u.rows(); ++i)
    for (Index j = 0; j < u.cols(); ++j) v(i * u.cols() + j) = u(i, j);
  return v;
}

Matrix orthonormalize(const Matrix& vectors) {
  if (vectors.cols() == 0) return Matrix(vectors.rows(), 0);
  Eigen::ColPivHouseholderQR<Matrix> qr(vectors);
  const Matrix r = qr.matrixR().topLeftCorner(std::min(vectors.rows(), vectors.cols()),
                                               std::min(vectors.rows(), vectors.cols()));
  const double top = std::abs(r(0, 0));
  Index keep = 0;
  while (keep < r.rows() && top > 0.0 && std::abs(r(keep, keep)) >= 1e-10 * top) ++keep;
  const Matrix q = qr.householderQ() * Matrix::Identity(vectors.rows(), keep);
  return q;
}

CpBasisResult cp_reduced_basis(const Tensor3& a, const CpBasisConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
  CompletionConfig cc = cfg.completion;
  cc.rank = cfg.rank0;
  cc.truncation = cfg.epsilon;
  cc.mode = AlphaMode::Hybrid;

  CpBasisResult out;
  out.completion = complete(a, Mask::full(a.dims()), cc);
  const CPModel& kept = out.completion.truncated;
  out.selected_rank = kept.rank();

  const double rho = cfg.als_rho >= 0.0 ? cfg.als_rho : default_als_rho(a, kept.rank());
  out.model = normalize(regularized_als(kept, a, rho, cfg.als_max_sweeps, cfg.als_tol).model);

  // column r is kron(x_r, y_r), the row-major flattening of x_r o y_r
  out.basis = {orthonormalize(khatri_rao(out.model.A, out.model.B)), BasisSource::Cp};
  return out;
}

namespace {

Matrix snapshot_matrix(const Tensor3& a) {
  const auto [I, J, K] = a.dims();
  Eigen::Map<const Matrix> tubes(a.values().data(), K, I * J);
  return tubes.transpose();
}

} // namespace

ReducedBasis pod_basis(const Tensor3& a, Index rank) {
  const auto [I, J, K] = a.dims();
  if (rank < 1 || rank > std::min(I * J, K)) {
    throw ArgumentError("POD rank must lie in [1, min(I*J, K)]");
  }
  Eigen::BDCSVD<Matrix> svd(snapshot_matrix(a), Eigen::ComputeThinU);
  return {svd.matrixU().leftCols(rank), BasisSource::Pod};
}

std::vector<double> project_error(const ReducedBasis& basis, const Matrix& truths) {
  if (basis.phi.rows() != truths.rows()) throw ArgumentError("basis and solution sizes differ");
  std::vector<double> out;
  for (Index c = 0; c < truths.cols(); ++c) {
    const Vector u = truths.col(c);
    out.push_back((u - basis.phi * (basis.phi.transpose() * u)).norm());
  }
  return out;
}

std::vector<double> project_error(const ReducedBasis& basis, const std::vector<Parameter>& tests,
                                  Index nx) {
  Matrix truths(nx * nx, static_cast<Index>(tests.size()));
  for (std::size_t c = 0; c < tests.size(); ++c) {
    truths.col(static_cast<Index>(c)) =
        flatten_solution(solve_diffusion({nx, tests[c].first, tests[c].second, {}}));
  }
  return project_error(basis, truths);
}

double compression_ratio(Dims dims, Index rank, Scheme scheme) {
  if (rank < 1) throw ArgumentError("compression ratio needs rank >= 1");
  const double I = static_cast<double>(dims.I);
  const double J = static_cast<double>(dims.J);
  const double K = static_cast<double>(dims.K);
  const double per = scheme == Scheme::Pod ? I * J + K + 1.0 : I + J + K + 1.0;
  return I * J * K / (static_cast<double>(rank) * per);
}

} // namespace hybridcp
