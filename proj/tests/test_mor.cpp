#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "hybridcp/error.hpp"
#include "hybridcp/mor.hpp"
#include "support.hpp"

using namespace hybridcp;
using hybridcp::testing::gaussian;

namespace {

constexpr double kPi = 3.14159265358979323846;

// u = sin(pi x) sin(pi y) solves the problem for this source.
DiffusionProblem manufactured(Index nx, double mu1, double mu2) {
  DiffusionProblem p{nx, mu1, mu2, {}};
  p.source = [mu1, mu2](double x, double y) {
    const double s = -kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
    return (1.0 + mu1 * x) * s + (1.0 + mu2 * y) * s;
  };
  return p;
}

// Barycentric interpolation of grid values u(i, j) to (x, y).
double interpolate(const Matrix& u, const Vector& pts, double x, double y) {
  const Index n = pts.size();
  auto weights = [&](double t) {
    Vector w(n);
    for (Index j = 0; j < n; ++j) {
      const double c = (j == 0 || j == n - 1 ? 0.5 : 1.0) * (j % 2 ? -1.0 : 1.0);
      const double d = t - pts(j);
      if (d == 0.0) {
        w.setZero();
        w(j) = 1.0;
        return w;
      }
      w(j) = c / d;
    }
    return Vector(w / w.sum());
  };
  return weights(x).dot(u * weights(y));
}

} // namespace

TEST(ChebDiff, NEqualsOne) {
  const ChebDiff c = cheb_diff(1);
  EXPECT_DOUBLE_EQ(c.points(0), 1.0);
  EXPECT_DOUBLE_EQ(c.points(1), -1.0);
  Matrix expected(2, 2);
  expected << 0.5, -0.5, 0.5, -0.5;
  EXPECT_LE((c.D - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ChebDiff, ExactOnQuadraticsAndConstants) {
  for (Index n : {2, 5, 16, 39}) {
    const ChebDiff c = cheb_diff(n);
    const Vector x2 = c.points.array().square();
    EXPECT_LE((c.D * x2 - 2.0 * c.points).cwiseAbs().maxCoeff(), 1e-12) << "N = " << n;
    EXPECT_LE(c.D.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(cheb_diff(0), ArgumentError);
}

TEST(ChebDiff, PointsAreCosines) {
  const ChebDiff c = cheb_diff(8);
  for (Index j = 0; j <= 8; ++j) EXPECT_NEAR(c.points(j), std::cos(j * kPi / 8.0), 1e-15);
}

TEST(SolveDiffusion, ResidualAndBoundary) {
  for (auto [m1, m2] : {Parameter{0.0, 0.0}, Parameter{0.99, -0.99}, Parameter{-0.5, 0.3}}) {
    const DiffusionProblem p{40, m1, m2, {}};
    const Matrix u = solve_diffusion(p);
    ASSERT_EQ(u.rows(), 40);
    EXPECT_LE(diffusion_residual(p, u), 1e-10);
    for (Index i = 0; i < 40; ++i) {
      EXPECT_EQ(u(0, i), 0.0);
      EXPECT_EQ(u(39, i), 0.0);
      EXPECT_EQ(u(i, 0), 0.0);
      EXPECT_EQ(u(i, 39), 0.0);
    }
  }
}

TEST(SolveDiffusion, ManufacturedSolutionIsSpectrallyAccurate) {
  const DiffusionProblem p = manufactured(30, 0.6, -0.4);
  const Matrix u = solve_diffusion(p);
  const ChebDiff c = cheb_diff(29);
  double err = 0.0;
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j)
      err = std::max(err, std::abs(u(i, j) - std::sin(kPi * c.points(i)) * std::sin(kPi * c.points(j))));
  EXPECT_LE(err, 1e-10);
}

TEST(SolveDiffusion, SelfConvergenceSmoothSource) {
  const Matrix coarse = solve_diffusion(manufactured(40, 0.3, 0.7));
  const Matrix fine = solve_diffusion(manufactured(60, 0.3, 0.7));
  const Vector pts = cheb_diff(39).points;
  const Vector fpts = cheb_diff(59).points;
  double diff = 0.0;
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 40; ++j)
      diff = std::max(diff, std::abs(coarse(i, j) - interpolate(fine, fpts, pts(i), pts(j))));
  EXPECT_LE(diff, 1e-8);
}

TEST(SolveDiffusion, SelfConvergenceExponentialSource) {
  const Matrix coarse = solve_diffusion({40, 0.5, -0.5, {}});
  const Matrix fine = solve_diffusion({60, 0.5, -0.5, {}});
  const Vector pts = cheb_diff(39).points;
  const Vector fpts = cheb_diff(59).points;
  double diff = 0.0;
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 40; ++j)
      diff = std::max(diff, std::abs(coarse(i, j) - interpolate(fine, fpts, pts(i), pts(j))));
  EXPECT_LE(diff, 1e-8);
}

TEST(SolveDiffusion, RejectsBadProblems) {
  EXPECT_THROW(solve_diffusion({2, 0.0, 0.0, {}}), ArgumentError);
  EXPECT_THROW(solve_diffusion({10, 1.0, 0.0, {}}), ArgumentError);
  EXPECT_THROW(solve_diffusion({10, 0.0, -1.5, {}}), ArgumentError);
}

TEST(ParameterGrid, MuOneMajorOrder) {
  const auto g = parameter_grid(3);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g[0], (Parameter{-0.99, -0.99}));
  EXPECT_EQ(g[1].first, -0.99);
  EXPECT_NEAR(g[1].second, 0.0, 1e-15);
  EXPECT_EQ(g[8], (Parameter{0.99, 0.99}));
}

TEST(RandomParameters, InRangeAndSeeded) {
  const auto a = random_parameters(10, 4);
  EXPECT_EQ(a, random_parameters(10, 4));
  EXPECT_NE(a, random_parameters(10, 5));
  for (const auto& [m1, m2] : a) {
    EXPECT_LE(std::abs(m1), 0.99);
    EXPECT_LE(std::abs(m2), 0.99);
  }
}

TEST(AssembleSnapshots, DimsAndSlices) {
  const auto grid = parameter_grid(2);
  const Tensor3 a = assemble_snapshots(grid, 20);
  EXPECT_EQ(a.dims(), (Dims{20, 20, 4}));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix u = solve_diffusion({20, grid[k].first, grid[k].second, {}});
    for (Index i = 0; i < 20; ++i)
      for (Index j = 0; j < 20; ++j) EXPECT_EQ(a(i, j, static_cast<Index>(k)), u(i, j));
  }
}

TEST(FlattenSolution, RowMajorMatchesKron) {
  Vector x(2), y(3);
  x << 1.0, 2.0;
  y << 3.0, 4.0, 5.0;
  const Vector f = flatten_solution(x * y.transpose());
  EXPECT_EQ(f, khatri_rao(x, y).col(0));
}

TEST(Orthonormalize, DropsDependentColumns) {
  std::mt19937_64 rng(80);
  Matrix v = gaussian(20, 4, rng);
  v.col(3) = v.col(0) + 2.0 * v.col(1);
  const Matrix q = orthonormalize(v);
  ASSERT_EQ(q.cols(), 3);
  EXPECT_LE((q.transpose() * q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((v - q * (q.transpose() * v)).norm(), 1e-10 * v.norm());
}

TEST(PodBasis, RankOneCommonMode) {
  std::mt19937_64 rng(81);
  const Vector mode = gaussian(12, 1, rng);
  Tensor3 a(Dims{3, 4, 5});
  for (Index k = 0; k < 5; ++k)
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 4; ++j) a(i, j, k) = (k + 1.0) * mode(i * 4 + j);
  const ReducedBasis b = pod_basis(a, 1);
  const Vector unit = mode / mode.norm();
  EXPECT_NEAR(std::abs(b.phi.col(0).dot(unit)), 1.0, 1e-12);
  EXPECT_EQ(b.source, BasisSource::Pod);
}

TEST(PodBasis, FullRankReproducesTraining) {
  std::mt19937_64 rng(82);
  const Tensor3 a = hybridcp::testing::random_tensor({6, 5, 7}, rng);
  const ReducedBasis b = pod_basis(a, 7);
  Matrix truths(30, 7);
  for (Index k = 0; k < 7; ++k)
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 5; ++j) truths(i * 5 + j, k) = a(i, j, k);
  for (double e : project_error(b, truths)) EXPECT_LE(e, 1e-10);
  EXPECT_THROW(pod_basis(a, 8), ArgumentError);
  EXPECT_THROW(pod_basis(a, 0), ArgumentError);
}

TEST(PodBasis, MatchesGramEigenvectors) {
  const Tensor3 a = assemble_snapshots(parameter_grid(3), 50);
  const ReducedBasis b = pod_basis(a, 4);
  Matrix snap(2500, 9);
  for (Index k = 0; k < 9; ++k)
    for (Index i = 0; i < 50; ++i)
      for (Index j = 0; j < 50; ++j) snap(i * 50 + j, k) = a(i, j, k);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(snap.transpose() * snap);
  for (Index r = 0; r < 4; ++r) {
    const Index col = 8 - r;
    const double sigma = std::sqrt(eig.eigenvalues()(col));
    const Vector u = snap * eig.eigenvectors().col(col) / sigma;
    EXPECT_NEAR(std::abs(u.dot(b.phi.col(r))), 1.0, 1e-8) << "r = " << r;
  }
  EXPECT_LE((b.phi.transpose() * b.phi - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ProjectError, InSpanIsZeroAndNestedBasesDecrease) {
  const Tensor3 a = assemble_snapshots(parameter_grid(3), 20);
  const auto tests = random_parameters(4, 9);
  const ReducedBasis full = pod_basis(a, 9);
  Matrix truths(400, 9);
  for (Index k = 0; k < 9; ++k)
    for (Index i = 0; i < 20; ++i)
      for (Index j = 0; j < 20; ++j) truths(i * 20 + j, k) = a(i, j, k);
  for (double e : project_error(full, truths)) EXPECT_LE(e, 1e-10 * truths.norm());

  std::vector<double> previous(tests.size(), std::numeric_limits<double>::infinity());
  for (Index r = 1; r <= 9; ++r) {
    const ReducedBasis b{full.phi.leftCols(r), BasisSource::Pod};
    const auto errs = project_error(b, tests, 20);
    for (std::size_t t = 0; t < errs.size(); ++t) {
      EXPECT_LE(errs[t], previous[t] * (1.0 + 1e-12));
      previous[t] = errs[t];
    }
  }
}

namespace {

Tensor3 separable_rank_two() {
  std::mt19937_64 rng(83);
  CPModel m = normalize(hybridcp::testing::random_model({12, 12, 6}, 2, rng));
  m.alpha << 2.0, 1.0;
  return reconstruct(m);
}

double worst_slice_residual(const Tensor3& a, const Matrix& phi) {
  double worst = 0.0;
  for (Index k = 0; k < a.dims().K; ++k) {
    Matrix slice(a.dims().I, a.dims().J);
    for (Index i = 0; i < slice.rows(); ++i)
      for (Index j = 0; j < slice.cols(); ++j) slice(i, j) = a(i, j, k);
    const Vector u = flatten_solution(slice);
    worst = std::max(worst, (u - phi * (phi.transpose() * u)).norm() / u.norm());
  }
  return worst;
}

} // namespace

TEST(CpReducedBasis, SeparableRankTwo) {
  const Tensor3 a = separable_rank_two();
  CpBasisConfig cfg;
  cfg.rank0 = 4;
  cfg.completion.record_timing = false;
  const CpBasisResult res = cp_reduced_basis(a, cfg);
  EXPECT_EQ(res.selected_rank, 2);
  const Matrix& phi = res.basis.phi;
  EXPECT_EQ(res.basis.source, BasisSource::Cp);
  EXPECT_LE((phi.transpose() * phi - Matrix::Identity(phi.cols(), phi.cols())).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(worst_slice_residual(a, phi), 1e-8);
}

TEST(CpReducedBasis, UndampedAlsSpanIsExact) {
  const Tensor3 a = separable_rank_two();
  CpBasisConfig cfg;
  cfg.rank0 = 4;
  cfg.als_rho = 0.0;
  cfg.completion.record_timing = false;
  const CpBasisResult res = cp_reduced_basis(a, cfg);
  ASSERT_EQ(res.selected_rank, 2);
  EXPECT_LE(worst_slice_residual(a, res.basis.phi), 1e-10);
}

TEST(CompressionRatio, Examples) {
  EXPECT_NEAR(compression_ratio({100, 100, 81}, 20, Scheme::Pod), 4.02, 5e-3);
  EXPECT_NEAR(compression_ratio({100, 100, 81}, 20, Scheme::Cp), 143.62, 5e-3);
  EXPECT_DOUBLE_EQ(compression_ratio({2, 2, 2}, 1, Scheme::Cp), 8.0 / 7.0);
  EXPECT_GT(compression_ratio({40, 40, 81}, 20, Scheme::Cp), compression_ratio({40, 40, 81}, 20, Scheme::Pod));
  EXPECT_THROW(compression_ratio({2, 2, 2}, 0, Scheme::Pod), ArgumentError);
}
