#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hybridcp/completion.hpp"

namespace hybridcp {

struct ChebDiff {
  Vector points; ///< x_j = cos(j pi / N), j = 0..N
  Matrix D;      ///< (N+1) x (N+1) differentiation matrix
};

/// Chebyshev-Gauss-Lobatto points and differentiation matrix, with the
/// diagonal set by the negative row sum.
ChebDiff cheb_diff(Index N);

/// (1 + mu1 x) u_xx + (1 + mu2 y) u_yy = exp(4xy) on [-1,1]^2, u = 0 on the boundary.
struct DiffusionProblem {
  Index nx = 40; ///< collocation points per direction, boundary included
  double mu1 = 0.0;
  double mu2 = 0.0;
  /// Right-hand side f(x, y); empty means exp(4xy).
  std::function<double(double, double)> source{};

  void validate() const;
  double rhs(double x, double y) const;
};

using Parameter = std::pair<double, double>;

/// nx x nx grid solution, u(i, j) = u(x_i, y_j) on the Chebyshev points; boundary rows and columns are 0.
Matrix solve_diffusion(const DiffusionProblem& p);

/// ||L u - f|| / ||f|| over the interior nodes for the discrete operator L.
double diffusion_residual(const DiffusionProblem& p, const Matrix& u);

/// n x n Cartesian grid on [lo, hi]^2, mu1-major.
std::vector<Parameter> parameter_grid(Index n, double lo = -0.99, double hi = 0.99);

/// `count` uniform samples from [lo, hi]^2.
std::vector<Parameter> random_parameters(Index count, std::uint64_t seed, double lo = -0.99,
                                         double hi = 0.99);

/// Slice k of the nx x nx x |grid| tensor is the solution at grid[k].
Tensor3 assemble_snapshots(const std::vector<Parameter>& grid, Index nx);

/// Row-major flattening, entry (i, j) at i*cols + j. Matches kron(x, y).
Vector flatten_solution(const Matrix& u);

enum class BasisSource { Cp, Pod };

struct ReducedBasis {
  Matrix phi; ///< N x R, orthonormal columns
  BasisSource source = BasisSource::Pod;

  Index size() const { return phi.cols(); }
};

/// Orthonormal basis of the span of `vectors` via column-pivoted QR,
/// dropping directions whose R diagonal falls below 1e-10 of the largest.
Matrix orthonormalize(const Matrix& vectors);

struct CpBasisConfig {
  Index rank0 = 50;
  double epsilon = 1e-2;
  /// Hybrid lambda seeded at 10 for the first projected problem.
  CompletionConfig completion = [] {
    CompletionConfig c;
    c.hybrid.initial_lambda = 10.0;
    return c;
  }();
  double als_rho = -1.0; ///< negative selects default_als_rho
  int als_max_sweeps = 200;
  double als_tol = 1e-8;
};

struct CpBasisResult {
  ReducedBasis basis;
  Index selected_rank = 0; ///< components kept after truncation
  CPModel model;           ///< regularized ALS model at the selected rank
  CompletionResult completion;
};

/**
 * Hybrid completion on the full mask at rank0, truncation at epsilon,
 * regularized ALS at the surviving rank, then vectorize x_r o y_r and
 * orthonormalize.
 */
CpBasisResult cp_reduced_basis(const Tensor3& a, const CpBasisConfig& cfg);

/// Leading R left singular vectors of the (I*J) x K snapshot matrix.
ReducedBasis pod_basis(const Tensor3& a, Index rank);

/// l2 norm of u - Phi Phi^T u for each column u of `truths`.
std::vector<double> project_error(const ReducedBasis& basis, const Matrix& truths);

/// Solves the truth problem at every test parameter, then projects.
std::vector<double> project_error(const ReducedBasis& basis, const std::vector<Parameter>& tests,
                                  Index nx);

enum class Scheme { Cp, Pod };

/// pod: IJK / (R (IJ + K + 1)); cp: IJK / (R (I + J + K + 1)).
double compression_ratio(Dims dims, Index rank, Scheme scheme);

} // namespace hybridcp
