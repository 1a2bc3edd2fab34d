#include <cmath>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "hybridcp/completion.hpp"
#include "hybridcp/error.hpp"
#include "support.hpp"

using namespace hybridcp;
using hybridcp::testing::gaussian;
using hybridcp::testing::random_model;
using hybridcp::testing::random_tensor;

namespace {

/// Gaussian factors, alpha = 1..R.
Tensor3 exact_rank(Dims d, Index R, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CPModel m = random_model(d, R, rng);
  for (Index r = 0; r < R; ++r) m.alpha(r) = 1.0 + static_cast<double>(r);
  return reconstruct(normalize(m));
}

CompletionConfig small_config() {
  CompletionConfig cfg;
  cfg.rank = 4;
  cfg.max_iterations = 15;
  cfg.seed = 3;
  cfg.record_timing = false;
  return cfg;
}

} // namespace

TEST(RandomMask, CountAndReproducibility) {
  const Mask a = make_random_mask({10, 10, 10}, 0.7, 5);
  const Mask b = make_random_mask({10, 10, 10}, 0.7, 5);
  EXPECT_EQ(a.count(), 700u);
  EXPECT_EQ(a.observed(), b.observed());
}

TEST(RandomMask, SeedsDiffer) {
  const Mask a = make_random_mask({10, 10, 10}, 0.7, 5);
  const Mask b = make_random_mask({10, 10, 10}, 0.7, 6);
  const std::set<Triple> sa(a.observed().begin(), a.observed().end());
  const std::set<Triple> sb(b.observed().begin(), b.observed().end());
  EXPECT_NE(sa, sb);
}

TEST(RandomMask, FullFractionAndBadFractions) {
  EXPECT_EQ(make_random_mask({3, 4, 5}, 1.0, 1).count(), 60u);
  EXPECT_EQ(make_random_mask({3, 4, 5}, 0.5, 1).count(), 30u);
  EXPECT_EQ(make_random_mask({3, 3, 3}, 0.5, 1).count(), 14u);
  EXPECT_THROW(make_random_mask({3, 3, 3}, 0.0, 1), ArgumentError);
  EXPECT_THROW(make_random_mask({3, 3, 3}, 1.5, 1), ArgumentError);
}

TEST(RectMask, HidesRectangleInEveryChannel) {
  const Mask m = make_rect_mask({4, 5, 3}, 1, 2, 3, 4);
  EXPECT_EQ(m.count(), (20u - 4u) * 3u);
  for (Index k = 0; k < 3; ++k) {
    EXPECT_FALSE(m.contains(2, 1, k));
    EXPECT_FALSE(m.contains(3, 2, k));
    EXPECT_TRUE(m.contains(1, 1, k));
    EXPECT_TRUE(m.contains(2, 3, k));
  }
  EXPECT_THROW(make_rect_mask({4, 5, 3}, 0, 0, 6, 1), ArgumentError);
  EXPECT_THROW(make_rect_mask({4, 5, 3}, 2, 0, 1, 1), ArgumentError);
}

TEST(RelativeError, Examples) {
  std::mt19937_64 rng(60);
  const Tensor3 a = random_tensor({3, 4, 5}, rng);
  EXPECT_EQ(relative_error(a, a), 0.0);
  Tensor3 twice = a;
  for (double& v : twice.values()) v *= 2.0;
  EXPECT_DOUBLE_EQ(relative_error(twice, a), 1.0);
}

TEST(RelativeError, MatchesDirectLoop) {
  std::mt19937_64 rng(61);
  const Tensor3 s = random_tensor({3, 4, 5}, rng);
  const Tensor3 a = random_tensor({3, 4, 5}, rng);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j)
      for (Index k = 0; k < 5; ++k) {
        num += (s(i, j, k) - a(i, j, k)) * (s(i, j, k) - a(i, j, k));
        den += a(i, j, k) * a(i, j, k);
      }
  EXPECT_NEAR(relative_error(s, a), std::sqrt(num / den), 1e-14);
}

TEST(RelativeError, ZeroReferenceAndMismatchThrow) {
  EXPECT_THROW(relative_error(Tensor3(Dims{2, 2, 2}), Tensor3(Dims{2, 2, 2})), ArgumentError);
  EXPECT_THROW(relative_error(Tensor3(Dims{2, 2, 2}), Tensor3(Dims{2, 2, 1})), ArgumentError);
}

TEST(ObservedResidual, MatchesDirectSum) {
  std::mt19937_64 rng(62);
  const Tensor3 s = random_tensor({4, 4, 4}, rng);
  const Tensor3 t = random_tensor({4, 4, 4}, rng);
  const Mask mask = make_random_mask(t.dims(), 0.4, 2);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j)
      for (Index k = 0; k < 4; ++k)
        if (mask.contains(i, j, k)) {
          num += (s(i, j, k) - t(i, j, k)) * (s(i, j, k) - t(i, j, k));
          den += t(i, j, k) * t(i, j, k);
        }
  EXPECT_NEAR(observed_residual(s, t, mask), std::sqrt(num / den), 1e-14);
}

TEST(AlphaSubproblem, PreservesResidualNorm) {
  std::mt19937_64 rng(63);
  const CPModel m = normalize(random_model({5, 4, 6}, 4, rng));
  const Tensor3 t = random_tensor(m.dims(), rng);
  const AlphaSubproblem sub = alpha_subproblem(m, t);
  ASSERT_EQ(sub.h.cols(), 4);
  const Matrix q = build_Q(m);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector a = gaussian(4, 1, rng);
    const double direct = (q.transpose() * a - vectorize(t)).norm();
    EXPECT_NEAR((sub.h * a - sub.d).norm(), direct, 1e-10 * direct);
  }
}

TEST(AlphaSubproblem, RankDeficientQ) {
  std::mt19937_64 rng(64);
  CPModel m = normalize(random_model({4, 4, 4}, 3, rng));
  m.A.col(2) = m.A.col(0);
  m.B.col(2) = m.B.col(0);
  m.C.col(2) = m.C.col(0);
  const Tensor3 t = random_tensor(m.dims(), rng);
  const AlphaSubproblem sub = alpha_subproblem(m, t);
  const Matrix q = build_Q(m);
  const Vector a = gaussian(3, 1, rng);
  const double direct = (q.transpose() * a - vectorize(t)).norm();
  EXPECT_NEAR((sub.h * a - sub.d).norm(), direct, 1e-10 * direct);
}

TEST(InitialModel, UnitColumnsAndLeastSquaresAlpha) {
  std::mt19937_64 rng(65);
  const Tensor3 t = random_tensor({5, 6, 4}, rng);
  const CPModel m = initial_model(t, 3, 9);
  for (const Matrix* x : {&m.A, &m.B, &m.C})
    for (Index r = 0; r < 3; ++r) EXPECT_NEAR(x->col(r).norm(), 1.0, 1e-12);
  CPModel unit = m;
  const Matrix q = build_Q(unit);
  const Vector ls = q.transpose().colPivHouseholderQr().solve(vectorize(t));
  for (Index r = 0; r < 3; ++r) {
    if (std::abs(ls(r)) >= 1e-8) EXPECT_NEAR(m.alpha(r), ls(r), 1e-10 * std::max(1.0, std::abs(ls(r))));
    else EXPECT_EQ(std::abs(m.alpha(r)), 1e-8);
  }
  EXPECT_EQ(initial_model(t, 3, 9).A, m.A);
}

TEST(Complete, ObservedEntriesRestoredBitwise) {
  std::mt19937_64 rng(66);
  const Tensor3 t = random_tensor({6, 6, 6}, rng);
  const Mask mask = make_random_mask(t.dims(), 0.6, 4);
  const CompletionResult res = complete(t, mask, small_config());
  for (const auto& [i, j, k] : mask.observed()) EXPECT_EQ(res.completed(i, j, k), t(i, j, k));
}

TEST(Complete, MissingEntriesMayHoldAnything) {
  std::mt19937_64 rng(67);
  Tensor3 t = random_tensor({5, 5, 5}, rng);
  const Mask mask = make_rect_mask(t.dims(), 1, 1, 3, 3);
  t(1, 1, 0) = std::numeric_limits<double>::quiet_NaN();
  const CompletionResult res = complete(t, mask, small_config());
  EXPECT_TRUE(std::isfinite(res.completed(1, 1, 0)));
}

TEST(Complete, ErrorPaths) {
  std::mt19937_64 rng(68);
  Tensor3 t = random_tensor({4, 4, 4}, rng);
  EXPECT_THROW(complete(t, Mask(t.dims(), {}), small_config()), ArgumentError);
  CompletionConfig big = small_config();
  big.rank = 17;
  EXPECT_THROW(complete(t, Mask::full(t.dims()), big), ArgumentError);
  CompletionConfig bad = small_config();
  bad.tolerance = 1.0;
  EXPECT_THROW(complete(t, Mask::full(t.dims()), bad), ArgumentError);
  t(0, 0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(complete(t, Mask::full(t.dims()), small_config()), DataError);
  EXPECT_THROW(complete(t, Mask::full({4, 4, 3}), small_config()), ArgumentError);
}

TEST(Complete, DeterministicForFixedSeed) {
  const Tensor3 t = exact_rank({7, 6, 5}, 2, 70);
  const Mask mask = make_random_mask(t.dims(), 0.7, 1);
  const CompletionResult a = complete(t, mask, small_config());
  const CompletionResult b = complete(t, mask, small_config());
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t n = 0; n < a.trace.size(); ++n) {
    EXPECT_EQ(a.trace[n].residual, b.trace[n].residual);
    EXPECT_EQ(a.trace[n].lambda, b.trace[n].lambda);
  }
  EXPECT_EQ(a.completed, b.completed);
  EXPECT_EQ(a.model.alpha, b.model.alpha);
}

TEST(Complete, TraceShapeAndDescent) {
  const Tensor3 t = exact_rank({8, 8, 8}, 2, 71);
  const Mask mask = make_random_mask(t.dims(), 0.7, 2);
  CompletionConfig cfg = small_config();
  cfg.max_iterations = 40;
  const CompletionResult res = complete(t, mask, cfg);
  ASSERT_FALSE(res.trace.empty());
  EXPECT_EQ(res.trace.front().iteration, 1);
  EXPECT_EQ(res.lambda_histories.size(), res.trace.size());
  EXPECT_LE(res.trace.back().residual, res.trace.front().residual);
  for (const TraceRow& row : res.trace) EXPECT_EQ(row.wall_ms, 0.0);
}

TEST(Complete, FixedLambdaModeRecordsLambda) {
  const Tensor3 t = exact_rank({6, 6, 6}, 2, 72);
  CompletionConfig cfg = small_config();
  cfg.mode = AlphaMode::FixedLambda;
  cfg.lambda = 0.01;
  const CompletionResult res = complete(t, make_random_mask(t.dims(), 0.8, 3), cfg);
  for (const TraceRow& row : res.trace) EXPECT_EQ(row.lambda, 0.01);
  EXPECT_TRUE(res.lambda_histories.empty());
}

TEST(Complete, FullMaskExactRankThree) {
  const Tensor3 t = exact_rank({15, 15, 15}, 3, 73);
  CompletionConfig cfg;
  cfg.rank = 10;
  cfg.seed = 1;
  cfg.record_timing = false;
  const CompletionResult res = complete(t, Mask::full(t.dims()), cfg);
  // with every entry observed the completed tensor is t itself, so judge the model
  EXPECT_LE(relative_error(reconstruct(res.model), t), 1e-3);
  EXPECT_EQ(res.truncated.rank(), 3);
}

TEST(Complete, RankFiveThirtyPercentMissing) {
  const Tensor3 t = exact_rank({30, 30, 30}, 5, 74);
  CompletionConfig cfg;
  cfg.rank = 10;
  cfg.seed = 1;
  cfg.record_timing = false;
  const CompletionResult res = complete(t, make_random_mask(t.dims(), 0.7, 1), cfg);
  EXPECT_LE(relative_error(res.completed, t), 5e-2);
}
