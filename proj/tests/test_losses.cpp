#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "mmdr/gradient_suite.hpp"
#include "mmdr/losses.hpp"
#include "oracles.hpp"

namespace {

using mmdr::Matrix;
using mmdr::ad::Tape;
namespace ad = mmdr::ad;

double cmd(const Matrix& x, const Matrix& y, int k = 5) {
  Tape t;
  mmdr::CmdConfig cfg;
  cfg.max_order = k;
  return mmdr::cmd_loss(t.constant(x), t.constant(y), cfg).scalar();
}

TEST(Cmd, IdenticalBatchesGiveZero) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Matrix x = oracle::random(8, 4, rng);
    EXPECT_LE(std::abs(cmd(x, x)), 1e-10);
  }
}

TEST(Cmd, SymmetricAndPermutationInvariant) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Matrix x = oracle::random(8, 4, rng), y = oracle::random(8, 4, rng, -1.5, 0.7);
    EXPECT_LE(std::abs(cmd(x, y) - cmd(y, x)), 1e-10);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(cmd(x.gather_rows(perm), y), cmd(x, y), 1e-12);
  }
}

TEST(Cmd, ShiftOnlyLeavesMeanTerm) {
  // Shifting by c changes only the first term: |c| * sqrt(cols) / range.
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random(6, 3, rng);
  Matrix y = x;
  for (double& v : y.values()) v += 0.5;
  double lo = x[0], hi = x[0];
  for (const Matrix* m : {&x, static_cast<const Matrix*>(&y)})
    for (double v : m->values()) lo = std::min(lo, v), hi = std::max(hi, v);
  EXPECT_NEAR(cmd(x, y), 0.5 * std::sqrt(3.0) / (hi - lo), 1e-12);
}

TEST(Cmd, MatchesOracle) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Matrix x = oracle::random(5 + i % 4, 3, rng), y = oracle::random(5 + i % 4, 3, rng, 0.0, 2.0);
    for (int k = 2; k <= 6; ++k) EXPECT_NEAR(cmd(x, y, k), oracle::cmd(x, y, k), 1e-10);
  }
}

TEST(Cmd, ConstantBatchesAreFinite) {
  const Matrix x(4, 2, 1.0);
  EXPECT_EQ(cmd(x, x), 0.0);
  Tape t;
  auto v = t.variable(x);
  t.backward(mmdr::cmd_loss(v, t.constant(x)));
  EXPECT_TRUE(v.grad().all_finite());
}

TEST(Cmd, RejectsBadInput) {
  EXPECT_THROW(cmd(Matrix(4, 2), Matrix(4, 3)), std::invalid_argument);
  EXPECT_THROW(cmd(Matrix(4, 2), Matrix(4, 2), 1), std::invalid_argument);
}

TEST(Orthogonality, ZeroOnDisjointSupportAndNonNegative) {
  Tape t;
  auto col = [&](std::size_t hot) {
    Matrix m(4, 1, 0.0);
    m[hot] = 1.5;
    return t.constant(m);
  };
  const mmdr::DisentangledBundle v{col(0), col(1), col(2), col(3)};
  const mmdr::DisentangledBundle a{col(1), col(0), col(3), col(2)};
  EXPECT_EQ(mmdr::orthogonality_loss(v, a).scalar(), 0.0);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    oracle::Parts pv{oracle::random(6, 3, rng), oracle::random(6, 3, rng), oracle::random(6, 3, rng),
                     oracle::random(6, 3, rng)};
    oracle::Parts pa{oracle::random(6, 3, rng), oracle::random(6, 3, rng), oracle::random(6, 3, rng),
                     oracle::random(6, 3, rng)};
    const mmdr::DisentangledBundle bv{t.constant(pv.fc), t.constant(pv.fs), t.constant(pv.nc), t.constant(pv.ns)};
    const mmdr::DisentangledBundle ba{t.constant(pa.fc), t.constant(pa.fs), t.constant(pa.nc), t.constant(pa.ns)};
    const double got = mmdr::orthogonality_loss(bv, ba).scalar();
    EXPECT_GE(got, 0.0);
    EXPECT_NEAR(got, oracle::orth(pv, pa), 1e-10);
  }
}

TEST(Orthogonality, SingleModalityExample) {
  // F_c = [1,0], F_s = [1,1] as 2x1 columns -> (F_c^T F_s)^2 = 1.
  Tape t;
  const auto zero = t.constant(Matrix(2, 1, 0.0));
  const mmdr::DisentangledBundle v{t.constant(Matrix::from_rows({{1}, {0}})), t.constant(Matrix::from_rows({{1}, {1}})),
                                   zero, zero};
  const mmdr::DisentangledBundle a{zero, zero, zero, zero};
  EXPECT_DOUBLE_EQ(mmdr::orthogonality_loss(v, a).scalar(), 1.0);
}

TEST(Reconstruction, MatchesOracleAndPerfectIsZero) {
  std::mt19937_64 rng(6);
  Tape t;
  for (int i = 0; i < 20; ++i) {
    const std::array<Matrix, 2> orig{oracle::random(4, 6, rng), oracle::random(4, 2, rng)};
    const std::array<Matrix, 2> self{oracle::random(4, 6, rng), oracle::random(4, 2, rng)};
    const std::array<Matrix, 2> cross{oracle::random(4, 6, rng), oracle::random(4, 2, rng)};
    const auto c = [&](const Matrix& m) { return t.constant(m); };
    EXPECT_NEAR(mmdr::reconstruction_loss({c(orig[0]), c(orig[1])}, {c(self[0]), c(self[1])},
                                          {c(cross[0]), c(cross[1])}).scalar(),
                oracle::recon(orig, self, cross), 1e-10);
    EXPECT_EQ(mmdr::reconstruction_loss({c(orig[0]), c(orig[1])}, {c(orig[0]), c(orig[1])},
                                        {c(orig[0]), c(orig[1])}).scalar(),
              0.0);
  }
}

TEST(Reconstruction, RejectsShapeMismatch) {
  Tape t;
  const auto a = t.constant(Matrix(2, 3)), b = t.constant(Matrix(2, 4));
  EXPECT_THROW(mmdr::reconstruction_loss({a, a}, {b, a}, {a, a}), std::invalid_argument);
}

TEST(TaskAndBce, KnownValues) {
  Tape t;
  EXPECT_DOUBLE_EQ(mmdr::task_loss(t.constant(Matrix::from_rows({{1}, {3}})), Matrix::from_rows({{0}, {1}})).scalar(),
                   2.5);
  const auto half = t.constant(Matrix(2, 1, 0.5));
  const Matrix y = Matrix::from_rows({{1}, {0}});
  EXPECT_NEAR(mmdr::untask_loss(half, y).scalar(), std::log(2.0), 1e-15);
  // Reversed labels: a confident correct prediction is penalized heavily.
  const auto sure = t.constant(Matrix::from_rows({{0.99}, {0.01}}));
  EXPECT_NEAR(mmdr::untask_loss(sure, y).scalar(), -std::log(0.01), 1e-12);
  EXPECT_THROW(mmdr::untask_loss(half, Matrix::from_rows({{0.5}, {1}})), std::invalid_argument);
}

TEST(TaskAndBce, ClampKeepsLossFinite) {
  Tape t;
  const auto p = t.variable(Matrix::from_rows({{0.0}, {1.0}}));
  const auto loss = ad::bce_mean(p, Matrix::from_rows({{1}, {0}}));
  EXPECT_NEAR(loss.scalar(), -std::log(1e-7), 1e-9);
  t.backward(loss);
  EXPECT_TRUE(p.grad().all_finite());
}

TEST(Contribution, SumsPerFeatureBce) {
  std::mt19937_64 rng(7);
  Tape t;
  const Matrix y = Matrix::from_rows({{1}, {0}, {0}, {1}, {1}});
  std::array<ad::Var, 4> probs;
  double expect = 0.0;
  for (auto& p : probs) {
    const Matrix m = oracle::random(5, 1, rng, 0.05, 0.95);
    expect += oracle::bce(m, y);
    p = t.constant(m);
  }
  const auto terms = mmdr::contribution_loss(probs, y);
  EXPECT_NEAR(terms.total.scalar(), expect, 1e-12);
  double sum = 0.0;
  for (double v : terms.per_feature_values()) sum += v;
  EXPECT_NEAR(sum, terms.total.scalar(), 1e-12);
}

TEST(Alignment, ZeroWhenRankingRespected) {
  Tape t;
  // losses ascending in stack order, weights descending with gaps >= 0.05
  const std::array<double, 4> losses{0.1, 0.2, 0.3, 0.4};
  const Matrix w = Matrix::from_rows({{0.4, 0.3, 0.2, 0.1}, {0.55, 0.25, 0.15, 0.05}});
  EXPECT_EQ(mmdr::alignment_loss(t.constant(w), losses, 0.05).scalar(), 0.0);
}

TEST(Alignment, UniformWeightsCostMarginPerPair) {
  // Of each pair's two orders only the one with the smaller loss first pays eps: 6 * eps / 6.
  Tape t;
  const Matrix w(3, 4, 0.25);
  const std::array<double, 4> losses{0.4, 0.1, 0.3, 0.2};
  EXPECT_NEAR(mmdr::alignment_loss(t.constant(w), losses, 0.05).scalar(), 0.05, 1e-15);
}

TEST(Alignment, MatchesBruteForceAndIsNonNegative) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    Tape t;
    const Matrix w = ad::softmax_rows(t.constant(oracle::random(5, 4, rng, -2, 2))).value();
    std::array<double, 4> losses{};
    for (double& l : losses) l = oracle::random(1, 1, rng, 0.0, 1.0)[0];
    const double got = mmdr::alignment_loss(t.constant(w), losses, 0.05).scalar();
    EXPECT_GE(got, 0.0);
    EXPECT_NEAR(got, oracle::align(w, losses, 0.05), 1e-12);
  }
}

TEST(Alignment, RejectsBadInput) {
  Tape t;
  const std::array<double, 4> losses{0.1, 0.2, 0.3, 0.4};
  EXPECT_THROW(mmdr::alignment_loss(t.constant(Matrix(2, 3, 0.3)), losses), std::invalid_argument);
  EXPECT_THROW(mmdr::alignment_loss(t.constant(Matrix(2, 4, 0.25)), losses, 0.0), std::invalid_argument);
}

TEST(Total, RecombinationIsExact) {
  EXPECT_EQ(mmdr::total_loss({}).total, 0.0);
  EXPECT_EQ(mmdr::total_loss({1, 0, 0, 0, 0, 0, 0, 0}).total, 1.0);
  EXPECT_NEAR(mmdr::total_loss({1, 1, 1, 1, 1, 1, 1, 0}, 0.7, 0.5).total, 5.1, 1e-12);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Matrix r = oracle::random(1, 7, rng, 0.0, 5.0);
    const auto p = mmdr::total_loss({r[0], r[1], r[2], r[3], r[4], r[5], r[6], 0});
    EXPECT_NEAR(p.reassemble(0.7, 0.5), p.total, 1e-12);
  }
}

TEST(GradientSuite, EveryLossPassesAtTenSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (const auto& c : mmdr::loss_gradient_cases(seed))
      EXPECT_TRUE(c.passed()) << c.name << " seed " << seed << " rel err " << c.max_relative_error;
}

TEST(GradientSuite, KinkDetectionSkipsDegenerateAlignment) {
  const Matrix w = Matrix::from_rows({{0.3, 0.25, 0.25, 0.2}});
  // w_1 - w_0 + eps is exactly zero.
  const std::array<double, 4> losses{0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(mmdr::detail::alignment_kink_distance(w, losses, 0.05), 0.0, 1e-15);
}

}  // namespace
