#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mmdr/autodiff.hpp"
#include "mmdr/gradcheck.hpp"
#include "oracles.hpp"

namespace {

using mmdr::Matrix;
using mmdr::ad::Tape;
using mmdr::ad::Var;
namespace ad = mmdr::ad;

TEST(Matrix, ShapeAndIndexing) {
  Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.transposed()(2, 1), 6.0);
  const std::vector<std::size_t> pick{1, 1, 0};
  const Matrix g = m.gather_rows(pick);
  EXPECT_EQ(g(0, 0), 4.0);
  EXPECT_EQ(g(2, 2), 3.0);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Autodiff, SumOfSquaresGradientIsExact) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random(5, 4, rng);
  const double err = ad::grad_check([](Tape&, const Var& v) { return ad::sum(ad::mul(v, v)); }, x, 1e-4);
  EXPECT_LE(err, 1e-7);
}

TEST(Autodiff, GradCheckRejectsBadInput) {
  const Matrix x(2, 2, 1.0);
  EXPECT_THROW(ad::grad_check([](Tape&, const Var& v) { return ad::sum(v); }, x, 0.0), std::invalid_argument);
  EXPECT_THROW(ad::grad_check([](Tape&, const Var& v) { return ad::scale(ad::sum(v), INFINITY); }, x, 1e-4),
               ad::EvaluationError);
}

TEST(Autodiff, SoftmaxKnownValues) {
  Tape t;
  const Matrix out = ad::softmax_rows(t.constant(Matrix::from_rows({{0, 0, 0, 0}, {1000, 0, 0, 0}}))).value();
  for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(out(0, c), 0.25);
  EXPECT_NEAR(out(1, 0), 1.0, 1e-12);
  EXPECT_TRUE(out.all_finite());
}

TEST(Autodiff, CentralMomentExamples) {
  EXPECT_DOUBLE_EQ(ad::central_moment(Matrix::from_rows({{1}, {-1}}), 2)[0], 1.0);
  EXPECT_DOUBLE_EQ(ad::central_moment(Matrix::from_rows({{3}, {3}, {3}}), 4)[0], 0.0);
  EXPECT_DOUBLE_EQ(ad::central_moment(Matrix::from_rows({{-1}, {0}, {1}}), 3)[0], 0.0);
  EXPECT_THROW(ad::central_moment(Matrix::from_rows({{1}, {2}}), 1), std::invalid_argument);
}

TEST(Autodiff, Norm2HasZeroGradientAtOrigin) {
  Tape t;
  Var x = t.variable(Matrix(1, 3, 0.0));
  Var n = ad::norm2(x);
  t.backward(n);
  EXPECT_EQ(n.scalar(), 0.0);
  const Matrix g = x.grad();
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Autodiff, ConcatRoutesGradientSlices) {
  std::mt19937_64 rng(2);
  const Matrix a = oracle::random(3, 2, rng), b = oracle::random(3, 4, rng), w = oracle::random(3, 6, rng);
  auto grad_of_a = [&](const Matrix& b_value) {
    Tape t;
    Var va = t.variable(a), vb = t.variable(b_value);
    t.backward(ad::sum(ad::mul(ad::concat_cols({va, vb}), t.constant(w))));
    return va.grad();
  };
  const Matrix g1 = grad_of_a(b);
  const Matrix g2 = grad_of_a(oracle::random(3, 4, rng));
  EXPECT_EQ(g1, g2);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(g1(r, c), w(r, c));
}

TEST(Autodiff, ForwardIsDeterministic) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random(6, 5, rng), w = oracle::random(5, 3, rng);
  auto run = [&] {
    Tape t;
    return ad::softmax_rows(ad::tanh(ad::matmul(t.constant(x), t.constant(w)))).value();
  };
  EXPECT_EQ(run(), run());
}

TEST(Autodiff, BackwardAccumulatesAcrossReuse) {
  Tape t;
  Var x = t.variable(Matrix(1, 1, 3.0));
  t.backward(ad::add(ad::mul(x, x), x));  // x^2 + x
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(Autodiff, DetachBlocksGradient) {
  Tape t;
  Var x = t.variable(Matrix(1, 1, 2.0));
  t.backward(ad::mul(x, ad::detach(x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
}

TEST(Autodiff, ShapeErrors) {
  Tape t;
  const Var a = t.constant(Matrix(2, 3)), b = t.constant(Matrix(3, 2));
  EXPECT_THROW(ad::add(a, b), std::invalid_argument);
  EXPECT_THROW(ad::matmul(a, a), std::invalid_argument);
  EXPECT_THROW(ad::slice_cols(a, 2, 2), std::invalid_argument);
  EXPECT_THROW(t.backward(a), std::invalid_argument);
}

struct OpCase {
  std::string name;
  std::function<Var(Tape&, const Var&)> f;
  std::size_t rows, cols;
  double lo = -1.0, hi = 1.0;
};

std::vector<OpCase> op_cases() {
  // Side inputs are fixed per case so the only free variable is the checked one.
  // Polynomial cases sample away from 0, where the slope vanishes and the
  // central-difference truncation error dominates the relative error.
  std::mt19937_64 side_rng(77);
  const Matrix w35 = oracle::random(5, 3, side_rng), other = oracle::random(4, 5, side_rng);
  const Matrix row = oracle::random(1, 5, side_rng), col = oracle::random(4, 1, side_rng);
  const Matrix weights = oracle::random(4, 5, side_rng);
  const Matrix targets = Matrix::from_rows({{0}, {1}, {1}, {0}});
  auto weighted = [weights](Tape& t, const Var& y) { return ad::sum(ad::mul(y, t.constant(weights))); };
  return {
      {"add", [=](Tape& t, const Var& x) { return weighted(t, ad::add(x, ad::mul(x, x))); }, 4, 5},
      {"sub", [=](Tape& t, const Var& x) { return weighted(t, ad::sub(t.constant(other), ad::mul(x, x))); }, 4, 5},
      {"mul", [=](Tape& t, const Var& x) { return weighted(t, ad::mul(x, t.constant(other))); }, 4, 5},
      {"scale_shift", [=](Tape& t, const Var& x) { return weighted(t, ad::add_scalar(ad::scale(ad::mul(x, x), -2.5), 1.0)); }, 4, 5},
      {"add_row", [=](Tape& t, const Var& x) { return weighted(t, ad::mul(ad::add_row(t.constant(other), x), ad::add_row(t.constant(other), x))); }, 1, 5},
      {"sub_row", [=](Tape& t, const Var& x) { return ad::frobenius_norm_sq(ad::sub_row(t.constant(other), x)); }, 1, 5},
      {"mul_col", [=](Tape& t, const Var& x) { return weighted(t, ad::mul_col(t.constant(other), ad::mul(x, x))); }, 4, 1},
      {"mul_col_lhs", [=](Tape& t, const Var& x) { return weighted(t, ad::mul_col(ad::tanh(x), t.constant(col))); }, 4, 5},
      {"mul_scalar", [=](Tape& t, const Var& x) { return weighted(t, ad::mul_scalar(ad::mul(x, x), ad::sum(x))); }, 4, 5},
      {"div_scalar", [=](Tape& t, const Var& x) { return weighted(t, ad::div_scalar(x, ad::add_scalar(ad::frobenius_norm_sq(x), 1.0))); }, 4, 5},
      {"powi3", [=](Tape& t, const Var& x) { return weighted(t, ad::powi(x, 3)); }, 4, 5, 0.3, 1.5},
      {"powi5", [=](Tape& t, const Var& x) { return weighted(t, ad::powi(x, 5)); }, 4, 5, 0.3, 1.5},
      {"tanh", [=](Tape& t, const Var& x) { return weighted(t, ad::tanh(x)); }, 4, 5, -2.0, 2.0},
      {"sigmoid", [=](Tape& t, const Var& x) { return weighted(t, ad::sigmoid(x)); }, 4, 5, -4.0, 4.0},
      {"hinge", [=](Tape& t, const Var& x) { return weighted(t, ad::hinge(x)); }, 4, 5, 0.05, 1.0},
      {"matmul_lhs", [=](Tape& t, const Var& x) { return ad::frobenius_norm_sq(ad::matmul(x, t.constant(w35))); }, 4, 5},
      {"matmul_rhs", [=](Tape& t, const Var& x) { return ad::frobenius_norm_sq(ad::matmul(t.constant(other), x)); }, 5, 3},
      {"transpose", [=](Tape& t, const Var& x) { return weighted(t, ad::transpose(ad::mul(x, x))); }, 5, 4},
      {"concat_slice", [=](Tape& t, const Var& x) {
         return weighted(t, ad::concat_cols({ad::slice_cols(ad::mul(x, x), 3, 2), ad::slice_cols(x, 0, 3)}));
       }, 4, 5},
      {"mean_rows", [=](Tape& t, const Var& x) { return ad::frobenius_norm_sq(ad::add(ad::mean_rows(ad::mul(x, x)), t.constant(row))); }, 4, 5},
      {"sum_cols", [=](Tape& t, const Var& x) { return ad::frobenius_norm_sq(ad::add(ad::sum_cols(x), t.constant(col))); }, 4, 5},
      {"mean", [=](Tape&, const Var& x) { return ad::mean(ad::powi(x, 3)); }, 4, 5, 0.3, 1.5},
      {"norm2", [=](Tape& t, const Var& x) { return ad::norm2(ad::add(x, t.constant(other))); }, 4, 5},
      {"max_all", [=](Tape&, const Var& x) { return ad::mul(ad::max_all(x), ad::max_all(x)); }, 4, 5},
      {"min_all", [=](Tape&, const Var& x) { return ad::mul(ad::min_all(x), ad::sum(x)); }, 4, 5},
      {"softmax_rows", [=](Tape& t, const Var& x) { return weighted(t, ad::softmax_rows(x)); }, 4, 5, -3.0, 3.0},
      {"bce_mean", [=](Tape&, const Var& x) { return ad::bce_mean(ad::sigmoid(x), targets); }, 4, 1, -3.0, 3.0},
      {"central_moment", [=](Tape&, const Var& x) { return ad::frobenius_norm_sq(ad::central_moment(x, 4)); }, 6, 3},
  };
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesFiniteDifferencesOverTenSeeds) {
  const OpCase c = op_cases().at(GetParam());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed * 31 + GetParam());
    const Matrix x = oracle::random(c.rows, c.cols, rng, c.lo, c.hi);
    const auto r = ad::grad_check_detailed(c.f, x, 1e-4);
    EXPECT_LE(r.max_relative_error, 1e-4) << c.name << " seed " << seed << " index " << r.worst_index
                                          << " analytic " << r.analytic << " numeric " << r.numeric;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, op_cases().size()),
                         [](const auto& info) { return op_cases().at(info.param).name; });

}  // namespace
