#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lsketch/errors.hpp"
#include "lsketch/matrix.hpp"
#include "oracles.hpp"

using lsketch::Matrix;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix a{{1, 2}, {3, 4}};
  EXPECT_EQ(lsketch::matmul(Matrix::identity(2), a), a);
}

TEST(Matmul, AnnihilatingPair) {
  const Matrix a{{1, 0}, {0, 0}};
  const Matrix b{{0, 0}, {0, 1}};
  EXPECT_EQ(lsketch::matmul(a, b), Matrix::zeros(2, 2));
}

TEST(Matmul, MatchesTripleLoop) {
  const Matrix a = oracle::random_matrix(3, 4, 1);
  const Matrix b = oracle::random_matrix(4, 2, 2);
  const Matrix c = lsketch::matmul(a, b);
  const Matrix ref = oracle::naive_matmul(a, b);
  ASSERT_EQ(c.rows(), 3u);
  ASSERT_EQ(c.cols(), 2u);
  EXPECT_LT(oracle::max_abs_diff(c, ref), 1e-13);
}

TEST(Matmul, TransposedVariantsMatchTripleLoop) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = oracle::random_matrix(5 + seed % 3, 4, seed);
    const Matrix b = oracle::random_matrix(5 + seed % 3, 6, seed + 100);
    const Matrix c = oracle::random_matrix(7, 4, seed + 200);
    EXPECT_LT(oracle::max_abs_diff(lsketch::matmul_tn(a, b), oracle::naive_matmul(oracle::naive_transpose(a), b)),
              1e-12);
    EXPECT_LT(oracle::max_abs_diff(lsketch::matmul_nt(a, c), oracle::naive_matmul(a, oracle::naive_transpose(c))),
              1e-12);
  }
}

TEST(Matmul, DimensionMismatchNamesBothShapes) {
  const Matrix a(2, 3), b(2, 3);
  try {
    (void)lsketch::matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const lsketch::DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
  }
}

TEST(FrobeniusNorm, ZeroMatrix) { EXPECT_EQ(lsketch::frobenius_norm(Matrix(3, 3)), 0.0); }

TEST(FrobeniusNorm, ThreeFourFive) { EXPECT_DOUBLE_EQ(lsketch::frobenius_norm(Matrix{{3, 4}}), 5.0); }

TEST(FrobeniusNorm, MatchesDirectSummation) {
  const Matrix a = oracle::random_matrix(5, 5, 3);
  EXPECT_NEAR(lsketch::frobenius_norm(a), std::sqrt(oracle::sum_of_squares(a)), 1e-14);
  EXPECT_NEAR(lsketch::frobenius_norm_sq(a), oracle::sum_of_squares(a), 1e-13);
}

TEST(FrobeniusNorm, NoOverflowForHugeEntries) {
  const Matrix a{{1e200, 1e200}};
  EXPECT_NEAR(lsketch::frobenius_norm(a) / 1e200, std::sqrt(2.0), 1e-14);
}

TEST(MatrixCore, ConstructionChecksDataLength) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), lsketch::DimensionError);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), lsketch::DimensionError);
}

TEST(MatrixCore, ElementwiseOpsRequireSameShape) {
  Matrix a(2, 2), b(2, 3);
  EXPECT_THROW(a += b, lsketch::DimensionError);
  EXPECT_THROW((void)lsketch::hadamard(a, b), lsketch::DimensionError);
}

TEST(MatrixCore, HadamardAndTranspose) {
  const Matrix a{{1, 2, 3}, {4, 5, 6}};
  const Matrix b{{2, 0, -1}, {1, 1, 0.5}};
  EXPECT_EQ(lsketch::hadamard(a, b), (Matrix{{2, 0, -3}, {4, 5, 3}}));
  EXPECT_EQ(lsketch::transpose(a), oracle::naive_transpose(a));
  EXPECT_EQ(lsketch::transpose(lsketch::transpose(a)), a);
}

TEST(MatrixCore, FiniteCheck) {
  Matrix a(2, 2);
  EXPECT_TRUE(lsketch::all_finite(a));
  a(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(lsketch::all_finite(a));
}

TEST(MatrixCore, TakeColsAndScaleCols) {
  const Matrix a{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(lsketch::take_cols(a, 1, 2), (Matrix{{2, 3}, {5, 6}}));
  const std::vector<double> d{2, 0, -1};
  EXPECT_EQ(lsketch::scale_cols(a, std::span<const double>(d)), (Matrix{{2, 0, -3}, {8, 0, -6}}));
  EXPECT_THROW((void)lsketch::take_cols(a, 2, 2), lsketch::DimensionError);
}
