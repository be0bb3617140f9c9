#include <gtest/gtest.h>

#include "grad_cases.hpp"
#include "lsketch/errors.hpp"
#include "lsketch/scw.hpp"
#include "lsketch/svd_grad.hpp"
#include "oracles.hpp"

using lsketch::Matrix;

TEST(ScwLoss, IdentitySketchRecoversLowRankInput) {
  const Matrix a = oracle::random_low_rank(8, 6, 2, 1);
  EXPECT_LT(lsketch::scw_loss(a, Matrix::identity(8), 3), 1e-8 * lsketch::frobenius_norm(a));
}

TEST(ScwLoss, ZeroSketchGivesNormOfInput) {
  const Matrix a = oracle::random_matrix(6, 5, 2);
  EXPECT_DOUBLE_EQ(lsketch::scw_loss(a, Matrix(3, 6), 2), lsketch::frobenius_norm(a));
}

TEST(ScwLoss, MatchesStepByStepOracle) {
  const Matrix a = oracle::random_matrix(10, 8, 3);
  const Matrix s = oracle::random_matrix(4, 10, 4);
  Matrix diff = a;
  diff -= oracle::scw(a, s, 2);
  EXPECT_NEAR(lsketch::scw_loss(a, s, 2), std::sqrt(oracle::sum_of_squares(diff)), 1e-10);
}

TEST(ScwLoss, SketchShapeMismatchIsAnError) {
  EXPECT_THROW(lsketch::scw_loss(Matrix(5, 4, 1.0), Matrix(2, 4, 1.0), 1), lsketch::DimensionError);
}

TEST(ScwLossGrad, ZeroDataGivesZeroLossAndGradient) {
  const auto g = lsketch::scw_loss_grad(Matrix(6, 5), oracle::random_matrix(3, 6, 5), 2);
  EXPECT_EQ(g.loss, 0.0);
  EXPECT_EQ(g.grad_s, Matrix(3, 6));
}

TEST(ScwLossGrad, EntrywiseCentralDifferences) {
  const Matrix a = oracle::random_matrix(6, 5, 6);
  const Matrix s = oracle::random_matrix(3, 6, 7);
  const auto g = lsketch::scw_loss_grad(a, s, 2);
  const double h = 1e-5;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) {
      Matrix sp = s, sm = s;
      sp(i, j) += h;
      sm(i, j) -= h;
      const double fd = (lsketch::scw_loss(a, sp, 2) - lsketch::scw_loss(a, sm, 2)) / (2 * h);
      EXPECT_NEAR(g.grad_s(i, j), fd, 1e-6 + 1e-4 * std::abs(fd)) << i << "," << j;
    }
}

TEST(ScwLossGrad, LossMatchesForwardEvaluation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = oracle::random_matrix(9, 7, seed);
    const Matrix s = oracle::random_matrix(4, 9, seed + 50);
    const double fwd = lsketch::scw_loss(a, s, 2);
    EXPECT_NEAR(lsketch::scw_loss_grad(a, s, 2).loss, fwd, 1e-10 * fwd);
  }
}

TEST(ScwLossGrad, SmallStepAlongNegativeGradientDescends) {
  const Matrix a = oracle::random_matrix(10, 8, 8);
  const Matrix s = oracle::random_matrix(4, 10, 9);
  const auto g = lsketch::scw_loss_grad(a, s, 2);
  Matrix step = g.grad_s;
  step *= -1e-3;
  Matrix s2 = s;
  s2 += step;
  EXPECT_LT(lsketch::scw_loss(a, s2, 2), g.loss);
}

TEST(ScwLossGrad, TiedSingularValuesAtKAreDegenerate) {
  // A V has three equal singular values, so the rank-1 truncation is not unique.
  const Matrix a = Matrix::identity(3);
  EXPECT_THROW(lsketch::scw_loss_grad(a, Matrix::identity(3), 1), lsketch::DegenerateSpectrum);
}

TEST(ScwLossGrad, RankDeficientSketchStillHasAccurateGradient) {
  // rank(SA) = 2 < k = 3: the loss is the distance to the projection, still smooth.
  const Matrix a = oracle::random_matrix(7, 6, 10);
  const Matrix s = oracle::random_matrix(2, 7, 11);
  const auto g = lsketch::scw_loss_grad(a, s, 3);
  const auto fd = lsketch::scw_loss_grad_fd(a, s, 3);
  gradcheck::Mismatch m;
  gradcheck::compare(g.grad_s, fd.grad_s, "dS", m);
  EXPECT_LE(m.worst_ratio, 1.0) << m.where;
}

TEST(ScwLossGrad, FiftySeededInstancesMatchFiniteDifferences) {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto m = gradcheck::check_case(gradcheck::make_case(i));
    EXPECT_LE(m.worst_ratio, 1.0) << "instance " << i << " at " << m.where;
  }
}

TEST(ChainToMask, ZeroGradientZeroLambda) {
  const Matrix z(2, 3);
  EXPECT_EQ(lsketch::chain_to_mask(z, oracle::random_matrix(2, 3, 1), Matrix::ones(2, 3), 0.0), z);
}

TEST(ChainToMask, OnesPlusLambda) {
  const Matrix g = lsketch::chain_to_mask(Matrix::ones(2, 3), Matrix::ones(2, 3), Matrix::ones(2, 3), 0.0003);
  for (double x : g.data()) EXPECT_DOUBLE_EQ(x, 1.0003);
}

TEST(ChainToMask, ShapeMismatchIsAnError) {
  EXPECT_THROW(lsketch::chain_to_mask(Matrix(2, 3), Matrix(2, 3), Matrix(3, 2), 0.0), lsketch::DimensionError);
}

TEST(ChainToGaussian, ZeroGradient) {
  const auto g = lsketch::chain_to_gaussian(Matrix(2, 2), oracle::random_matrix(2, 2, 1), Matrix::ones(2, 2));
  EXPECT_EQ(g.grad_mu, Matrix(2, 2));
  EXPECT_EQ(g.grad_sigma_var, Matrix(2, 2));
}

TEST(ChainToGaussian, ZeroVarianceGivesZeroVarianceGradient) {
  const Matrix gs = oracle::random_matrix(3, 4, 2);
  const auto g = lsketch::chain_to_gaussian(gs, oracle::random_matrix(3, 4, 3), Matrix(3, 4));
  EXPECT_EQ(g.grad_mu, gs);
  EXPECT_EQ(g.grad_sigma_var, Matrix(3, 4));
}

TEST(ChainToGaussian, UnitVarianceIsHalfGradientTimesNoise) {
  const Matrix gs = oracle::random_matrix(3, 4, 4);
  const Matrix z = oracle::random_matrix(3, 4, 5);
  const auto g = lsketch::chain_to_gaussian(gs, z, Matrix::ones(3, 4));
  for (std::size_t i = 0; i < gs.size(); ++i) EXPECT_EQ(g.grad_sigma_var.data()[i], gs.data()[i] * z.data()[i] / 2);
}

TEST(ChainToGaussian, ShapeMismatchIsAnError) {
  EXPECT_THROW(lsketch::chain_to_gaussian(Matrix(2, 2), Matrix(2, 3), Matrix(2, 2)), lsketch::DimensionError);
}
