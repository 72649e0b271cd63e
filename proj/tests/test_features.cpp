#include <gtest/gtest.h>

#include <numbers>

#include "randci/data.hpp"
#include "randci/features.hpp"
#include "test_oracles.hpp"

using namespace randci;

TEST(MedianBandwidth, TwoPointsGiveSquaredDistance) {
  Eigen::MatrixXd m(2, 1);
  m << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(median_bandwidth(m), 4.0);
}

TEST(MedianBandwidth, ConstantDataFallsBackToOne) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(5, 2, 3.25);
  EXPECT_DOUBLE_EQ(median_bandwidth(m), 1.0);
}

TEST(MedianBandwidth, MatchesBruteForcePairwiseMedian) {
  Rng rng(42);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(10, 2);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  const double med = oracles::pairwise_median_distance(m);
  EXPECT_NEAR(median_bandwidth(m), med * med, 1e-12);
}

TEST(MedianBandwidth, InvariantToRowPermutationWhenUncapped) {
  Rng rng(7);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(20, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  const double base = median_bandwidth(m, 1000);
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd shuffled(20, 3);
    for (int i = 0; i < 20; ++i) shuffled.row(i) = m.row(perm[i]);
    EXPECT_NEAR(median_bandwidth(shuffled, 1000), base, 1e-12);
  }
}

TEST(MedianBandwidth, RejectsSingleRow) {
  Eigen::MatrixXd m(1, 2);
  m << 1.0, 2.0;
  EXPECT_THROW(median_bandwidth(m), std::invalid_argument);
}

TEST(SampleFourierMap, DeterministicGivenSeed) {
  Rng a(123), b(123);
  const auto m1 = sample_fourier_map(3, 8, 2.0, a);
  const auto m2 = sample_fourier_map(3, 8, 2.0, b);
  EXPECT_EQ(m1.frequencies, m2.frequencies);
  EXPECT_EQ(m1.phases, m2.phases);
}

TEST(SampleFourierMap, FrequencyVarianceMatchesTwoOverSigma) {
  Rng rng(5);
  const auto map = sample_fourier_map(1, 10000, 2.0, rng);
  const double mean = map.frequencies.mean();
  const double var =
      (map.frequencies.array() - mean).square().sum() / (10000.0 - 1.0);
  EXPECT_NEAR(var, 1.0, 0.05);  // 2 / sigma = 1
}

TEST(SampleFourierMap, PhasesInHalfOpenInterval) {
  Rng rng(6);
  const auto map = sample_fourier_map(2, 500, 0.5, rng);
  EXPECT_GE(map.phases.minCoeff(), 0.0);
  EXPECT_LT(map.phases.maxCoeff(), 2.0 * std::numbers::pi);
}

TEST(SampleFourierMap, RejectsBadArguments) {
  Rng rng(1);
  EXPECT_THROW(sample_fourier_map(1, 0, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_fourier_map(0, 1, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_fourier_map(1, 1, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_fourier_map(1, 1, -2.0, rng), std::invalid_argument);
}

TEST(ApplyFourierMap, ZeroFrequencyAndPhaseGiveSqrtTwo) {
  FourierFeatureMap map;
  map.frequencies = Eigen::MatrixXd::Zero(4, 2);
  map.phases = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 2);
  const Eigen::MatrixXd out = apply_fourier_map(map, x);
  EXPECT_TRUE(out.isApproxToConstant(std::numbers::sqrt2, 1e-14));
}

TEST(ApplyFourierMap, PhasePiGivesMinusSqrtTwo) {
  FourierFeatureMap map;
  map.frequencies = Eigen::MatrixXd::Zero(1, 1);
  map.frequencies(0, 0) = 1.0;
  map.phases = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd x(1, 1);
  x << std::numbers::pi;  // w'x + b = pi
  EXPECT_NEAR(apply_fourier_map(map, x)(0, 0), -std::numbers::sqrt2, 1e-12);
}

TEST(ApplyFourierMap, RejectsDimensionMismatch) {
  Rng rng(9);
  const auto map = sample_fourier_map(3, 4, 1.0, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 2);
  EXPECT_THROW(apply_fourier_map(map, x), std::invalid_argument);
}

TEST(ApplyFourierMap, OutputBoundedBySqrtTwo) {
  Rng rng(10);
  const auto map = sample_fourier_map(2, 50, 0.7, rng);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(40, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 3.0 * normal(rng);
  const Eigen::MatrixXd out = apply_fourier_map(map, x);
  EXPECT_LE(out.array().abs().maxCoeff(), std::numbers::sqrt2 + 1e-12);
}

TEST(ApplyFourierMap, FeatureProductsApproximateGaussianKernel) {
  Rng rng(11);
  const double sigma = 1.5;
  const auto map = sample_fourier_map(3, 2000, sigma, rng);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(3), y(3);
  for (int i = 0; i < 3; ++i) {
    x(i) = normal(rng);
    y(i) = normal(rng);
  }
  const Eigen::MatrixXd fx = apply_fourier_map(map, x.transpose());
  const Eigen::MatrixXd fy = apply_fourier_map(map, y.transpose());
  const double approx = fx.row(0).dot(fy.row(0)) / 2000.0;
  EXPECT_NEAR(approx, oracles::gaussian_kernel(x, y, sigma), 0.05);
}

TEST(ApplyFourierMap, KernelApproximationHoldsOverManyPairs) {
  Rng rng(12);
  const double sigma = 2.0;
  const auto map = sample_fourier_map(2, 5000, sigma, rng);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd x(2), y(2);
    for (int i = 0; i < 2; ++i) {
      x(i) = normal(rng);
      y(i) = normal(rng);
    }
    const Eigen::MatrixXd fx = apply_fourier_map(map, x.transpose());
    const Eigen::MatrixXd fy = apply_fourier_map(map, y.transpose());
    const double approx = fx.row(0).dot(fy.row(0)) / 5000.0;
    ASSERT_NEAR(approx, oracles::gaussian_kernel(x, y, sigma), 0.05);
  }
}

TEST(StandardizeColumns, TwoPointColumn) {
  Eigen::MatrixXd m(2, 1);
  m << 1.0, 3.0;
  const Eigen::MatrixXd out = standardized(m);
  EXPECT_NEAR(out(0, 0), -1.0 / std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(out(1, 0), 1.0 / std::numbers::sqrt2, 1e-12);
}

TEST(StandardizeColumns, ConstantColumnBecomesZero) {
  Eigen::MatrixXd m(3, 1);
  m << 5.0, 5.0, 5.0;
  EXPECT_TRUE(standardized(m).isZero(0.0));
}

TEST(StandardizeColumns, MomentsRecomputeToZeroAndOne) {
  Rng rng(13);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(100, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = 2.0 + 3.0 * normal(rng);
  const Eigen::MatrixXd out = standardized(m);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LT(std::abs(out.col(j).mean()), 1e-12);
    const double var = out.col(j).squaredNorm() / 99.0;
    EXPECT_NEAR(var, 1.0, 1e-12);
  }
}

TEST(StandardizeColumns, Idempotent) {
  Rng rng(14);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(50, 2);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  const Eigen::MatrixXd once = standardized(m);
  const Eigen::MatrixXd twice = standardized(once);
  EXPECT_LT((once - twice).array().abs().maxCoeff(), 1e-12);
}

TEST(StandardizeColumns, RejectsSingleRow) {
  Eigen::MatrixXd m(1, 1);
  m << 2.0;
  EXPECT_THROW(standardized(m), std::invalid_argument);
}

TEST(DataMatrix, IngestionRejectsNonFinite) {
  Eigen::MatrixXd m(2, 1);
  m << 1.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(make_data(m), std::invalid_argument);
}
