#include "lowrankseg/linalg.hpp"
#include "lowrankseg/prox.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using namespace lowrankseg;
using namespace lowrankseg::prox;
using testing_support::gaussian;
using testing_support::random_symmetric;

double svt_objective(const Mat& m, const Mat& g, double tau) {
  return oracle::prox_objective(m, g, tau);
}

TEST(Svt, DiagonalSoftThreshold) {
  const Mat g = Eigen::Vector3d(3, 1, 0.2).asDiagonal();
  const Mat expected = Eigen::Vector3d(2, 0, 0).asDiagonal();
  EXPECT_LE((svt(g, 1.0) - expected).norm(), 1e-14);
}

TEST(Svt, FullShrinkageWhenOperatorNormBelowTau) {
  Mat g = gaussian(4, 6, 17);
  g /= linalg::norm(g, linalg::NormKind::spectral);
  EXPECT_EQ(svt(g, 1.0).norm(), 0.0);
  EXPECT_EQ(svt(0.5 * g, 0.5).norm(), 0.0);
  const Thresholded t = svt_detailed(0.9 * g, 1.0);
  EXPECT_EQ(t.rank, 0u);
  EXPECT_EQ(t.nuclear_norm, 0.0);
}

TEST(Svt, RandomFiveByFiveIsLocallyOptimal) {
  const Mat g = gaussian(5, 5, 5);
  const double tau = 0.7;
  const Mat m = svt(g, tau);
  const double best = svt_objective(m, g, tau);
  std::mt19937_64 rng(55);
  std::normal_distribution<double> normal(0.0, 1e-3);
  for (int trial = 0; trial < 200; ++trial) {
    Mat delta(5, 5);
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = normal(rng);
    EXPECT_GE(svt_objective(m + delta, g, tau), best) << "trial " << trial;
  }
}

TEST(Svt, DetailedReportsNuclearNormAndRank) {
  const Mat g = gaussian(6, 4, 6);
  const Thresholded t = svt_detailed(g, 0.8);
  EXPECT_NEAR(t.nuclear_norm, linalg::norm(t.value, linalg::NormKind::nuclear), 1e-12);
  EXPECT_EQ(t.rank, linalg::numerical_rank(t.value, 1e-10));
  EXPECT_EQ(t.value.rows(), 6);
  EXPECT_EQ(t.value.cols(), 4);
}

TEST(PsdEigThreshold, Diagonal) {
  const Mat g = Eigen::Vector2d(2, 0.5).asDiagonal();
  const Mat expected = Eigen::Vector2d(1, 0).asDiagonal();
  EXPECT_LE((psd_eig_threshold(g, 1.0) - expected).norm(), 1e-15);
}

TEST(PsdEigThreshold, AntisymmetricInputVanishes) {
  Mat g(2, 2);
  g << 0, 1, -1, 0;
  for (double tau : {1e-6, 0.3, 5.0}) EXPECT_EQ(psd_eig_threshold(g, tau).norm(), 0.0);
}

TEST(PsdEigThreshold, UpperTriangularTwoByTwo) {
  Mat g(2, 2);
  g << 2, 1, 0, 2;
  Mat expected(2, 2);
  expected << 1.0, 0.5, 0.5, 1.0;
  EXPECT_LE((psd_eig_threshold(g, 1.0) - expected).norm(), 1e-14);
  EXPECT_LE((oracle::psd_prox_projected_gradient(g, 1.0) - expected).norm(), 1e-12);
}

TEST(PsdEigThreshold, RejectsNonSquareAndBadTau) {
  EXPECT_THROW(psd_eig_threshold(Mat::Zero(2, 3), 1.0), DimensionError);
  EXPECT_THROW(psd_eig_threshold(Mat::Identity(2, 2), 0.0), ParameterError);
  EXPECT_THROW(svt(Mat::Identity(2, 2), -1.0), ParameterError);
  EXPECT_THROW(shrink_l1(Mat::Identity(2, 2), 0.0), ParameterError);
  EXPECT_THROW(shrink_l21(Mat::Identity(2, 2), std::nan("")), ParameterError);
}

TEST(PsdEigThreshold, OutputIsSymmetricPsd) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Mat g = gaussian(9, 9, seed);
    const Mat m = psd_eig_threshold(g, 0.2);
    EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(linalg::eigenvalues_sym(m).minCoeff(), -1e-10);
  }
}

TEST(PsdEigThreshold, AgreesWithSvtOnPsdInput) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Mat a = gaussian(7, 4, seed);
    const Mat g = a * a.transpose();
    EXPECT_LE((svt(g, 0.5) - psd_eig_threshold(g, 0.5)).norm(), 1e-8) << seed;
  }
}

TEST(PsdEigThreshold, AsymmetricInputReducesToSymmetricPart) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Mat g = gaussian(6, 6, seed);
    const Mat sym = 0.5 * (g + g.transpose());
    EXPECT_EQ(psd_eig_threshold(g, 0.4), psd_eig_threshold(sym, 0.4)) << seed;
  }
}

TEST(PsdEigThreshold, NoSampledPsdPerturbationDoesBetter) {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> normal(0.0, 1e-3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Mat g = random_symmetric(6, seed);
    const double tau = 0.3;
    const Mat m = psd_eig_threshold(g, tau);
    const double best = oracle::prox_objective(m, g, tau);
    for (int trial = 0; trial < 100; ++trial) {
      Mat delta(6, 6);
      for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = normal(rng);
      const Mat candidate = oracle::project_psd(m + delta);
      EXPECT_GT(oracle::prox_objective(candidate, g, tau), best - 1e-9);
    }
  }
}

TEST(PsdEigThreshold, RepeatedEigenvaluesNeedNoSpecialCase) {
  const Mat q = testing_support::random_orthogonal(5, 3);
  const Mat g = q * Eigen::Matrix<double, 5, 1>(2, 2, 2, 0.1, -1).asDiagonal() * q.transpose();
  const Mat m = psd_eig_threshold(g, 0.5);
  const Mat expected =
      q * Eigen::Matrix<double, 5, 1>(1.5, 1.5, 1.5, 0, 0).asDiagonal() * q.transpose();
  EXPECT_LE((m - expected).norm(), 1e-12);
}

TEST(ShrinkL1, ScalarCases) {
  Mat g(1, 4);
  g << 1.5, -0.3, -2.0, 1.0;
  const Mat s = shrink_l1(g, 1.0);
  EXPECT_DOUBLE_EQ(s(0, 0), 0.5);
  EXPECT_EQ(s(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(s(0, 2), -1.0);
  EXPECT_EQ(s(0, 3), 0.0);
}

TEST(ShrinkL1, RandomMatchesScalarGrid) {
  const Mat g = gaussian(4, 4, 9);
  // Per-entry argmin of 0.5 |e| + 0.5 (e - g)^2 on a 1e-6 grid over [-4, 4].
  Mat grid(4, 4);
  grid << 0, 0, -0.86976200000000015, -2.0132859999999999,
      3.1299299999999999, -1.3999770000000002, -0.60193200000000013, -0.87193999999999994,
      0, -0.67742499999999994, 0.31875300000000006, 0.70434699999999939,
      0, -0.11160700000000023, 0, -1.574414;
  EXPECT_LE((shrink_l1(g, 0.5) - grid).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ShrinkL21, ColumnThreeFour) {
  Mat g(2, 2);
  g << 3, 0.3, 4, 0.4;
  const Mat s = shrink_l21(g, 1.0);
  EXPECT_NEAR(s(0, 0), 2.4, 1e-15);
  EXPECT_NEAR(s(1, 0), 3.2, 1e-15);
  EXPECT_EQ(s.col(1).norm(), 0.0);
}

TEST(ShrinkL21, ZeroColumnStaysZero) {
  Mat g = Mat::Zero(3, 2);
  g(0, 1) = 5.0;
  const Mat s = shrink_l21(g, 0.1);
  EXPECT_EQ(s.col(0).norm(), 0.0);
  EXPECT_TRUE(s.allFinite());
}

TEST(ShrinkL21, RandomMatchesRadialGrid) {
  const Mat g = gaussian(6, 3, 2);
  // Per-column radius argmin of 0.9 r + 0.5 (r - ||g_j||)^2 on a 1e-6 grid.
  Mat grid(6, 3);
  grid << 0, -0.25119757034600998, -0.39207333720688536,
      0, 0.20749351395567009, 0.62826617880439639,
      0, -0.92863610527873652, -0.611606704877803,
      0, -1.1466965702791654, -0.052570363604739261,
      0, -1.7909845887073299, -0.623606839780112,
      0, -1.0100580891286226, -0.25644873215015312;
  const Mat s = shrink_l21(g, 0.9);
  for (Eigen::Index j = 0; j < 3; ++j) {
    EXPECT_LE((s.col(j) - grid.col(j)).norm(), 1e-5) << j;
    const double r = s.col(j).norm();
    const double rg = grid.col(j).norm();
    const double len = g.col(j).norm();
    EXPECT_NEAR(0.9 * r + 0.5 * (r - len) * (r - len), 0.9 * rg + 0.5 * (rg - len) * (rg - len),
                1e-9);
  }
}

TEST(Shrink, NonExpansive) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Mat a = gaussian(5, 7, seed);
    const Mat b = gaussian(5, 7, seed + 1000);
    const double gap = (a - b).norm();
    EXPECT_LE((shrink_l1(a, 0.6) - shrink_l1(b, 0.6)).norm(), gap + 1e-12);
    EXPECT_LE((shrink_l21(a, 1.5) - shrink_l21(b, 1.5)).norm(), gap + 1e-12);
  }
}

}  // namespace
