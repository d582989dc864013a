#include <gtest/gtest.h>

#include <random>

#include "lrvb/error.hpp"
#include "lrvb/mvn_exact.hpp"

using namespace lrvb;

namespace {

MvnTarget random_target(int j, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd b(j, j);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
  MvnTarget t;
  t.cov = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(j, j);
  t.mean.resize(j);
  for (int i = 0; i < j; ++i) t.mean(i) = 2.0 * normal(rng);
  return t;
}

}  // namespace

TEST(MvnExact, DiagonalConvergesInOneSweep) {
  MvnTarget t;
  t.mean = Eigen::Vector3d(1, -2, 3);
  t.cov = Eigen::Vector3d(0.5, 2.0, 1.5).asDiagonal();
  const MvnFit f = mfvb_mvn(t);
  EXPECT_TRUE(f.converged);
  EXPECT_LE(f.iterations, 2);
  EXPECT_TRUE(f.m.isApprox(t.mean, 1e-14));
  EXPECT_TRUE(f.v.isApprox(t.cov, 1e-14));
  EXPECT_TRUE(lrvb_mvn(t).isApprox(t.cov, 1e-15));
}

TEST(MvnExact, StronglyCorrelatedPair) {
  MvnTarget t;
  t.mean = Eigen::Vector2d::Zero();
  t.cov.resize(2, 2);
  t.cov << 1.0, 0.9, 0.9, 1.0;
  const MvnFit f = mfvb_mvn(t, 1e-14, 100000, Eigen::Vector2d(3.0, -1.0));
  EXPECT_LT(f.m.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(f.v(0, 0), 0.19, 1e-12);
  EXPECT_NEAR(f.v(1, 1), 0.19, 1e-12);
  EXPECT_EQ(f.v(0, 1), 0.0);
  EXPECT_LT((lrvb_mvn(t) - t.cov).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MvnExact, LrvbRecoversCovariance) {
  std::mt19937_64 rng(1);
  for (const int j : {2, 3, 5, 10}) {
    for (int rep = 0; rep < 50; ++rep) {
      const MvnTarget t = random_target(j, rng);
      const Eigen::MatrixXd s = lrvb_mvn(t);
      const double rel = (s - t.cov).cwiseAbs().maxCoeff() / t.cov.cwiseAbs().maxCoeff();
      EXPECT_LT(rel, 1e-8) << "J=" << j << " rep " << rep;
    }
  }
}

TEST(MvnExact, MeansExact) {
  std::mt19937_64 rng(2);
  const MvnTarget t = random_target(5, rng);
  const MvnFit f = mfvb_mvn(t);
  ASSERT_TRUE(f.converged);
  EXPECT_LT((f.m - t.mean).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MvnExact, UniqueFixedPoint) {
  std::mt19937_64 rng(3);
  const MvnTarget t = random_target(4, rng);
  std::normal_distribution<double> normal;
  const Eigen::VectorXd reference = mfvb_mvn(t).m;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd init(4);
    for (int i = 0; i < 4; ++i) init(i) = 10.0 * normal(rng);
    const MvnFit f = mfvb_mvn(t, 1e-12, 100000, init);
    ASSERT_TRUE(f.converged);
    EXPECT_LT((f.m - reference).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(MvnExact, MeanFieldUnderestimates) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    MvnTarget t = random_target(5, rng);
    // Decouple coordinate 4 so equality is exercised too.
    t.cov.row(4).head(4).setZero();
    t.cov.col(4).head(4).setZero();
    const MvnFit f = mfvb_mvn(t);
    for (int j = 0; j < 4; ++j) EXPECT_LT(f.v(j, j), t.cov(j, j));
    EXPECT_NEAR(f.v(4, 4), t.cov(4, 4), 1e-12 * t.cov(4, 4));
  }
}

TEST(MvnExact, GroupedPartition) {
  std::mt19937_64 rng(5);
  MvnTarget t = random_target(6, rng);
  t.partition = {{0, 1}, {2, 3, 4}, {5}};
  const MvnFit f = mfvb_mvn(t);
  ASSERT_TRUE(f.converged);
  EXPECT_EQ(f.v(0, 1), f.v(1, 0));
  EXPECT_EQ(f.v(0, 2), 0.0);
  const Eigen::MatrixXd h = mvn_hessian(t);
  EXPECT_EQ(h.block(2, 2, 3, 3), Eigen::MatrixXd::Zero(3, 3));
  EXPECT_LT((lrvb_mvn(t) - t.cov).cwiseAbs().maxCoeff() / t.cov.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MvnExact, Validation) {
  MvnTarget t;
  t.mean = Eigen::Vector2d::Zero();
  t.cov.resize(2, 2);
  t.cov << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(t.validate(), ValidationError);
  t.cov = Eigen::Matrix2d::Identity();
  t.partition = {{0}, {0, 1}};
  EXPECT_THROW(t.validate(), ValidationError);
  t.partition = {{0}};
  EXPECT_THROW(t.validate(), ValidationError);
}
