#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lrvb/error.hpp"
#include "lrvb/gmm_model.hpp"
#include "lrvb/mfvb_solver.hpp"
#include "lrvb/special.hpp"
#include "oracles.hpp"

using namespace lrvb;

namespace {

// Monte Carlo standard error of each entry of the sample covariance.
Eigen::MatrixXd cov_se(const Eigen::MatrixXd& draws) {
  const Eigen::MatrixXd c = draws.rowwise() - draws.colwise().mean();
  const double n = static_cast<double>(draws.rows());
  Eigen::MatrixXd se(draws.cols(), draws.cols());
  for (Eigen::Index i = 0; i < draws.cols(); ++i) {
    for (Eigen::Index j = 0; j < draws.cols(); ++j) {
      const Eigen::ArrayXd prod = c.col(i).array() * c.col(j).array();
      const double mean = prod.mean();
      se(i, j) = std::sqrt((prod - mean).square().sum() / (n - 1) / n);
    }
  }
  return se;
}

void expect_within_se(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& draws, double k) {
  const Eigen::MatrixXd mc = ref::sample_cov(draws);
  const Eigen::MatrixXd se = cov_se(draws);
  for (Eigen::Index i = 0; i < mc.rows(); ++i) {
    for (Eigen::Index j = 0; j < mc.cols(); ++j) {
      EXPECT_LE(std::abs(analytic(i, j) - mc(i, j)), k * se(i, j) + 1e-12)
          << "entry (" << i << "," << j << ") analytic " << analytic(i, j) << " mc " << mc(i, j);
    }
  }
}

FactorParams random_factors(int k, int p, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::gamma_distribution<double> gamma(2.0, 1.0);
  Dataset d;
  d.x.resize(n, p);
  for (Eigen::Index i = 0; i < d.x.size(); ++i) d.x.data()[i] = normal(rng) * 2.0;
  Eigen::MatrixXd r(n, k);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = gamma(rng);
  r = r.array().colwise() / r.rowwise().sum().array();
  return init_from_responsibilities(d, r);
}

}  // namespace

TEST(Simulate, SingleGaussianMean) {
  GmmTruth t;
  t.weights = Eigen::VectorXd::Ones(1);
  t.means = {Eigen::Vector2d::Zero()};
  t.covariances = {Eigen::Matrix2d::Identity()};
  const int n = 100000;
  const Dataset d = simulate(t, n, 3);
  const Eigen::VectorXd mean = d.x.colwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 4.0 / std::sqrt(n));
}

TEST(Simulate, DeterministicForSeed) {
  const GmmTruth t = ref::two_component_truth();
  EXPECT_EQ(simulate(t, 500, 11).x, simulate(t, 500, 11).x);
  EXPECT_NE(simulate(t, 500, 11).x, simulate(t, 500, 12).x);
}

TEST(Simulate, ClusterProportions) {
  GmmTruth t = ref::symmetric_truth();
  t.means[1] = Eigen::Vector2d(20.0, 0.0);
  const int n = 20000;
  const Dataset d = simulate(t, n, 4);
  int ones = 0;
  for (const int l : *d.labels) ones += l;
  EXPECT_LT(std::abs(ones / double(n) - 0.5), 3.0 * std::sqrt(0.25 / n));
  EXPECT_THROW(simulate(t, 0, 1), ValidationError);
}

TEST(Truth, Validation) {
  GmmTruth t = ref::two_component_truth();
  t.weights(0) = 0.5;
  EXPECT_THROW(t.validate(), ValidationError);
  t = ref::two_component_truth();
  t.covariances[0](0, 1) = 5.0;
  EXPECT_THROW(t.validate(), ValidationError);
}

TEST(FactorMoments, Examples) {
  DirichletFactor dir{Eigen::Vector2d(1.0, 1.0)};
  EXPECT_NEAR(dirichlet_expected_log(dir)(0), -1.0, 1e-14);
  const Eigen::MatrixXd mc = ref::mc_dirichlet_log(dir.concentration, 1000000, 9);
  EXPECT_NEAR(mc.col(0).mean(), -1.0, 5.0 * std::sqrt(trigamma(1.0) - trigamma(2.0)) / 1000.0);

  MvnFactor mvn{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()};
  EXPECT_EQ(pack_symmetric(mvn_second_moment(mvn)), Eigen::Vector3d(1, 0, 1));

  WishartFactor w{3.0, Eigen::Matrix2d::Identity()};
  EXPECT_EQ(wishart_mean(w), 3.0 * Eigen::MatrixXd::Identity(2, 2));
  const Eigen::MatrixXd ws = ref::mc_wishart_stats(3, w.scale, 400000, 10);
  EXPECT_NEAR(ws.col(0).mean(), 3.0, 0.02);
  const Eigen::VectorXd ld = ws.col(3);
  const double ld_se = std::sqrt((ld.array() - ld.mean()).square().mean() / ld.size());
  EXPECT_NEAR(wishart_expected_log_det(w), ld.mean(), 5.0 * ld_se);
}

TEST(FactorCovariance, ClosedForms) {
  const DirichletFactor dir{Eigen::Vector2d(2.0, 2.0)};
  EXPECT_NEAR(dirichlet_log_covariance(dir)(0, 0), trigamma(2.0) - trigamma(4.0), 1e-14);

  const double m = 1.3;
  const double s = 0.7;
  const Eigen::MatrixXd c = mvn_stat_covariance(Eigen::VectorXd::Constant(1, m), Eigen::MatrixXd::Constant(1, 1, s));
  EXPECT_NEAR(c(0, 1), 2 * m * s, 1e-14);
  EXPECT_NEAR(c(1, 1), 2 * s * s + 4 * m * m * s, 1e-14);

  auto layout = std::make_shared<const ParamLayout>(2, 1, 6, false);
  FactorParams f = random_factors(2, 1, 6, 2);
  f.resp.row(0) = Eigen::RowVector2d(0.5, 0.5);
  const BlockMatrix v = factor_covariance_blocks(f, layout);
  Eigen::Matrix2d expected;
  expected << 0.25, -0.25, -0.25, 0.25;
  EXPECT_TRUE(Eigen::MatrixXd(v.block(layout->z_block(0), layout->z_block(0))).isApprox(expected, 1e-15));
}

TEST(FactorCovariance, MatchesMonteCarlo) {
  Eigen::Vector2d mean(0.8, -1.2);
  Eigen::Matrix2d cov;
  cov << 0.5, 0.2, 0.2, 0.3;
  expect_within_se(mvn_stat_covariance(mean, cov), ref::mc_mvn_stats(mean, cov, 1000000, 21), 5.0);

  Eigen::Matrix2d scale;
  scale << 0.4, -0.1, -0.1, 0.6;
  const WishartFactor w{6.0, scale};
  expect_within_se(wishart_stat_covariance(w), ref::mc_wishart_stats(6, scale, 1000000, 22), 5.0);

  const DirichletFactor dir{Eigen::Vector3d(2.0, 3.5, 0.8)};
  expect_within_se(dirichlet_log_covariance(dir), ref::mc_dirichlet_log(dir.concentration, 1000000, 23), 5.0);
}

TEST(FactorCovariance, BlockDiagonalAndPsd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int k = 1 + static_cast<int>(seed % 3);
    const int p = 1 + static_cast<int>(seed % 3);
    FactorParams f = random_factors(k, p, 6, seed);
    f.x = DataFactors{Eigen::MatrixXd::Random(6, p), 0.01};
    auto layout = std::make_shared<const ParamLayout>(k, p, 6, true);
    const BlockMatrix v = factor_covariance_blocks(f, layout);
    EXPECT_TRUE(v.is_block_diagonal(factor_groups(*layout)));
    const Eigen::MatrixXd d = v.to_dense();
    EXPECT_LT((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-12 * d.cwiseAbs().maxCoeff());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d).eigenvalues();
    EXPECT_GE(ev.minCoeff(), -1e-10 * ev.cwiseAbs().maxCoeff());
  }
}

TEST(Hessian, SingleComponentExample) {
  Dataset d;
  d.x = Eigen::Vector2d(1.0, 3.0);
  auto layout = std::make_shared<const ParamLayout>(1, 1, 2, false);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(layout->total_dim());
  m(layout->z(0, 0)) = 1.0;
  m(layout->z(1, 0)) = 1.0;
  const BlockMatrix h = hessian_blocks(m, d, layout);
  EXPECT_DOUBLE_EQ(h.block(layout->mu_block(0), layout->lambda_block(0))(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(h.block(layout->log_det_lambda_block(0), layout->z_block(1))(0, 0), 0.5);
}

TEST(Hessian, StructuralZeros) {
  const GmmTruth t = ref::two_component_truth();
  const Dataset d = simulate(t, 40, 1);
  FactorParams f = init_from_responsibilities(d, Eigen::MatrixXd::Constant(40, 2, 0.5));
  f.x = DataFactors{d.x, 0.0};
  auto layout = std::make_shared<const ParamLayout>(2, 2, 40, true);
  const BlockMatrix h = hessian_blocks(factor_mean_params(f, *layout), d, layout);
  const auto group = factor_groups(*layout);
  for (int rb = 0; rb < layout->num_blocks(); ++rb) {
    for (const auto& [cb, blk] : h.row(rb)) {
      // Nothing within a factor, and nothing between different points.
      EXPECT_NE(group[static_cast<std::size_t>(rb)], group[static_cast<std::size_t>(cb)])
          << layout->block(rb).name() << " / " << layout->block(cb).name();
      const Block& r = layout->block(rb);
      const Block& c = layout->block(cb);
      if (r.kind == BlockKind::kZ) EXPECT_NE(c.kind, BlockKind::kZ);
      const bool r_point = rb >= layout->first_x_block();
      const bool c_point = cb >= layout->first_x_block();
      if (r_point && c_point) EXPECT_EQ(r.index, c.index);
    }
    for (int c = 0; c < layout->num_components(); ++c) {
      if (rb >= layout->first_z_block()) {
        EXPECT_EQ(h.block(layout->log_det_lambda_block(c), rb)(0, c), 0.5);
      }
    }
  }
  EXPECT_EQ(h.asymmetry(), 0.0);
}

TEST(Hessian, MatchesFiniteDifferenceOfLogJoint) {
  for (const bool with_x : {false, true}) {
    const Dataset d = simulate(ref::two_component_truth(), 5, 17);
    Eigen::MatrixXd r(5, 2);
    r << 0.9, 0.1, 0.3, 0.7, 0.5, 0.5, 0.2, 0.8, 0.6, 0.4;
    FactorParams f = init_from_responsibilities(d, r);
    if (with_x) f.x = DataFactors{d.x, 0.0};
    auto layout = std::make_shared<const ParamLayout>(2, 2, 5, with_x);
    const Eigen::VectorXd m = factor_mean_params(f, *layout);
    const Eigen::MatrixXd analytic = hessian_blocks(m, d, layout).to_dense();
    const Eigen::MatrixXd fd = ref::fd_hessian(m, d, *layout, 1e-3);
    const double scale = fd.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < fd.rows(); ++i) {
      for (Eigen::Index j = 0; j < fd.cols(); ++j) {
        EXPECT_NEAR(analytic(i, j), fd(i, j), 1e-5 * std::max(std::abs(fd(i, j)), 1e-3 * scale))
            << layout->label(static_cast<int>(i)) << " / " << layout->label(static_cast<int>(j));
      }
    }
  }
}

TEST(Hessian, AdditiveOverData) {
  const Dataset all = simulate(ref::two_component_truth(), 30, 5);
  Dataset a, b;
  a.x = all.x.topRows(12);
  b.x = all.x.bottomRows(18);
  const FactorParams f = init_from_responsibilities(all, Eigen::MatrixXd::Constant(30, 2, 0.5));
  auto lall = std::make_shared<const ParamLayout>(2, 2, 30, false);
  auto la = std::make_shared<const ParamLayout>(2, 2, 12, false);
  auto lb = std::make_shared<const ParamLayout>(2, 2, 18, false);
  const Eigen::VectorXd m = factor_mean_params(f, *lall);
  auto sub_m = [&](const ParamLayout& l, int first) {
    Eigen::VectorXd out(l.total_dim());
    out.head(l.alpha_dim()) = m.head(lall->alpha_dim());
    out.tail(l.z_dim()) = m.segment(lall->z(first, 0), l.z_dim());
    return out;
  };
  const BlockMatrix h = hessian_blocks(m, all, lall);
  const BlockMatrix ha = hessian_blocks(sub_m(*la, 0), a, la);
  const BlockMatrix hb = hessian_blocks(sub_m(*lb, 12), b, lb);
  const int na = lall->alpha_dim();
  EXPECT_TRUE(h.dense_range(0, na).isApprox(ha.dense_range(0, na) + hb.dense_range(0, na), 1e-13));
}
