#include <gtest/gtest.h>

#include "lrvb/error.hpp"
#include "lrvb/lrvb.hpp"
#include "oracles.hpp"

using namespace lrvb;

namespace {

struct Instance {
  Dataset data;
  VariationalState state;
  BlockMatrix v;
  BlockMatrix h;
};

Instance fitted(int n, bool include_x, double separation = 2.5, std::uint64_t seed = 1) {
  const GmmTruth truth = ref::two_component_truth(separation);
  Dataset d = simulate(truth, n, seed);
  SolverConfig cfg;
  cfg.init = InitMethod::kTruth;
  cfg.truth = truth;
  cfg.tol = 1e-11;
  cfg.include_x = include_x;
  VariationalState s = fit(d, cfg);
  EXPECT_TRUE(s.converged);
  BlockMatrix v = factor_covariance_blocks(s.factors, s.layout);
  BlockMatrix h = hessian_blocks(s.m, d, s.layout);
  return {std::move(d), std::move(s), std::move(v), std::move(h)};
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(LrvbDense, ZeroHessianReturnsV) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Random(5, 5);
  const Eigen::MatrixXd v = b * b.transpose();
  EXPECT_TRUE(lrvb_dense(v, Eigen::MatrixXd::Zero(5, 5)).isApprox(v, 1e-15));
  EXPECT_EQ(lrvb_dense(Eigen::MatrixXd::Zero(5, 5), v), Eigen::MatrixXd::Zero(5, 5));
}

TEST(LrvbDense, SingularSystemRejected) {
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(lrvb_dense(i, i), NumericalError);
}

TEST(LrvbDense, ReportsAsymmetry) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd h(2, 2);
  h << 0.0, 0.3, 0.1, 0.0;
  double asym = -1.0;
  double rcond = -1.0;
  const Eigen::MatrixXd s = lrvb_dense(v, h, &asym, &rcond);
  EXPECT_GT(asym, 0.0);
  EXPECT_GT(rcond, 0.0);
  EXPECT_EQ(s, s.transpose());
}

TEST(Lrvb, SchurMatchesFull) {
  for (const bool with_x : {false, true}) {
    for (const double sep : {1.5, 2.5, 4.0}) {
      Instance in = fitted(150, with_x, sep);
      ASSERT_LE(in.state.layout->total_dim(), 2000);
      const LrvbResult full = lrvb_full(in.v, in.h);
      const LrvbResult alpha = lrvb_alpha(in.v, in.h);
      const int na = in.state.layout->alpha_dim();
      EXPECT_LT(rel_err(alpha.sigma_alpha, full.sigma_full->topLeftCorner(na, na)), 1e-10);
      EXPECT_LT(full.asymmetry, 1e-6);
      EXPECT_LT(alpha.asymmetry, 1e-6);
      EXPECT_EQ(alpha.sigma_alpha, alpha.sigma_alpha.transpose());
    }
  }
}

TEST(Lrvb, DecoupledNuisance) {
  Instance in = fitted(80, false);
  const ParamLayout& l = *in.state.layout;
  BlockMatrix h(in.state.layout);
  for (int r = 0; r < l.num_alpha_blocks(); ++r) {
    for (const auto& [c, blk] : in.h.row(r)) {
      if (c < l.num_alpha_blocks()) h.set_block(r, c, blk);
    }
  }
  const int na = l.alpha_dim();
  const Eigen::MatrixXd expected = lrvb_dense(in.v.dense_range(0, na), in.h.dense_range(0, na));
  EXPECT_LT(rel_err(lrvb_alpha(in.v, h).sigma_alpha, expected), 1e-12);
}

TEST(Lrvb, AlphaPathNeverDensifies) {
  Instance in = fitted(3000, false);
  const std::size_t before = BlockMatrix::dense_materialisations();
  const LrvbResult r = lrvb_alpha(in.v, in.h);
  EXPECT_EQ(BlockMatrix::dense_materialisations(), before);
  EXPECT_FALSE(r.sigma_full.has_value());
  EXPECT_EQ(r.sigma_alpha.rows(), in.state.layout->alpha_dim());
}

TEST(Lrvb, CorrectionWidensOverlappingComponents) {
  Instance in = fitted(2000, false, 1.5, 4);
  const LrvbResult r = lrvb_alpha(in.v, in.h);
  const ParamLayout& l = *in.state.layout;
  const Eigen::VectorXd mfvb_sd = in.v.dense_range(0, l.alpha_dim()).diagonal().cwiseSqrt();
  for (int c = 0; c < 2; ++c) {
    for (int a = 0; a < 2; ++a) {
      EXPECT_GT(r.alpha_sd()(l.mu(c, a)), mfvb_sd(l.mu(c, a))) << l.label(l.mu(c, a));
    }
  }
  EXPECT_GT(r.alpha_sd()(l.log_pi(0)), mfvb_sd(l.log_pi(0)));
}

TEST(Lrvb, ForStateMatchesManualPipeline) {
  Instance in = fitted(100, false);
  EXPECT_LT(rel_err(lrvb_for_state(in.state, in.data).sigma_alpha, lrvb_alpha(in.v, in.h).sigma_alpha),
            1e-14);
}

TEST(Lrvb, LayoutMismatchRejected) {
  Instance a = fitted(50, false);
  Instance b = fitted(60, false);
  EXPECT_THROW(lrvb_alpha(a.v, b.h), ValidationError);
}
