#include <gtest/gtest.h>

#include "lrvb/error.hpp"
#include "lrvb/lrvb.hpp"
#include "lrvb/oracle.hpp"
#include "oracles.hpp"

using namespace lrvb;

namespace {

struct Base {
  Dataset data;
  SolverConfig cfg;
  VariationalState state;
};

Base make_base(int n) {
  Base b;
  const GmmTruth truth = ref::two_component_truth(2.0);
  b.data = simulate(truth, n, 3);
  b.cfg.init = InitMethod::kTruth;
  b.cfg.truth = truth;
  b.cfg.tol = 1e-11;
  b.cfg.max_iter = 100000;
  b.state = fit(b.data, b.cfg);
  return b;
}

}  // namespace

TEST(Oracle, DefaultStep) {
  EXPECT_DOUBLE_EQ(default_step(0.0), 1e-4);
  EXPECT_DOUBLE_EQ(default_step(-3.0), 4e-4);
}

TEST(Oracle, RejectsLooseBase) {
  Base b = make_base(40);
  SolverConfig loose = b.cfg;
  loose.tol = 1e-6;
  EXPECT_THROW(numeric_dm_dt(b.data, loose, b.state, 0), ValidationError);
  VariationalState unconverged = b.state;
  unconverged.converged = false;
  EXPECT_THROW(numeric_dm_dt(b.data, b.cfg, unconverged, 0), ValidationError);
  EXPECT_THROW(numeric_dm_dt(b.data, b.cfg, b.state, -1), std::out_of_range);
  EXPECT_THROW(numeric_influence(b.data, b.cfg, b.state, 40, 0), std::out_of_range);
}

TEST(Oracle, ColumnsMatchLrvb) {
  Base b = make_base(100);
  const BlockMatrix v = factor_covariance_blocks(b.state.factors, b.state.layout);
  const BlockMatrix h = hessian_blocks(b.state.m, b.data, b.state.layout);
  const Eigen::MatrixXd full = *lrvb_full(v, h).sigma_full;
  const ParamLayout& l = *b.state.layout;
  for (const int i : {l.mu(0, 0), l.lambda(1, 0, 1), l.log_det_lambda(0), l.log_pi(1), l.z(5, 0)}) {
    const Eigen::VectorXd col = numeric_dm_dt(b.data, b.cfg, b.state, i);
    const double rel = (col - full.col(i)).cwiseAbs().maxCoeff() / full.col(i).cwiseAbs().maxCoeff();
    EXPECT_LT(rel, 1e-3) << l.label(i);
  }
}

TEST(Oracle, CentralDifferenceIsSecondOrder) {
  Base b = make_base(100);
  const Eigen::MatrixXd exact = lrvb_for_state(b.state, b.data).sigma_alpha;
  const int i = b.state.layout->mu(1, 1);
  const int na = b.state.layout->alpha_dim();
  auto err = [&](double step) {
    return (numeric_dm_dt(b.data, b.cfg, b.state, i, step).head(na) - exact.col(i)).cwiseAbs().maxCoeff();
  };
  const double ratio = err(0.2) / err(0.1);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(Oracle, WarmAndColdRefitsAgree) {
  Base b = make_base(80);
  SolverConfig perturbed = b.cfg;
  perturbed.tol = 1e-13;
  perturbed.t[b.state.layout->mu(0, 1)] = 1e-3;
  const VariationalState warm = fit(b.data, perturbed, b.state.factors);
  const VariationalState cold = fit(b.data, perturbed);
  ASSERT_TRUE(warm.converged && cold.converged);
  EXPECT_LT((warm.m - cold.m).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(warm.iterations, cold.iterations);
}

TEST(Oracle, CompareColumns) {
  const auto rows = compare_columns(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(2.0, 0.0));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].abs_err, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].rel_err, 0.5);
  EXPECT_DOUBLE_EQ(rows[1].abs_err, 0.0);
  EXPECT_THROW(compare_columns(Eigen::Vector2d::Zero(), Eigen::Vector3d::Zero()), ValidationError);
}
