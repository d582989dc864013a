#include <benchmark/benchmark.h>

#include "lrvb/gmm_model.hpp"
#include "lrvb/lrvb.hpp"
#include "lrvb/mfvb_solver.hpp"

namespace {

struct Problem {
  lrvb::Dataset data;
  lrvb::VariationalState state;
};

lrvb::GmmTruth truth(int p) {
  lrvb::GmmTruth t;
  t.weights = Eigen::Vector2d(0.5, 0.5);
  const Eigen::MatrixXd cov = 0.8 * Eigen::MatrixXd::Identity(p, p) + Eigen::MatrixXd::Constant(p, p, 0.2);
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  m1(0) = 4.0;
  t.means = {Eigen::VectorXd::Zero(p), m1};
  t.covariances = {cov, cov};
  return t;
}

Problem make_problem(int n, int p) {
  Problem out;
  const lrvb::GmmTruth t = truth(p);
  out.data = lrvb::simulate(t, n, 1);
  lrvb::SolverConfig cfg;
  cfg.init = lrvb::InitMethod::kTruth;
  cfg.truth = t;
  cfg.tol = 1e-8;
  out.state = lrvb::fit(out.data, cfg);
  return out;
}

void BM_LrvbAlpha(benchmark::State& st) {
  const Problem pr = make_problem(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  const lrvb::BlockMatrix v = lrvb::factor_covariance_blocks(pr.state.factors, pr.state.layout);
  const lrvb::BlockMatrix h = lrvb::hessian_blocks(pr.state.m, pr.data, pr.state.layout);
  for (auto _ : st) benchmark::DoNotOptimize(lrvb::lrvb_alpha(v, h));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_LrvbAlpha)
    ->ArgsProduct({{1000, 10000, 100000}, {2}})
    ->ArgsProduct({{10000}, {2, 4, 8}})
    ->Unit(benchmark::kMillisecond);

void BM_HessianBlocks(benchmark::State& st) {
  const Problem pr = make_problem(static_cast<int>(st.range(0)), 2);
  for (auto _ : st) benchmark::DoNotOptimize(lrvb::hessian_blocks(pr.state.m, pr.data, pr.state.layout));
}
BENCHMARK(BM_HessianBlocks)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_FactorCovariance(benchmark::State& st) {
  const Problem pr = make_problem(static_cast<int>(st.range(0)), 2);
  for (auto _ : st) {
    benchmark::DoNotOptimize(lrvb::factor_covariance_blocks(pr.state.factors, pr.state.layout));
  }
}
BENCHMARK(BM_FactorCovariance)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
