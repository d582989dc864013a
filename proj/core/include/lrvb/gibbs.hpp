#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrvb/gmm_model.hpp"
#include "lrvb/param_layout.hpp"

namespace lrvb {

/// Conjugate priors for the sampler, close to flat at the scales used here:
///   mu_k ~ N(0, mu_variance * I)
///   Lambda_k ~ Wishart(P + 1 + extra_dof, (inv_scale * I)^{-1})
///   pi ~ Dirichlet(dirichlet)
/// With extra_dof = 0 the Wishart density is |Lambda|^0 exp(-inv_scale tr(Lambda)/2).
struct GibbsPriors {
  double mu_variance = 1e6;
  double extra_dof = 0.0;
  double inv_scale = 1e-6;
  double dirichlet = 1.0;
};

/// One row per iteration (burn-in included) of the alpha statistics
/// (mu, packed mu mu^T, packed Lambda, log|Lambda|, log pi), in the layout's
/// alpha order.  The raw mu, Lambda and pi draws are recoverable from them.
struct GibbsChain {
  std::shared_ptr<const ParamLayout> layout;
  Eigen::MatrixXd stats;
  int burn = 0;
  std::uint64_t seed = 0;
  GibbsPriors priors;
  bool label_switch = false;
  double seconds = 0.0;  // wall time spent sweeping

  int iterations() const { return static_cast<int>(stats.rows()); }
  Eigen::MatrixXd kept() const { return stats.bottomRows(stats.rows() - burn); }
};

GibbsChain gibbs_run(const Dataset& data, const GmmTruth& init, int iters, int burn,
                     std::uint64_t seed, const GibbsPriors& priors = {});

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // constant series
};

/// Effective sample size N / (1 + 2 sum rho_t), the sum truncated at the
/// first non-positive pair rho_{2m} + rho_{2m+1}.  Clipped to [1, N].
EssResult ess(std::span<const double> series);

// Minimum effective sample size required before summaries are trusted.
inline constexpr double kMinEss = 500.0;

struct PosteriorSummary {
  std::vector<std::string> labels;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::MatrixXd cov;
  Eigen::VectorXd ess;
  Eigen::VectorXd mean_se;  // sd / sqrt(ess)
  Eigen::VectorXd sd_se;    // sd / sqrt(2 ess)
  std::vector<std::string> under_sampled;
  int draws = 0;

  double min_ess() const { return ess.size() ? ess.minCoeff() : 0.0; }
};

/// Monte Carlo summary of the post-burn-in draws.
PosteriorSummary posterior_summary(const GibbsChain& chain);

}  // namespace lrvb
