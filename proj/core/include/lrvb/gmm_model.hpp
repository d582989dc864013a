#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lrvb/block_matrix.hpp"
#include "lrvb/param_layout.hpp"

namespace lrvb {

/// Observations, one row per data point.
struct Dataset {
  Eigen::MatrixXd x;  // N x P
  std::optional<std::vector<int>> labels;

  int num_points() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  // Throws ValidationError on empty or non-finite data.
  void validate() const;
};

/// Generating parameters of a Gaussian mixture.
struct GmmTruth {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  std::uint64_t seed = 0;

  int num_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  void validate() const;
};

Dataset simulate(const GmmTruth& truth, int n, std::uint64_t seed);

struct MvnFactor {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Density proportional to |L|^{(dof - P - 1)/2} exp(-tr(scale^{-1} L) / 2).
struct WishartFactor {
  double dof = 0.0;
  Eigen::MatrixXd scale;
};

struct DirichletFactor {
  Eigen::VectorXd concentration;
};

/// The perturbed-data factors q(x*_n): mean x_n, covariance eps * I.
struct DataFactors {
  Eigen::MatrixXd mean;  // N x P
  double eps = 0.0;
};

/// Parameters of every mean-field factor of the mixture posterior.
struct FactorParams {
  std::vector<MvnFactor> mu;          // one per component
  std::vector<WishartFactor> lambda;  // one per component
  DirichletFactor pi;
  Eigen::MatrixXd resp;               // N x K, rows on the simplex
  std::optional<DataFactors> x;

  int num_components() const { return static_cast<int>(mu.size()); }
  int dim() const { return mu.empty() ? 0 : static_cast<int>(mu.front().mean.size()); }
  int num_points() const { return static_cast<int>(resp.rows()); }
  // Throws NumericalError if any factor leaves the interior of its family.
  void validate() const;
};

// Wishart degrees of freedom must exceed P - 1 by at least this much.
inline constexpr double kWishartDofGuard = 1e-8;

// Expected sufficient statistics of individual factors.
Eigen::MatrixXd mvn_second_moment(const MvnFactor& f);
Eigen::MatrixXd wishart_mean(const WishartFactor& f);
double wishart_expected_log_det(const WishartFactor& f);
Eigen::VectorXd dirichlet_expected_log(const DirichletFactor& f);

// Covariance of (v, packed v v^T) for v ~ N(mean, cov).
Eigen::MatrixXd mvn_stat_covariance(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);
// Covariance of (packed L, log|L|) for L ~ Wishart.
Eigen::MatrixXd wishart_stat_covariance(const WishartFactor& f);
// Covariance of (log pi_1, ..., log pi_K) for pi ~ Dirichlet.
Eigen::MatrixXd dirichlet_log_covariance(const DirichletFactor& f);

/// Stacked mean parameters m = E_q[theta] in the layout's coordinates.
Eigen::VectorXd factor_mean_params(const FactorParams& factors, const ParamLayout& layout);

/// Block-diagonal V = Cov_q(theta), one dense block group per factor.
BlockMatrix factor_covariance_blocks(const FactorParams& factors,
                                     std::shared_ptr<const ParamLayout> layout);

/// Expected Hessian of the log posterior with respect to the sufficient
/// statistics, evaluated at the means m.  Improper flat priors contribute
/// nothing.  Only the structurally nonzero blocks are stored; in particular
/// every z-z, alpha-within-factor and x-x block is absent.
BlockMatrix hessian_blocks(const Eigen::VectorXd& m, const Dataset& data,
                           std::shared_ptr<const ParamLayout> layout);

// Factor membership of each layout block: blocks in the same group belong
// to the same variational factor.
std::vector<int> factor_groups(const ParamLayout& layout);

}  // namespace lrvb
