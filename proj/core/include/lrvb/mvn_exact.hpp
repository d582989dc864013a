#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace lrvb {

/// Gaussian posterior N(mean, cov) approximated by a product over groups of
/// coordinates.  An empty partition means one factor per coordinate.
struct MvnTarget {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::vector<std::vector<int>> partition;

  int dim() const { return static_cast<int>(mean.size()); }
  // Partition with the default filled in.
  std::vector<std::vector<int>> groups() const;
  // Throws ValidationError for a non-PD covariance or a bad partition.
  void validate() const;
};

struct MvnFit {
  Eigen::VectorXd m;
  Eigen::MatrixXd v;  // block diagonal over the partition
  int iterations = 0;
  bool converged = false;
};

/// Block coordinate ascent m_j <- mu_j - L_jj^{-1} L_{j,-j} (m_{-j} - mu_{-j}),
/// L = cov^{-1}, from `init` (default zero).
MvnFit mfvb_mvn(const MvnTarget& target, double tol = 1e-12, int max_iter = 100000,
                const std::optional<Eigen::VectorXd>& init = std::nullopt);

/// The Hessian of the log density in the mean coordinates with the
/// within-factor blocks removed: -L off the factor blocks, zero on them.
Eigen::MatrixXd mvn_hessian(const MvnTarget& target);

/// LRVB covariance (I - V H)^{-1} V; equals cov up to solver error.
Eigen::MatrixXd lrvb_mvn(const MvnTarget& target);

}  // namespace lrvb
