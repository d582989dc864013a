#pragma once

#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "lrvb/block_matrix.hpp"
#include "lrvb/gmm_model.hpp"
#include "lrvb/mfvb_solver.hpp"
#include "lrvb/param_layout.hpp"

namespace lrvb {

// Reciprocal condition estimates of (I - V H) below this are treated as
// singular.
inline constexpr double kMinReciprocalCondition = 1e-10;

struct LrvbResult {
  std::shared_ptr<const ParamLayout> layout;
  Eigen::MatrixXd sigma_alpha;              // alpha_dim x alpha_dim
  std::optional<Eigen::MatrixXd> sigma_full;  // only from lrvb_full
  double asymmetry = 0.0;  // ||S - S^T||_F / ||S||_F before symmetrisation
  double rcond = 0.0;      // reciprocal condition estimate of the solved system

  Eigen::VectorXd alpha_sd() const { return sigma_alpha.diagonal().cwiseSqrt(); }
};

/// Solves (I - V H) S = V for dense V and H and symmetrises S.  Throws
/// NumericalError if the system is numerically singular or S has a negative
/// diagonal entry.
Eigen::MatrixXd lrvb_dense(const Eigen::MatrixXd& v, const Eigen::MatrixXd& h,
                           double* asymmetry = nullptr, double* rcond = nullptr);

/// Full LRVB covariance over every coordinate.  Densifies, so only usable
/// when the total dimension is within BlockMatrix::kMaxDenseDim.
LrvbResult lrvb_full(const BlockMatrix& v, const BlockMatrix& h);

/// LRVB covariance of the global parameters alone.  The per-point nuisance
/// coordinates (z[n], and x[n] when present) are eliminated one point at a
/// time, so memory stays O(alpha_dim^2) and time O(N) for fixed alpha_dim.
/// Requires V to be block diagonal between alpha and the nuisance groups and
/// H to couple nuisance groups of different points nowhere.
LrvbResult lrvb_alpha(const BlockMatrix& v, const BlockMatrix& h);

/// V and H at a converged state followed by lrvb_alpha.
LrvbResult lrvb_for_state(const VariationalState& state, const Dataset& data);

}  // namespace lrvb
