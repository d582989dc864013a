#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "lrvb/block_matrix.hpp"
#include "lrvb/gmm_model.hpp"
#include "lrvb/mfvb_solver.hpp"
#include "lrvb/param_layout.hpp"

namespace lrvb {

// Left factor applied to the per-point cross terms.
//   kLrvbCovariance:        S_alpha (H_ax + H_az M_z H_zx) S_x
//   kInverseLrvbCovariance: S_alpha^{-1} (V_a H_ax + V_a H_az M_z H_zx) S_x
// where S_alpha is the LRVB alpha covariance and M_z = (I - V_z H_z)^{-1} V_z.
// kUnset is rejected so callers always choose explicitly.
enum class InfluencePrefactor { kUnset, kLrvbCovariance, kInverseLrvbCovariance };

InfluencePrefactor parse_prefactor(std::string_view name);
std::string_view prefactor_name(InfluencePrefactor p);

/// Limiting covariance, divided by eps, of (x, packed x x^T) when x is
/// perturbed isotropically with covariance eps * I.
Eigen::MatrixXd s_x_limit(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Influence scores d E[alpha] / d (x_n statistics), one column block per
/// point laid out as (x_n, packed x_n x_n^T).
struct InfluenceMatrix {
  std::shared_ptr<const ParamLayout> layout;
  Eigen::MatrixXd values;  // alpha_dim x N * stats_per_point()

  int stats_per_point() const { return layout->dim() + packed_size(layout->dim()); }
  int column(int n, int j) const { return n * stats_per_point() + j; }
  std::string column_label(int col) const;
};

/// Requires a layout with x blocks and H built on it at the data.
InfluenceMatrix influence_matrix(const Dataset& data, const BlockMatrix& v, const BlockMatrix& h,
                                 const Eigen::MatrixXd& sigma_alpha, InfluencePrefactor prefactor);

/// Convenience: rebuilds the state's layout with x blocks, computes V, H and
/// the LRVB alpha covariance, and returns the influence matrix.
InfluenceMatrix influence_for_state(const VariationalState& state, const Dataset& data,
                                    InfluencePrefactor prefactor);

/// ||d ||E mu_k||^2 / d x_n||_2 through the first-order x_n columns.
double directional_influence(const InfluenceMatrix& influence, const VariationalState& state, int k,
                             int n);

}  // namespace lrvb
