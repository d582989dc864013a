#include "lrvb/influence.hpp"

#include <string>
#include <vector>

#include "lrvb/error.hpp"
#include "lrvb/lrvb.hpp"

namespace lrvb {

InfluencePrefactor parse_prefactor(std::string_view name) {
  if (name == "lrvb-covariance") return InfluencePrefactor::kLrvbCovariance;
  if (name == "inverse-lrvb-covariance") return InfluencePrefactor::kInverseLrvbCovariance;
  throw ValidationError("unknown influence prefactor '" + std::string(name) + "'");
}

std::string_view prefactor_name(InfluencePrefactor p) {
  switch (p) {
    case InfluencePrefactor::kLrvbCovariance: return "lrvb-covariance";
    case InfluencePrefactor::kInverseLrvbCovariance: return "inverse-lrvb-covariance";
    case InfluencePrefactor::kUnset: break;
  }
  return "unset";
}

Eigen::MatrixXd s_x_limit(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!x.allFinite()) throw ValidationError("s_x_limit: non-finite data point");
  const int p = static_cast<int>(x.size());
  const int ps = packed_size(p);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p + ps, p + ps);
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  s.topLeftCorner(p, p).setIdentity();
  for (int j = 0; j < ps; ++j) {
    const auto [b, c] = packed_pair(j, p);
    for (int a = 0; a < p; ++a) {
      const double v = delta(a, b) * x(c) + delta(a, c) * x(b);
      s(a, p + j) = v;
      s(p + j, a) = v;
    }
    for (int i = 0; i < ps; ++i) {
      const auto [a, bb] = packed_pair(i, p);
      s(p + i, p + j) = delta(a, b) * x(bb) * x(c) + delta(a, c) * x(bb) * x(b) +
                        delta(bb, b) * x(a) * x(c) + delta(bb, c) * x(a) * x(b);
    }
  }
  return s;
}

std::string InfluenceMatrix::column_label(int col) const {
  const int sp = stats_per_point();
  const int n = col / sp;
  const int j = col % sp;
  const int p = layout->dim();
  if (j < p) return std::to_string(n) + ":" + std::to_string(j);
  const auto [a, b] = packed_pair(j - p, p);
  return std::to_string(n) + ":(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

InfluenceMatrix influence_matrix(const Dataset& data, const BlockMatrix& v, const BlockMatrix& h,
                                 const Eigen::MatrixXd& sigma_alpha, InfluencePrefactor prefactor) {
  if (prefactor == InfluencePrefactor::kUnset) {
    throw ValidationError("influence: the prefactor must be chosen explicitly");
  }
  const ParamLayout& layout = h.layout();
  if (!layout.include_x()) throw ValidationError("influence: layout has no x blocks");
  const int na = layout.alpha_dim();
  if (sigma_alpha.rows() != na || sigma_alpha.cols() != na) {
    throw ValidationError("influence: sigma_alpha does not match the layout");
  }
  if (data.num_points() != layout.num_points() || data.dim() != layout.dim()) {
    throw ValidationError("influence: data shape does not match the layout");
  }
  const int p = layout.dim();
  const int sp = p + packed_size(p);
  const int k = layout.num_components();
  const int n_alpha_blocks = layout.num_alpha_blocks();

  // B = [H_ax + H_az M_z H_zx] S_x, one column block per point.
  Eigen::MatrixXd b_all(na, static_cast<Eigen::Index>(layout.num_points()) * sp);
  Eigen::MatrixXd h_xa(sp, na), h_za(k, na), h_zx(k, sp), h_zz(k, k), v_z(k, k), m_z;
  for (int n = 0; n < layout.num_points(); ++n) {
    const int xb = layout.x_block(n);
    const int x2b = layout.x_outer_block(n);
    const int zb = layout.z_block(n);
    h_xa.setZero();
    h_za.setZero();
    h_zx.setZero();
    h_zz.setZero();
    for (const int rb : {xb, x2b}) {
      const int r0 = rb == xb ? 0 : p;
      for (const auto& [cb, blk] : h.row(rb)) {
        if (cb < n_alpha_blocks) {
          h_xa.block(r0, layout.block(cb).offset, blk.rows(), blk.cols()) = blk;
        } else if (cb != xb && cb != x2b && cb != zb) {
          throw ValidationError("influence: H couples " + layout.block(rb).name() + " with " +
                                layout.block(cb).name());
        }
      }
    }
    for (const auto& [cb, blk] : h.row(zb)) {
      if (cb < n_alpha_blocks) {
        h_za.middleCols(layout.block(cb).offset, blk.cols()) = blk;
      } else if (cb == xb) {
        h_zx.leftCols(p) = blk;
      } else if (cb == x2b) {
        h_zx.rightCols(sp - p) = blk;
      } else if (cb == zb) {
        h_zz = blk;
      } else {
        throw ValidationError("influence: H couples " + layout.block(zb).name() + " with " +
                              layout.block(cb).name());
      }
    }
    v_z = v.block(zb, zb);
    if (h_zz.isZero(0.0)) {
      m_z = v_z;
    } else {
      Eigen::MatrixXd a = -v_z * h_zz;
      a.diagonal().array() += 1.0;
      m_z = a.partialPivLu().solve(v_z);
    }
    const Eigen::MatrixXd cross = h_xa.transpose() + h_za.transpose() * (m_z * h_zx);
    b_all.middleCols(static_cast<Eigen::Index>(n) * sp, sp).noalias() =
        cross * s_x_limit(data.x.row(n).transpose());
  }

  InfluenceMatrix out;
  out.layout = h.layout_ptr();
  switch (prefactor) {
    case InfluencePrefactor::kLrvbCovariance:
      out.values = sigma_alpha * b_all;
      break;
    case InfluencePrefactor::kInverseLrvbCovariance: {
      const Eigen::MatrixXd v_a = v.dense_range(0, na);
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sigma_alpha);
      if (!(lu.rcond() >= kMinReciprocalCondition)) {
        throw NumericalError("influence: LRVB alpha covariance is singular");
      }
      out.values = lu.solve(v_a * b_all);
      break;
    }
    case InfluencePrefactor::kUnset: break;
  }
  return out;
}

InfluenceMatrix influence_for_state(const VariationalState& state, const Dataset& data,
                                    InfluencePrefactor prefactor) {
  FactorParams factors = state.factors;
  if (!factors.x) factors.x = DataFactors{data.x, 0.0};
  auto layout = std::make_shared<const ParamLayout>(factors.num_components(), factors.dim(),
                                                    factors.num_points(), true);
  const Eigen::VectorXd m = factor_mean_params(factors, *layout);
  const BlockMatrix v = factor_covariance_blocks(factors, layout);
  const BlockMatrix h = hessian_blocks(m, data, layout);
  const LrvbResult lr = lrvb_alpha(v, h);
  return influence_matrix(data, v, h, lr.sigma_alpha, prefactor);
}

double directional_influence(const InfluenceMatrix& influence, const VariationalState& state, int k,
                             int n) {
  const ParamLayout& layout = *influence.layout;
  if (k < 0 || k >= layout.num_components() || n < 0 || n >= layout.num_points()) {
    throw std::out_of_range("directional_influence: bad component or point");
  }
  const int p = layout.dim();
  const Eigen::VectorXd mu = state.factors.mu.at(static_cast<std::size_t>(k)).mean;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
  for (int a = 0; a < p; ++a) {
    g += 2.0 * mu(a) *
         influence.values.block(layout.mu(k, a), influence.column(n, 0), 1, p).transpose();
  }
  return g.norm();
}

}  // namespace lrvb
