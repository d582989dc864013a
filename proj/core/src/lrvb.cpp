#include "lrvb/lrvb.hpp"

#include <string>
#include <vector>

#include "lrvb/error.hpp"

namespace lrvb {

namespace {

void check_pair(const BlockMatrix& v, const BlockMatrix& h) {
  const ParamLayout& a = v.layout();
  const ParamLayout& b = h.layout();
  if (&a != &b && (a.num_components() != b.num_components() || a.dim() != b.dim() ||
                   a.num_points() != b.num_points() || a.include_x() != b.include_x())) {
    throw ValidationError("V and H use different layouts");
  }
}

void check_diagonal(const Eigen::MatrixXd& s, const ParamLayout* layout) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (!(s(i, i) >= 0.0)) {
      const std::string name = layout ? layout->label(static_cast<int>(i)) : std::to_string(i);
      throw NumericalError("LRVB covariance has negative variance " + std::to_string(s(i, i)) +
                           " at " + name);
    }
  }
}

}  // namespace

Eigen::MatrixXd lrvb_dense(const Eigen::MatrixXd& v, const Eigen::MatrixXd& h, double* asymmetry,
                           double* rcond) {
  if (v.rows() != v.cols() || h.rows() != h.cols() || v.rows() != h.rows()) {
    throw ValidationError("lrvb: V and H must be square and of equal size");
  }
  Eigen::MatrixXd a = -v * h;
  a.diagonal().array() += 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rc = lu.rcond();
  if (rcond) *rcond = rc;
  if (!(rc >= kMinReciprocalCondition)) {
    throw NumericalError("lrvb: (I - V H) is numerically singular (rcond " + std::to_string(rc) + ")");
  }
  Eigen::MatrixXd s = lu.solve(v);
  const double norm = s.norm();
  if (asymmetry) *asymmetry = norm > 0.0 ? (s - s.transpose()).norm() / norm : 0.0;
  s = 0.5 * (s + s.transpose()).eval();
  return s;
}

LrvbResult lrvb_full(const BlockMatrix& v, const BlockMatrix& h) {
  check_pair(v, h);
  LrvbResult out;
  out.layout = v.layout_ptr();
  Eigen::MatrixXd s = lrvb_dense(v.to_dense(), h.to_dense(), &out.asymmetry, &out.rcond);
  check_diagonal(s, out.layout.get());
  const int na = out.layout->alpha_dim();
  out.sigma_alpha = s.topLeftCorner(na, na);
  out.sigma_full = std::move(s);
  return out;
}

LrvbResult lrvb_alpha(const BlockMatrix& v, const BlockMatrix& h) {
  check_pair(v, h);
  const ParamLayout& layout = v.layout();
  const int na = layout.alpha_dim();
  const int n_alpha_blocks = layout.num_alpha_blocks();

  // Nuisance group of each point: its x blocks (if any) followed by z.
  std::vector<int> group;
  std::vector<int> local(static_cast<std::size_t>(layout.num_blocks()), -1);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(na, na);
  Eigen::MatrixXd h_na, v_n, h_nn, m_n, t_n;
  for (int n = 0; n < layout.num_points(); ++n) {
    group.clear();
    if (layout.include_x()) {
      group.push_back(layout.x_block(n));
      group.push_back(layout.x_outer_block(n));
    }
    group.push_back(layout.z_block(n));
    int d = 0;
    for (const int b : group) {
      local[static_cast<std::size_t>(b)] = d;
      d += layout.block(b).length;
    }
    h_na.setZero(d, na);
    h_nn.setZero(d, d);
    v_n.setZero(d, d);
    bool coupled = false;
    for (const int b : group) {
      const int r0 = local[static_cast<std::size_t>(b)];
      const int rlen = layout.block(b).length;
      for (const auto& [cb, blk] : h.row(b)) {
        const Block& c = layout.block(cb);
        if (cb < n_alpha_blocks) {
          h_na.block(r0, c.offset, rlen, c.length) = blk;
        } else if (local[static_cast<std::size_t>(cb)] >= 0) {
          h_nn.block(r0, local[static_cast<std::size_t>(cb)], rlen, c.length) = blk;
          coupled = true;
        } else {
          throw ValidationError("lrvb_alpha: H couples " + layout.block(b).name() + " with " +
                                c.name());
        }
      }
      for (const auto& [cb, blk] : v.row(b)) {
        const Block& c = layout.block(cb);
        if (local[static_cast<std::size_t>(cb)] < 0) {
          throw ValidationError("lrvb_alpha: V is not block diagonal at (" + layout.block(b).name() +
                                ", " + c.name() + ")");
        }
        v_n.block(r0, local[static_cast<std::size_t>(cb)], rlen, c.length) = blk;
      }
    }
    for (const int b : group) local[static_cast<std::size_t>(b)] = -1;

    // M_n = (I - V_n H_nn)^{-1} V_n, which is V_n itself when H_nn = 0.
    if (coupled) {
      Eigen::MatrixXd a = -v_n * h_nn;
      a.diagonal().array() += 1.0;
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
      if (!(lu.rcond() >= kMinReciprocalCondition)) {
        throw NumericalError("lrvb_alpha: nuisance system for point " + std::to_string(n) +
                             " is singular");
      }
      m_n = lu.solve(v_n);
    } else {
      m_n = v_n;
    }
    t_n.noalias() = m_n * h_na;
    g.noalias() += h_na.transpose() * t_n;
  }

  // Alpha rows of V must not reach into the nuisance coordinates.
  for (int b = 0; b < n_alpha_blocks; ++b) {
    for (const auto& [cb, blk] : v.row(b)) {
      if (cb >= n_alpha_blocks) {
        throw ValidationError("lrvb_alpha: V is not block diagonal at (" + layout.block(b).name() +
                              ", " + layout.block(cb).name() + ")");
      }
    }
  }

  const Eigen::MatrixXd v_a = v.dense_range(0, na);
  Eigen::MatrixXd h_eff = h.dense_range(0, na);
  h_eff += g;
  LrvbResult out;
  out.layout = v.layout_ptr();
  out.sigma_alpha = lrvb_dense(v_a, h_eff, &out.asymmetry, &out.rcond);
  check_diagonal(out.sigma_alpha, out.layout.get());
  return out;
}

LrvbResult lrvb_for_state(const VariationalState& state, const Dataset& data) {
  const BlockMatrix v = factor_covariance_blocks(state.factors, state.layout);
  const BlockMatrix h = hessian_blocks(state.m, data, state.layout);
  return lrvb_alpha(v, h);
}

}  // namespace lrvb
