#include "lrvb/gmm_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lrvb/error.hpp"
#include "lrvb/special.hpp"

namespace lrvb {

namespace {

bool is_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

// (1/2)^{1(a == b)}: weight of a packed entry in sum_{a,b} A_ab B_ab.
inline double half_if_diag(int a, int b) { return a == b ? 0.5 : 1.0; }

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) throw ValidationError("dataset is empty");
  if (!x.allFinite()) throw ValidationError("dataset contains non-finite values");
  if (labels && static_cast<Eigen::Index>(labels->size()) != x.rows()) {
    throw ValidationError("dataset labels do not match the number of rows");
  }
}

void GmmTruth::validate() const {
  const int k = num_components();
  if (k < 1) throw ValidationError("truth: no components");
  if (static_cast<int>(means.size()) != k || static_cast<int>(covariances.size()) != k) {
    throw ValidationError("truth: weights, means and covariances disagree on K");
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ValidationError("truth: weights must be non-negative and sum to 1");
  }
  const int p = dim();
  if (p < 1) throw ValidationError("truth: zero-dimensional means");
  for (int c = 0; c < k; ++c) {
    if (means[static_cast<std::size_t>(c)].size() != p) {
      throw ValidationError("truth: mean " + std::to_string(c) + " has the wrong dimension");
    }
    const auto& s = covariances[static_cast<std::size_t>(c)];
    if (s.rows() != p || !is_spd(s)) {
      throw ValidationError("truth: covariance " + std::to_string(c) +
                            " is not symmetric positive definite");
    }
  }
}

Dataset simulate(const GmmTruth& truth, int n, std::uint64_t seed) {
  truth.validate();
  if (n < 1) throw ValidationError("simulate: N must be >= 1");
  const int k = truth.num_components();
  const int p = truth.dim();
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(truth.weights.data(), truth.weights.data() + k);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::MatrixXd> chol;
  chol.reserve(static_cast<std::size_t>(k));
  for (const auto& s : truth.covariances) chol.push_back(s.llt().matrixL());

  Dataset out;
  out.x.resize(n, p);
  out.labels.emplace(static_cast<std::size_t>(n));
  Eigen::VectorXd eps(p);
  for (int i = 0; i < n; ++i) {
    const int c = pick(rng);
    for (int a = 0; a < p; ++a) eps(a) = normal(rng);
    out.x.row(i) = (truth.means[static_cast<std::size_t>(c)] + chol[static_cast<std::size_t>(c)] * eps).transpose();
    (*out.labels)[static_cast<std::size_t>(i)] = c;
  }
  return out;
}

void FactorParams::validate() const {
  const int k = num_components();
  const int p = dim();
  if (k < 1 || p < 1) throw NumericalError("factors: empty");
  if (static_cast<int>(lambda.size()) != k || pi.concentration.size() != k || resp.cols() != k) {
    throw NumericalError("factors: inconsistent component counts");
  }
  for (int c = 0; c < k; ++c) {
    const auto& f = mu[static_cast<std::size_t>(c)];
    if (f.mean.size() != p || !f.mean.allFinite() || !is_spd(f.cov)) {
      throw NumericalError("factors: mu[" + std::to_string(c) + "] covariance is not positive definite");
    }
    const auto& w = lambda[static_cast<std::size_t>(c)];
    if (!(w.dof > p - 1 + kWishartDofGuard) || w.scale.rows() != p || !is_spd(w.scale)) {
      throw NumericalError("factors: lambda[" + std::to_string(c) +
                           "] Wishart parameters are not interior");
    }
  }
  if (!(pi.concentration.array() > 0.0).all() || !pi.concentration.allFinite()) {
    throw NumericalError("factors: Dirichlet concentration must be positive");
  }
  if (!resp.allFinite() || (resp.array() < 0.0).any() ||
      ((resp.rowwise().sum().array() - 1.0).abs() > 1e-9).any()) {
    throw NumericalError("factors: responsibilities must lie on the simplex");
  }
  if (x) {
    if (x->mean.rows() != resp.rows() || x->mean.cols() != p || !(x->eps >= 0.0)) {
      throw NumericalError("factors: perturbed-data factors are inconsistent");
    }
  }
}

Eigen::MatrixXd mvn_second_moment(const MvnFactor& f) {
  return f.cov + f.mean * f.mean.transpose();
}

Eigen::MatrixXd wishart_mean(const WishartFactor& f) { return f.dof * f.scale; }

double wishart_expected_log_det(const WishartFactor& f) {
  const int p = static_cast<int>(f.scale.rows());
  const Eigen::LLT<Eigen::MatrixXd> llt(f.scale);
  const double log_det_w = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return multivariate_digamma(0.5 * f.dof, p) + p * std::log(2.0) + log_det_w;
}

Eigen::VectorXd dirichlet_expected_log(const DirichletFactor& f) {
  const double d0 = digamma(f.concentration.sum());
  Eigen::VectorXd out(f.concentration.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = digamma(f.concentration(i)) - d0;
  return out;
}

Eigen::MatrixXd mvn_stat_covariance(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const int p = static_cast<int>(mean.size());
  const int ps = packed_size(p);
  Eigen::MatrixXd out(p + ps, p + ps);
  out.topLeftCorner(p, p) = cov;
  for (int i = 0; i < ps; ++i) {
    const auto [a, b] = packed_pair(i, p);
    // Cov(v_c, v_a v_b) = m_a C_bc + m_b C_ac
    for (int c = 0; c < p; ++c) {
      const double v = mean(a) * cov(b, c) + mean(b) * cov(a, c);
      out(c, p + i) = v;
      out(p + i, c) = v;
    }
    for (int j = 0; j < ps; ++j) {
      const auto [c, d] = packed_pair(j, p);
      out(p + i, p + j) = cov(a, c) * cov(b, d) + cov(a, d) * cov(b, c) +
                          cov(a, c) * mean(b) * mean(d) + cov(a, d) * mean(b) * mean(c) +
                          cov(b, c) * mean(a) * mean(d) + cov(b, d) * mean(a) * mean(c);
    }
  }
  return out;
}

Eigen::MatrixXd wishart_stat_covariance(const WishartFactor& f) {
  const int p = static_cast<int>(f.scale.rows());
  const int ps = packed_size(p);
  const auto& w = f.scale;
  Eigen::MatrixXd out(ps + 1, ps + 1);
  for (int i = 0; i < ps; ++i) {
    const auto [a, b] = packed_pair(i, p);
    for (int j = 0; j < ps; ++j) {
      const auto [c, d] = packed_pair(j, p);
      out(i, j) = f.dof * (w(a, c) * w(b, d) + w(a, d) * w(b, c));
    }
    // d E[L_ab] / d((dof - P - 1) / 2) = 2 W_ab
    out(i, ps) = 2.0 * w(a, b);
    out(ps, i) = out(i, ps);
  }
  out(ps, ps) = multivariate_trigamma(0.5 * f.dof, p);
  return out;
}

Eigen::MatrixXd dirichlet_log_covariance(const DirichletFactor& f) {
  const auto k = f.concentration.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(k, k, -trigamma(f.concentration.sum()));
  for (Eigen::Index i = 0; i < k; ++i) out(i, i) += trigamma(f.concentration(i));
  return out;
}

namespace {

void check_layout(const FactorParams& factors, const ParamLayout& layout) {
  if (factors.num_components() != layout.num_components() || factors.dim() != layout.dim() ||
      factors.num_points() != layout.num_points()) {
    throw ValidationError("factors do not match the layout dimensions");
  }
  if (layout.include_x() && !factors.x) {
    throw ValidationError("layout includes x blocks but the factors have no data factors");
  }
}

}  // namespace

Eigen::VectorXd factor_mean_params(const FactorParams& factors, const ParamLayout& layout) {
  check_layout(factors, layout);
  factors.validate();
  const int k = layout.num_components();
  const int p = layout.dim();
  const int ps = packed_size(p);
  Eigen::VectorXd m(layout.total_dim());
  for (int c = 0; c < k; ++c) {
    const auto& fm = factors.mu[static_cast<std::size_t>(c)];
    m.segment(layout.mu(c, 0), p) = fm.mean;
    m.segment(layout.mu_outer(c, 0, 0), ps) = pack_symmetric(mvn_second_moment(fm));
    const auto& fl = factors.lambda[static_cast<std::size_t>(c)];
    m.segment(layout.lambda(c, 0, 0), ps) = pack_symmetric(wishart_mean(fl));
    m(layout.log_det_lambda(c)) = wishart_expected_log_det(fl);
  }
  m.segment(layout.log_pi(0), k) = dirichlet_expected_log(factors.pi);
  if (layout.include_x()) {
    const auto& xf = *factors.x;
    for (int n = 0; n < layout.num_points(); ++n) {
      const Eigen::VectorXd xn = xf.mean.row(n).transpose();
      m.segment(layout.x(n, 0), p) = xn;
      m.segment(layout.x_outer(n, 0, 0), ps) =
          pack_symmetric(xf.eps * Eigen::MatrixXd::Identity(p, p) + xn * xn.transpose());
    }
  }
  for (int n = 0; n < layout.num_points(); ++n) {
    m.segment(layout.z(n, 0), k) = factors.resp.row(n).transpose();
  }
  return m;
}

BlockMatrix factor_covariance_blocks(const FactorParams& factors,
                                     std::shared_ptr<const ParamLayout> layout_ptr) {
  const ParamLayout& layout = *layout_ptr;
  check_layout(factors, layout);
  factors.validate();
  const int k = layout.num_components();
  const int p = layout.dim();
  const int ps = packed_size(p);
  BlockMatrix v(layout_ptr);
  for (int c = 0; c < k; ++c) {
    const auto& fm = factors.mu[static_cast<std::size_t>(c)];
    const Eigen::MatrixXd mc = mvn_stat_covariance(fm.mean, fm.cov);
    v.set_block(layout.mu_block(c), layout.mu_block(c), mc.topLeftCorner(p, p));
    v.set_symmetric_block(layout.mu_block(c), layout.mu_outer_block(c), mc.topRightCorner(p, ps));
    v.set_block(layout.mu_outer_block(c), layout.mu_outer_block(c), mc.bottomRightCorner(ps, ps));

    const Eigen::MatrixXd wc = wishart_stat_covariance(factors.lambda[static_cast<std::size_t>(c)]);
    v.set_block(layout.lambda_block(c), layout.lambda_block(c), wc.topLeftCorner(ps, ps));
    v.set_symmetric_block(layout.lambda_block(c), layout.log_det_lambda_block(c),
                          wc.topRightCorner(ps, 1));
    v.set_block(layout.log_det_lambda_block(c), layout.log_det_lambda_block(c),
                wc.bottomRightCorner(1, 1));
  }
  v.set_block(layout.log_pi_block(), layout.log_pi_block(), dirichlet_log_covariance(factors.pi));

  if (layout.include_x()) {
    const auto& xf = *factors.x;
    const Eigen::MatrixXd cov = xf.eps * Eigen::MatrixXd::Identity(p, p);
    for (int n = 0; n < layout.num_points(); ++n) {
      const Eigen::MatrixXd xc = mvn_stat_covariance(xf.mean.row(n).transpose(), cov);
      v.set_block(layout.x_block(n), layout.x_block(n), xc.topLeftCorner(p, p));
      v.set_symmetric_block(layout.x_block(n), layout.x_outer_block(n), xc.topRightCorner(p, ps));
      v.set_block(layout.x_outer_block(n), layout.x_outer_block(n), xc.bottomRightCorner(ps, ps));
    }
  }

  Eigen::MatrixXd zc(k, k);
  for (int n = 0; n < layout.num_points(); ++n) {
    const Eigen::VectorXd r = factors.resp.row(n).transpose();
    zc = -r * r.transpose();
    zc.diagonal() += r;
    v.set_block(layout.z_block(n), layout.z_block(n), zc);
  }
  return v;
}

BlockMatrix hessian_blocks(const Eigen::VectorXd& m, const Dataset& data,
                           std::shared_ptr<const ParamLayout> layout_ptr) {
  const ParamLayout& layout = *layout_ptr;
  if (m.size() != layout.total_dim()) throw ValidationError("hessian_blocks: m has the wrong length");
  if (data.num_points() != layout.num_points() || data.dim() != layout.dim()) {
    throw ValidationError("hessian_blocks: data shape does not match the layout");
  }
  const int k = layout.num_components();
  const int p = layout.dim();
  const int ps = packed_size(p);
  const int n_points = layout.num_points();

  std::vector<Eigen::VectorXd> e_mu(static_cast<std::size_t>(k));
  std::vector<Eigen::MatrixXd> e_mu2(static_cast<std::size_t>(k));
  std::vector<Eigen::MatrixXd> e_lambda(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    e_mu[static_cast<std::size_t>(c)] = m.segment(layout.mu(c, 0), p);
    e_mu2[static_cast<std::size_t>(c)] = unpack_symmetric(m.segment(layout.mu_outer(c, 0, 0), ps));
    e_lambda[static_cast<std::size_t>(c)] = unpack_symmetric(m.segment(layout.lambda(c, 0, 0), ps));
  }
  auto resp = [&](int n, int c) { return m(layout.z(n, c)); };

  BlockMatrix h(layout_ptr);

  // alpha-alpha: mu-lambda and mu_outer-lambda, summed over points.
  for (int c = 0; c < k; ++c) {
    double count = 0.0;
    Eigen::VectorXd weighted_x = Eigen::VectorXd::Zero(p);
    for (int n = 0; n < n_points; ++n) {
      count += resp(n, c);
      weighted_x += resp(n, c) * data.x.row(n).transpose();
    }
    Eigen::MatrixXd mu_lam = Eigen::MatrixXd::Zero(p, ps);
    Eigen::MatrixXd mu2_lam = Eigen::MatrixXd::Zero(ps, ps);
    for (int j = 0; j < ps; ++j) {
      const auto [a, b] = packed_pair(j, p);
      // d/d mu_e of the packed cross term L_ab s_ab(x, mu)
      if (a == b) {
        mu_lam(a, j) = weighted_x(a);
      } else {
        mu_lam(b, j) += weighted_x(a);
        mu_lam(a, j) += weighted_x(b);
      }
      // -(1/2) sum_{a,b} L_ab Q_ab = -(1/2) L_aa Q_aa - L_ab Q_ab (a < b)
      mu2_lam(j, j) = -half_if_diag(a, b) * count;
    }
    h.set_symmetric_block(layout.mu_block(c), layout.lambda_block(c), mu_lam);
    h.set_symmetric_block(layout.mu_outer_block(c), layout.lambda_block(c), mu2_lam);
  }

  // alpha-z and (optionally) x-alpha, x-z, one data point at a time.
  Eigen::MatrixXd mu_z(p, k), mu2_z(ps, k), lam_z(ps, k), ld_z(1, k);
  Eigen::MatrixXd pi_z = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd x_mu(p, p), x_lam(p, ps), x_z(p, k), x2_lam(ps, ps), x2_z(ps, k);
  for (int n = 0; n < n_points; ++n) {
    const Eigen::VectorXd xn = data.x.row(n).transpose();
    const int zb = layout.z_block(n);
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      const Eigen::VectorXd& mu = e_mu[cu];
      const Eigen::MatrixXd& lam = e_lambda[cu];
      const Eigen::MatrixXd& mu2 = e_mu2[cu];
      mu_z.setZero();
      mu2_z.setZero();
      lam_z.setZero();
      ld_z.setZero();
      mu_z.col(c) = lam * xn;
      for (int j = 0; j < ps; ++j) {
        const auto [a, b] = packed_pair(j, p);
        const double w = half_if_diag(a, b);
        mu2_z(j, c) = -w * lam(a, b);
        lam_z(j, c) = -w * (xn(a) * xn(b) - mu(a) * xn(b) - mu(b) * xn(a) + mu2(a, b));
      }
      ld_z(0, c) = 0.5;
      h.set_symmetric_block(layout.mu_block(c), zb, mu_z);
      h.set_symmetric_block(layout.mu_outer_block(c), zb, mu2_z);
      h.set_symmetric_block(layout.lambda_block(c), zb, lam_z);
      h.set_symmetric_block(layout.log_det_lambda_block(c), zb, ld_z);
    }
    h.set_symmetric_block(layout.log_pi_block(), zb, pi_z);

    if (layout.include_x()) {
      const int xb = layout.x_block(n);
      const int x2b = layout.x_outer_block(n);
      x_z.setZero();
      x2_z.setZero();
      for (int c = 0; c < k; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const double r = resp(n, c);
        const Eigen::VectorXd& mu = e_mu[cu];
        const Eigen::MatrixXd& lam = e_lambda[cu];
        x_mu = r * lam;
        x_lam.setZero();
        x2_lam.setZero();
        for (int j = 0; j < ps; ++j) {
          const auto [a, b] = packed_pair(j, p);
          if (a == b) {
            x_lam(a, j) = r * mu(a);
          } else {
            x_lam(a, j) += r * mu(b);
            x_lam(b, j) += r * mu(a);
          }
          x2_lam(j, j) = -half_if_diag(a, b) * r;
          x2_z(j, c) = -half_if_diag(a, b) * lam(a, b);
        }
        x_z.col(c) = lam * mu;
        h.set_symmetric_block(xb, layout.mu_block(c), x_mu);
        h.set_symmetric_block(xb, layout.lambda_block(c), x_lam);
        h.set_symmetric_block(x2b, layout.lambda_block(c), x2_lam);
      }
      h.set_symmetric_block(xb, zb, x_z);
      h.set_symmetric_block(x2b, zb, x2_z);
    }
  }
  return h;
}

std::vector<int> factor_groups(const ParamLayout& layout) {
  std::vector<int> g(static_cast<std::size_t>(layout.num_blocks()));
  const int k = layout.num_components();
  for (int b = 0; b < layout.num_blocks(); ++b) {
    const Block& blk = layout.block(b);
    int group = 0;
    switch (blk.kind) {
      case BlockKind::kMu:
      case BlockKind::kMuOuter: group = blk.index; break;
      case BlockKind::kLambda:
      case BlockKind::kLogDetLambda: group = k + blk.index; break;
      case BlockKind::kLogPi: group = 2 * k; break;
      case BlockKind::kX:
      case BlockKind::kXOuter: group = 2 * k + 1 + blk.index; break;
      case BlockKind::kZ: group = 2 * k + 1 + layout.num_points() + blk.index; break;
    }
    g[static_cast<std::size_t>(b)] = group;
  }
  return g;
}

}  // namespace lrvb
