#include "lrvb/mvn_exact.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lrvb/error.hpp"
#include "lrvb/lrvb.hpp"

namespace lrvb {

std::vector<std::vector<int>> MvnTarget::groups() const {
  if (!partition.empty()) return partition;
  std::vector<std::vector<int>> g(static_cast<std::size_t>(dim()));
  for (int j = 0; j < dim(); ++j) g[static_cast<std::size_t>(j)] = {j};
  return g;
}

void MvnTarget::validate() const {
  const int j = dim();
  if (j < 1) throw ValidationError("mvn: empty target");
  if (cov.rows() != j || cov.cols() != j) throw ValidationError("mvn: covariance has the wrong shape");
  if (!mean.allFinite() || !cov.allFinite()) throw ValidationError("mvn: non-finite target");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw ValidationError("mvn: covariance is not symmetric");
  }
  if (cov.llt().info() != Eigen::Success) {
    throw ValidationError("mvn: covariance is not positive definite");
  }
  std::vector<int> seen(static_cast<std::size_t>(j), 0);
  for (const auto& g : groups()) {
    if (g.empty()) throw ValidationError("mvn: empty partition group");
    for (const int i : g) {
      if (i < 0 || i >= j) throw ValidationError("mvn: partition index out of range");
      ++seen[static_cast<std::size_t>(i)];
    }
  }
  for (const int s : seen) {
    if (s != 1) throw ValidationError("mvn: partition must cover every coordinate exactly once");
  }
}

namespace {

Eigen::MatrixXd precision_of(const MvnTarget& t) {
  const Eigen::LLT<Eigen::MatrixXd> llt(t.cov);
  Eigen::MatrixXd l = llt.solve(Eigen::MatrixXd::Identity(t.dim(), t.dim()));
  return 0.5 * (l + l.transpose());
}

Eigen::MatrixXd sub(const Eigen::MatrixXd& m, const std::vector<int>& r, const std::vector<int>& c) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(r[i], c[j]);
  }
  return out;
}

}  // namespace

MvnFit mfvb_mvn(const MvnTarget& target, double tol, int max_iter,
                const std::optional<Eigen::VectorXd>& init) {
  target.validate();
  const int j = target.dim();
  const auto groups = target.groups();
  const Eigen::MatrixXd lam = precision_of(target);

  MvnFit out;
  out.m = init.value_or(Eigen::VectorXd::Zero(j));
  if (out.m.size() != j) throw ValidationError("mvn: initial point has the wrong length");
  out.v = Eigen::MatrixXd::Zero(j, j);
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
  for (const auto& g : groups) {
    factors.emplace_back(sub(lam, g, g));
    const Eigen::MatrixXd vg =
        factors.back().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size())));
    for (std::size_t a = 0; a < g.size(); ++a) {
      for (std::size_t b = 0; b < g.size(); ++b) out.v(g[a], g[b]) = vg(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }

  for (int it = 1; it <= max_iter; ++it) {
    double change = 0.0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const auto& g = groups[gi];
      // L_{j,-j} (m_{-j} - mu_{-j}) = L_{j,:} (m - mu) - L_jj (m_j - mu_j)
      Eigen::VectorXd resid = out.m - target.mean;
      for (const int i : g) resid(i) = 0.0;
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(g.size()));
      for (std::size_t a = 0; a < g.size(); ++a) rhs(static_cast<Eigen::Index>(a)) = lam.row(g[a]).dot(resid);
      const Eigen::VectorXd step = factors[gi].solve(rhs);
      for (std::size_t a = 0; a < g.size(); ++a) {
        const double next = target.mean(g[a]) - step(static_cast<Eigen::Index>(a));
        change = std::max(change, std::abs(next - out.m(g[a])));
        out.m(g[a]) = next;
      }
    }
    out.iterations = it;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

Eigen::MatrixXd mvn_hessian(const MvnTarget& target) {
  target.validate();
  Eigen::MatrixXd h = -precision_of(target);
  for (const auto& g : target.groups()) {
    for (const int a : g) {
      for (const int b : g) h(a, b) = 0.0;
    }
  }
  return h;
}

Eigen::MatrixXd lrvb_mvn(const MvnTarget& target) {
  const MvnFit fit = mfvb_mvn(target);
  if (!fit.converged) throw NumericalError("mvn: coordinate ascent did not converge");
  return lrvb_dense(fit.v, mvn_hessian(target));
}

}  // namespace lrvb
