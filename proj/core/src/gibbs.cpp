#include "lrvb/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "lrvb/error.hpp"

namespace lrvb {

namespace {

struct Draw {
  std::vector<Eigen::VectorXd> mu;
  std::vector<Eigen::MatrixXd> lambda;
  Eigen::VectorXd pi;
};

Eigen::MatrixXd sample_wishart(double dof, const Eigen::MatrixXd& scale, std::mt19937_64& rng) {
  const int p = static_cast<int>(scale.rows());
  const Eigen::MatrixXd l = scale.llt().matrixL();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(dof - i);
    a(i, i) = std::sqrt(chi(rng));
    for (int j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  const Eigen::MatrixXd la = l * a;
  Eigen::MatrixXd out = la * la.transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& conc, std::mt19937_64& rng) {
  Eigen::VectorXd g(conc.size());
  for (Eigen::Index i = 0; i < conc.size(); ++i) {
    std::gamma_distribution<double> gamma(conc(i), 1.0);
    g(i) = std::max(gamma(rng), 1e-300);
  }
  return g / g.sum();
}

void record(const Draw& d, const ParamLayout& layout, Eigen::RowVectorXd& row) {
  const int k = layout.num_components();
  const int p = layout.dim();
  const int ps = packed_size(p);
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    row.segment(layout.mu(c, 0), p) = d.mu[cu].transpose();
    row.segment(layout.mu_outer(c, 0, 0), ps) =
        pack_symmetric(d.mu[cu] * d.mu[cu].transpose()).transpose();
    row.segment(layout.lambda(c, 0, 0), ps) = pack_symmetric(d.lambda[cu]).transpose();
    const Eigen::LLT<Eigen::MatrixXd> llt(d.lambda[cu]);
    row(layout.log_det_lambda(c)) = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  row.segment(layout.log_pi(0), k) = d.pi.array().log().matrix().transpose();
}

std::vector<int> order_by_first_coordinate(const Eigen::RowVectorXd& row, const ParamLayout& layout) {
  std::vector<int> idx(static_cast<std::size_t>(layout.num_components()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return row(layout.mu(a, 0)) < row(layout.mu(b, 0)); });
  return idx;
}

// A switch counts when the first-coordinate ordering of the component means
// differs from the initial ordering for a sustained run of draws.
bool detect_label_switch(const GibbsChain& chain, const std::vector<int>& initial) {
  const Eigen::MatrixXd kept = chain.kept();
  const Eigen::Index run_needed = std::max<Eigen::Index>(50, kept.rows() / 100);
  Eigen::Index run = 0;
  for (Eigen::Index i = 0; i < kept.rows(); ++i) {
    if (order_by_first_coordinate(kept.row(i), *chain.layout) != initial) {
      if (++run >= run_needed) return true;
    } else {
      run = 0;
    }
  }
  return false;
}

}  // namespace

GibbsChain gibbs_run(const Dataset& data, const GmmTruth& init, int iters, int burn,
                     std::uint64_t seed, const GibbsPriors& priors) {
  data.validate();
  init.validate();
  if (!(iters > burn && burn >= 0)) throw ValidationError("gibbs: need iters > burn >= 0");
  if (init.dim() != data.dim()) throw ValidationError("gibbs: init dimension does not match the data");
  if (!(priors.mu_variance > 0.0) || !(priors.inv_scale > 0.0) || !(priors.dirichlet > 0.0) ||
      !(priors.extra_dof >= 0.0)) {
    throw ValidationError("gibbs: invalid prior constants");
  }
  const int k = init.num_components();
  const int p = data.dim();
  const int n_points = data.num_points();

  GibbsChain chain;
  chain.layout = std::make_shared<const ParamLayout>(k, p, n_points, false);
  chain.burn = burn;
  chain.seed = seed;
  chain.priors = priors;
  chain.stats.resize(iters, chain.layout->alpha_dim());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Draw d;
  d.pi = init.weights;
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    d.mu.push_back(init.means[cu]);
    d.lambda.push_back(init.covariances[cu].llt().solve(Eigen::MatrixXd::Identity(p, p)));
  }

  const double dof0 = p + 1.0 + priors.extra_dof;
  std::vector<int> z(static_cast<std::size_t>(n_points));
  Eigen::MatrixXd logp(n_points, k);
  Eigen::VectorXd eps(p);
  Eigen::RowVectorXd row(chain.layout->alpha_dim());
  const auto start = std::chrono::steady_clock::now();
  for (int it = 0; it < iters; ++it) {
    // z | rest
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      const Eigen::LLT<Eigen::MatrixXd> llt(d.lambda[cu]);
      const Eigen::MatrixXd l = llt.matrixL();
      const double half_log_det = llt.matrixLLT().diagonal().array().log().sum();
      const Eigen::MatrixXd centred = data.x.rowwise() - d.mu[cu].transpose();
      logp.col(c) = (std::log(d.pi(c)) + half_log_det -
                     0.5 * (centred * l).rowwise().squaredNorm().array())
                        .matrix();
    }
    for (int n = 0; n < n_points; ++n) {
      const double mx = logp.row(n).maxCoeff();
      double total = 0.0;
      for (int c = 0; c < k; ++c) {
        logp(n, c) = std::exp(logp(n, c) - mx);
        total += logp(n, c);
      }
      double u = unif(rng) * total;
      int c = 0;
      while (c < k - 1 && u >= logp(n, c)) {
        u -= logp(n, c);
        ++c;
      }
      z[static_cast<std::size_t>(n)] = c;
    }
    Eigen::VectorXd count = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(p, k);
    for (int n = 0; n < n_points; ++n) {
      const int c = z[static_cast<std::size_t>(n)];
      count(c) += 1.0;
      sums.col(c) += data.x.row(n).transpose();
    }

    // mu | rest
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      Eigen::MatrixXd prec = count(c) * d.lambda[cu];
      prec.diagonal().array() += 1.0 / priors.mu_variance;
      const Eigen::LLT<Eigen::MatrixXd> llt(prec);
      const Eigen::VectorXd mean = llt.solve(d.lambda[cu] * sums.col(c));
      for (int a = 0; a < p; ++a) eps(a) = normal(rng);
      d.mu[cu] = mean + llt.matrixU().solve(eps);
    }

    // Lambda | rest
    std::vector<Eigen::MatrixXd> scatter(static_cast<std::size_t>(k),
                                         Eigen::MatrixXd::Identity(p, p) * priors.inv_scale);
    for (int n = 0; n < n_points; ++n) {
      const auto cu = static_cast<std::size_t>(z[static_cast<std::size_t>(n)]);
      const Eigen::VectorXd r = data.x.row(n).transpose() - d.mu[cu];
      scatter[cu].noalias() += r * r.transpose();
    }
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      const Eigen::MatrixXd w = scatter[cu].llt().solve(Eigen::MatrixXd::Identity(p, p));
      d.lambda[cu] = sample_wishart(dof0 + count(c), 0.5 * (w + w.transpose()), rng);
    }

    // pi | z
    d.pi = sample_dirichlet((count.array() + priors.dirichlet).matrix(), rng);

    record(d, *chain.layout, row);
    chain.stats.row(it) = row;
  }
  chain.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Eigen::RowVectorXd init_row(chain.layout->alpha_dim());
  Draw first{init.means, {}, init.weights};
  for (const auto& s : init.covariances) first.lambda.push_back(s.inverse());
  record(first, *chain.layout, init_row);
  chain.label_switch = detect_label_switch(chain, order_by_first_coordinate(init_row, *chain.layout));
  return chain;
}

EssResult ess(std::span<const double> series) {
  const auto n = series.size();
  if (n < 10) throw ValidationError("ess: need at least 10 draws");
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / nd;
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = series[i] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / nd;
  };
  const double g0 = autocov(0);
  if (!(g0 > 1e-26 * std::max(1.0, mean * mean))) return {nd, true};

  double sum = 0.0;  // sum over pairs Gamma_m = g_{2m} + g_{2m+1}
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (m == 0 ? g0 : autocov(2 * m)) + autocov(2 * m + 1);
    if (!(pair > 0.0)) break;
    sum += pair;
  }
  const double tau = (-g0 + 2.0 * sum) / g0;
  const double e = tau > 0.0 ? nd / tau : nd;
  return {std::clamp(e, 1.0, nd), false};
}

PosteriorSummary posterior_summary(const GibbsChain& chain) {
  const Eigen::MatrixXd kept = chain.kept();
  const Eigen::Index d = kept.cols();
  if (kept.rows() < 10) throw ValidationError("posterior_summary: fewer than 10 kept draws");
  PosteriorSummary s;
  s.labels = chain.layout->alpha_labels();
  s.draws = static_cast<int>(kept.rows());
  s.mean = kept.colwise().mean().transpose();
  const Eigen::MatrixXd centred = kept.rowwise() - s.mean.transpose();
  s.cov = centred.transpose() * centred / static_cast<double>(kept.rows() - 1);
  s.sd = s.cov.diagonal().cwiseSqrt();
  s.ess.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd col = kept.col(j);
    s.ess(j) = ess(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))).ess;
    if (s.ess(j) < kMinEss) s.under_sampled.push_back(s.labels[static_cast<std::size_t>(j)]);
  }
  s.mean_se = s.sd.array() / s.ess.array().sqrt();
  s.sd_se = s.sd.array() / (2.0 * s.ess.array()).sqrt();
  return s;
}

}  // namespace lrvb
