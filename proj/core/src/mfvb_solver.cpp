#include "lrvb/mfvb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "lrvb/error.hpp"
#include "lrvb/special.hpp"

namespace lrvb {

Factor parse_factor(std::string_view name) {
  if (name == "z") return Factor::kZ;
  if (name == "mu") return Factor::kMu;
  if (name == "lambda") return Factor::kLambda;
  if (name == "pi") return Factor::kPi;
  if (name == "x") return Factor::kX;
  throw ValidationError("unknown factor '" + std::string(name) + "'");
}

std::string_view factor_name(Factor f) {
  switch (f) {
    case Factor::kZ: return "z";
    case Factor::kMu: return "mu";
    case Factor::kLambda: return "lambda";
    case Factor::kPi: return "pi";
    case Factor::kX: return "x";
  }
  return "?";
}

InitMethod parse_init(std::string_view name) {
  if (name == "truth") return InitMethod::kTruth;
  if (name == "kmeans") return InitMethod::kKmeans;
  if (name == "random") return InitMethod::kRandom;
  throw ValidationError("unknown init method '" + std::string(name) + "'");
}

std::string_view init_name(InitMethod m) {
  switch (m) {
    case InitMethod::kTruth: return "truth";
    case InitMethod::kKmeans: return "kmeans";
    case InitMethod::kRandom: return "random";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (init == InitMethod::kTruth) {
    if (!truth) throw ValidationError("solver: init 'truth' requires truth parameters");
    truth->validate();
    if (num_components != 0 && num_components != truth->num_components()) {
      throw ValidationError("solver: K disagrees with the truth parameters");
    }
  } else if (num_components < 1) {
    throw ValidationError("solver: K must be >= 1");
  }
  if (!(tol > 0.0) || !std::isfinite(tol)) throw ValidationError("solver: tol must be positive");
  if (max_iter < 1) throw ValidationError("solver: max_iter must be >= 1");
  for (const auto& [i, v] : t) {
    if (i < 0) throw ValidationError("solver: negative perturbation index");
    if (!std::isfinite(v)) throw ValidationError("solver: non-finite perturbation value");
  }
}

namespace {

int components_of(const SolverConfig& cfg) {
  return cfg.init == InitMethod::kTruth ? cfg.truth->num_components() : cfg.num_components;
}

// Symmetric matrix T with sum_{a<=b} t_ab M_ab = tr(T M) / 2 for symmetric M.
Eigen::MatrixXd packed_perturbation(const Eigen::VectorXd& t, int offset, int p) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  if (t.size() == 0) return out;
  for (int i = 0; i < packed_size(p); ++i) {
    const auto [a, b] = packed_pair(i, p);
    const double v = t(offset + i);
    if (a == b) {
      out(a, a) = 2.0 * v;
    } else {
      out(a, b) = v;
      out(b, a) = v;
    }
  }
  return out;
}

double t_at(const Eigen::VectorXd& t, int i) { return t.size() == 0 ? 0.0 : t(i); }

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const std::string& what, int component) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(what + " for component " + std::to_string(component) +
                         " is not positive definite");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

Eigen::VectorXd counts(const Eigen::MatrixXd& resp) { return resp.colwise().sum().transpose(); }

void check_count(double n_k, int c) {
  if (!(n_k >= kMinComponentCount)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "component %d has expected count %.3g below %.3g", c, n_k,
                  kMinComponentCount);
    throw DegeneracyError(buf, c);
  }
}

void update_z(FactorParams& f, const Dataset& data, const ParamLayout& layout,
              const Eigen::VectorXd& t) {
  const int k = f.num_components();
  const int p = f.dim();
  const int n_points = data.num_points();
  const Eigen::VectorXd e_log_pi = dirichlet_expected_log(f.pi);
  Eigen::VectorXd base(k);
  std::vector<Eigen::MatrixXd> lam(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    lam[cu] = wishart_mean(f.lambda[cu]);
    double trace_term = (lam[cu] * f.mu[cu].cov).trace();
    if (f.x) trace_term += f.x->eps * lam[cu].trace();
    base(c) = e_log_pi(c) + 0.5 * wishart_expected_log_det(f.lambda[cu]) - 0.5 * trace_term;
  }
  Eigen::VectorXd logit(k);
  Eigen::VectorXd d(p);
  for (int n = 0; n < n_points; ++n) {
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      d = data.x.row(n).transpose() - f.mu[cu].mean;
      logit(c) = base(c) - 0.5 * d.dot(lam[cu] * d) + t_at(t, layout.z(n, c));
    }
    const double mx = logit.maxCoeff();
    const Eigen::ArrayXd e = (logit.array() - mx).exp();
    f.resp.row(n) = (e / e.sum()).transpose();
  }
}

void update_mu(FactorParams& f, const Dataset& data, const ParamLayout& layout,
               const Eigen::VectorXd& t) {
  const int k = f.num_components();
  const int p = f.dim();
  const Eigen::VectorXd n_k = counts(f.resp);
  const Eigen::MatrixXd weighted = data.x.transpose() * f.resp;  // P x K
  for (int c = 0; c < k; ++c) {
    check_count(n_k(c), c);
    const auto cu = static_cast<std::size_t>(c);
    const Eigen::MatrixXd lam = wishart_mean(f.lambda[cu]);
    Eigen::VectorXd lin = lam * weighted.col(c);
    if (t.size() != 0) lin += t.segment(layout.mu(c, 0), p);
    const Eigen::MatrixXd precision =
        n_k(c) * lam - packed_perturbation(t, layout.mu_outer(c, 0, 0), p);
    f.mu[cu].cov = spd_inverse(precision, "mu precision", c);
    f.mu[cu].mean = f.mu[cu].cov * lin;
  }
}

void update_lambda(FactorParams& f, const Dataset& data, const ParamLayout& layout,
                   const Eigen::VectorXd& t) {
  const int k = f.num_components();
  const int p = f.dim();
  const Eigen::VectorXd n_k = counts(f.resp);
  for (int c = 0; c < k; ++c) {
    check_count(n_k(c), c);
    const auto cu = static_cast<std::size_t>(c);
    const Eigen::MatrixXd centred = data.x.rowwise() - f.mu[cu].mean.transpose();
    Eigen::MatrixXd scatter = centred.transpose() * (centred.array().colwise() * f.resp.col(c).array()).matrix();
    scatter += n_k(c) * f.mu[cu].cov;
    if (f.x) scatter += n_k(c) * f.x->eps * Eigen::MatrixXd::Identity(p, p);
    scatter -= packed_perturbation(t, layout.lambda(c, 0, 0), p);
    scatter = 0.5 * (scatter + scatter.transpose());
    auto& w = f.lambda[cu];
    w.dof = n_k(c) + wishart_dof_offset(p) + 2.0 * t_at(t, layout.log_det_lambda(c));
    if (!(w.dof > p - 1 + kWishartDofGuard)) {
      throw NumericalError("lambda dof for component " + std::to_string(c) + " left the interior");
    }
    w.scale = spd_inverse(scatter, "lambda inverse scale", c);
  }
}

void update_pi(FactorParams& f, const ParamLayout& layout, const Eigen::VectorXd& t) {
  const int k = f.num_components();
  const Eigen::VectorXd n_k = counts(f.resp);
  for (int c = 0; c < k; ++c) {
    f.pi.concentration(c) = n_k(c) + 1.0 + t_at(t, layout.log_pi(c));
    if (!(f.pi.concentration(c) > 0.0)) {
      throw NumericalError("Dirichlet concentration for component " + std::to_string(c) +
                           " left the interior");
    }
  }
}

void apply(FactorParams& f, const Dataset& data, const ParamLayout& layout,
           const Eigen::VectorXd& t, Factor factor) {
  switch (factor) {
    case Factor::kZ: update_z(f, data, layout, t); break;
    case Factor::kMu: update_mu(f, data, layout, t); break;
    case Factor::kLambda: update_lambda(f, data, layout, t); break;
    case Factor::kPi: update_pi(f, layout, t); break;
    case Factor::kX:
      if (f.x) f.x->mean = data.x;
      break;
  }
}

Eigen::VectorXd dense_perturbation(const Perturbation& t, const ParamLayout& layout) {
  if (t.empty()) return {};
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.total_dim());
  for (const auto& [i, v] : t) {
    if (i >= layout.total_dim()) {
      throw ValidationError("perturbation index " + std::to_string(i) + " is out of range");
    }
    if (i >= layout.x_offset() && i < layout.z_offset()) {
      throw ValidationError("perturbation of the fixed data coordinate " + layout.label(i));
    }
    out(i) = v;
  }
  return out;
}

void check_data(const Dataset& data, int k) {
  data.validate();
  if (data.num_points() < k) throw ValidationError("fewer data points than components");
}

// Lloyd's algorithm from the given centres; returns within-cluster SS.
double lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd& centres, std::vector<int>& assign,
             std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  const int k = static_cast<int>(centres.rows());
  std::uniform_int_distribution<int> pick(0, n - 1);
  double ss = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    ss = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centres.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      ss += best_d;
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXi sizes = Eigen::VectorXi::Zero(k);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
      ++sizes(assign[static_cast<std::size_t>(i)]);
    }
    for (int c = 0; c < k; ++c) {
      if (sizes(c) == 0) {
        centres.row(c) = x.row(pick(rng));
        changed = true;
      } else {
        centres.row(c) = sums.row(c) / sizes(c);
      }
    }
    if (!changed) break;
  }
  return ss;
}

Eigen::MatrixXd hard_resp(const std::vector<int>& assign, int k) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(assign.size()), k);
  for (std::size_t i = 0; i < assign.size(); ++i) r(static_cast<Eigen::Index>(i), assign[i]) = 1.0;
  return r;
}

std::vector<int> sample_distinct(int n, int k, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> d(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(d(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

VariationalState make_state(const Dataset& data, const SolverConfig& cfg, FactorParams factors) {
  const int k = factors.num_components();
  VariationalState s;
  s.layout = std::make_shared<const ParamLayout>(k, data.dim(), data.num_points(), cfg.include_x);
  if (cfg.include_x) factors.x = DataFactors{data.x, factors.x ? factors.x->eps : 0.0};
  if (!cfg.include_x) factors.x.reset();
  s.t = dense_perturbation(cfg.t, *s.layout);
  s.m = factor_mean_params(factors, *s.layout);
  s.factors = std::move(factors);
  return s;
}

}  // namespace

VariationalState coordinate_step(const VariationalState& state, const Dataset& data, Factor factor) {
  VariationalState out = state;
  apply(out.factors, data, *out.layout, out.t, factor);
  out.m = factor_mean_params(out.factors, *out.layout);
  return out;
}

FactorParams init_from_responsibilities(const Dataset& data, const Eigen::MatrixXd& resp) {
  data.validate();
  const int k = static_cast<int>(resp.cols());
  const int p = data.dim();
  if (resp.rows() != data.num_points() || k < 1) {
    throw ValidationError("responsibilities do not match the data");
  }
  FactorParams f;
  f.resp = resp;
  const Eigen::VectorXd n_k = counts(resp);
  const Eigen::MatrixXd weighted = data.x.transpose() * resp;
  f.mu.resize(static_cast<std::size_t>(k));
  f.lambda.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    check_count(n_k(c), c);
    const auto cu = static_cast<std::size_t>(c);
    f.mu[cu].mean = weighted.col(c) / n_k(c);
    // Placeholder, replaced by the mu update below.
    f.mu[cu].cov = Eigen::MatrixXd::Identity(p, p) * 1e-6;
    f.lambda[cu].dof = p + 1.0;
    f.lambda[cu].scale = Eigen::MatrixXd::Identity(p, p);
  }
  f.pi.concentration = Eigen::VectorXd::Ones(k);
  const ParamLayout layout(k, p, data.num_points(), false);
  const Eigen::VectorXd none;
  update_lambda(f, data, layout, none);
  update_mu(f, data, layout, none);
  update_lambda(f, data, layout, none);
  update_pi(f, layout, none);
  return f;
}

Eigen::MatrixXd initial_responsibilities(const Dataset& data, const SolverConfig& cfg) {
  cfg.validate();
  const int k = components_of(cfg);
  check_data(data, k);
  const int n = data.num_points();
  const int p = data.dim();
  std::mt19937_64 rng(cfg.seed);
  switch (cfg.init) {
    case InitMethod::kTruth: {
      const GmmTruth& truth = *cfg.truth;
      if (truth.dim() != p) throw ValidationError("truth dimension does not match the data");
      Eigen::MatrixXd logit(n, k);
      for (int c = 0; c < k; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const Eigen::LLT<Eigen::MatrixXd> llt(truth.covariances[cu]);
        const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const Eigen::MatrixXd centred = (data.x.rowwise() - truth.means[cu].transpose()).transpose();
        const Eigen::MatrixXd white = llt.matrixL().solve(centred);
        logit.col(c) = (std::log(std::max(truth.weights(c), 1e-300)) - 0.5 * log_det -
                        0.5 * white.colwise().squaredNorm().array())
                           .matrix()
                           .transpose();
      }
      for (int i = 0; i < n; ++i) {
        const double mx = logit.row(i).maxCoeff();
        logit.row(i) = (logit.row(i).array() - mx).exp().matrix();
        logit.row(i) /= logit.row(i).sum();
      }
      return logit;
    }
    case InitMethod::kKmeans: {
      double best_ss = std::numeric_limits<double>::infinity();
      std::vector<int> best;
      for (int restart = 0; restart < 10; ++restart) {
        const auto idx = sample_distinct(n, k, rng);
        Eigen::MatrixXd centres(k, p);
        for (int c = 0; c < k; ++c) centres.row(c) = data.x.row(idx[static_cast<std::size_t>(c)]);
        std::vector<int> assign(static_cast<std::size_t>(n), -1);
        const double ss = lloyd(data.x, centres, assign, rng);
        if (ss < best_ss) {
          best_ss = ss;
          best = assign;
        }
      }
      return hard_resp(best, k);
    }
    case InitMethod::kRandom: {
      const auto idx = sample_distinct(n, k, rng);
      std::vector<int> assign(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = (data.x.row(i) - data.x.row(idx[static_cast<std::size_t>(c)])).squaredNorm();
          if (d < best_d) {
            best_d = d;
            arg = c;
          }
        }
        assign[static_cast<std::size_t>(i)] = arg;
      }
      return hard_resp(assign, k);
    }
  }
  throw ValidationError("unknown init method");
}

VariationalState fit(const Dataset& data, const SolverConfig& cfg) {
  return fit(data, cfg, init_from_responsibilities(data, initial_responsibilities(data, cfg)));
}

VariationalState fit(const Dataset& data, const SolverConfig& cfg, const FactorParams& warm_start) {
  cfg.validate();
  check_data(data, warm_start.num_components());
  if (cfg.init != InitMethod::kTruth && cfg.num_components != warm_start.num_components()) {
    throw ValidationError("warm start has a different number of components");
  }
  if (warm_start.dim() != data.dim() || warm_start.num_points() != data.num_points()) {
    throw ValidationError("warm start does not match the data");
  }
  VariationalState s = make_state(data, cfg, warm_start);
  constexpr Factor kOrder[] = {Factor::kZ, Factor::kMu, Factor::kLambda, Factor::kPi};
  for (int it = 1; it <= cfg.max_iter; ++it) {
    for (const Factor f : kOrder) apply(s.factors, data, *s.layout, s.t, f);
    Eigen::VectorXd m = factor_mean_params(s.factors, *s.layout);
    s.max_change = (m - s.m).cwiseAbs().maxCoeff();
    s.m = std::move(m);
    s.iterations = it;
    if (!std::isfinite(s.max_change)) throw NumericalError("solver produced non-finite parameters");
    if (s.max_change < cfg.tol) {
      s.converged = true;
      break;
    }
  }
  return s;
}

namespace {

double mvn_entropy(const MvnFactor& f) {
  const int p = static_cast<int>(f.mean.size());
  const Eigen::LLT<Eigen::MatrixXd> llt(f.cov);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * (p * (1.0 + std::log(2.0 * std::numbers::pi)) + log_det);
}

double wishart_entropy(const WishartFactor& f) {
  const int p = static_cast<int>(f.scale.rows());
  const Eigen::LLT<Eigen::MatrixXd> llt(f.scale);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double half = 0.5 * f.dof;
  return 0.5 * (p + 1) * log_det + 0.5 * p * (p + 1) * std::log(2.0) +
         multivariate_log_gamma(half, p) - 0.5 * (f.dof - p - 1) * multivariate_digamma(half, p) +
         half * p;
}

double dirichlet_entropy(const DirichletFactor& f) {
  const auto& a = f.concentration;
  const double a0 = a.sum();
  const double k = static_cast<double>(a.size());
  double h = -log_gamma(a0) + (a0 - k) * digamma(a0);
  for (Eigen::Index i = 0; i < a.size(); ++i) h += log_gamma(a(i)) - (a(i) - 1.0) * digamma(a(i));
  return h;
}

}  // namespace

double elbo(const VariationalState& state, const Dataset& data) {
  const FactorParams& f = state.factors;
  const int k = f.num_components();
  const int p = f.dim();
  const Eigen::VectorXd e_log_pi = dirichlet_expected_log(f.pi);
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const Eigen::MatrixXd lam = wishart_mean(f.lambda[cu]);
    const double e_log_det = wishart_expected_log_det(f.lambda[cu]);
    double trace_term = (lam * f.mu[cu].cov).trace();
    if (f.x) trace_term += f.x->eps * lam.trace();
    const double base = e_log_pi(c) + 0.5 * e_log_det - 0.5 * trace_term -
                        0.5 * p * std::log(2.0 * std::numbers::pi);
    const Eigen::MatrixXd centred = data.x.rowwise() - f.mu[cu].mean.transpose();
    const Eigen::VectorXd quad = ((centred * lam).array() * centred.array()).rowwise().sum();
    const Eigen::ArrayXd r = f.resp.col(c).array();
    total += (r * (base - 0.5 * quad.array())).sum();
    total -= (r > 0.0).select(r * r.log(), 0.0).sum();
    total += mvn_entropy(f.mu[cu]) + wishart_entropy(f.lambda[cu]);
  }
  total += dirichlet_entropy(f.pi);
  if (state.t.size() != 0) total += state.t.dot(state.m);
  return total;
}

}  // namespace lrvb
