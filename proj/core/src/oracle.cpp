#include "lrvb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lrvb/error.hpp"

namespace lrvb {

double default_step(double scale) { return 1e-4 * (1.0 + std::abs(scale)); }

namespace {

void check_base(const SolverConfig& cfg, const VariationalState& base) {
  if (cfg.tol > 1e-10) throw ValidationError("oracle: base tolerance must be <= 1e-10");
  if (!base.converged) throw ValidationError("oracle: base fit is not converged");
}

constexpr int kPolishSweeps = 20;
constexpr int kMaxPolishRounds = 50;

SolverConfig refit_config(const SolverConfig& cfg) {
  SolverConfig out = cfg;
  out.tol = cfg.tol / 100.0;
  out.max_iter = std::max(cfg.max_iter, 100000);
  return out;
}

VariationalState refit(const Dataset& data, const SolverConfig& cfg, const VariationalState& base,
                       const char* side) {
  VariationalState s = fit(data, cfg, base.factors);
  if (!s.converged) {
    throw NumericalError(std::string("oracle: ") + side + " refit did not converge (max change " +
                         std::to_string(s.max_change) + ")");
  }
  // Stopping at max |delta m| < tol leaves about tol * rho / (1 - rho) along
  // the slowest mode, which swamps small perturbation responses.  Keep
  // sweeping in short rounds until the change stops shrinking.
  SolverConfig polish = cfg;
  polish.tol = std::numeric_limits<double>::min();
  polish.max_iter = kPolishSweeps;
  double prev = s.max_change;
  for (int round = 0; round < kMaxPolishRounds && prev > 0.0; ++round) {
    VariationalState next = fit(data, polish, s.factors);
    const double change = next.max_change;
    s = std::move(next);
    if (!(change < 0.5 * prev)) break;
    prev = change;
  }
  s.converged = true;
  return s;
}

}  // namespace

Eigen::VectorXd numeric_dm_dt(const Dataset& data, const SolverConfig& cfg,
                              const VariationalState& base, int i, double h) {
  check_base(cfg, base);
  if (i < 0 || i >= base.layout->total_dim()) throw std::out_of_range("numeric_dm_dt: bad index");
  if (h <= 0.0) h = default_step(base.m(i));
  SolverConfig plus = refit_config(cfg);
  SolverConfig minus = plus;
  plus.t[i] += h;
  minus.t[i] -= h;
  const VariationalState up = refit(data, plus, base, "+h");
  const VariationalState down = refit(data, minus, base, "-h");
  return (up.m - down.m) / (2.0 * h);
}

Eigen::VectorXd numeric_influence(const Dataset& data, const SolverConfig& cfg,
                                  const VariationalState& base, int n, int p, double h) {
  check_base(cfg, base);
  if (n < 0 || n >= data.num_points() || p < 0 || p >= data.dim()) {
    throw std::out_of_range("numeric_influence: bad data index");
  }
  if (h <= 0.0) h = default_step(data.x(n, p));
  const SolverConfig rc = refit_config(cfg);
  Dataset up_data = data;
  Dataset down_data = data;
  up_data.x(n, p) += h;
  down_data.x(n, p) -= h;
  const VariationalState up = refit(up_data, rc, base, "+h");
  const VariationalState down = refit(down_data, rc, base, "-h");
  const int na = base.layout->alpha_dim();
  return (up.m.head(na) - down.m.head(na)) / (2.0 * h);
}

std::vector<OracleRow> compare_columns(const Eigen::VectorXd& lrvb, const Eigen::VectorXd& oracle) {
  if (lrvb.size() != oracle.size()) throw ValidationError("compare_columns: length mismatch");
  std::vector<OracleRow> rows;
  rows.reserve(static_cast<std::size_t>(lrvb.size()));
  for (Eigen::Index i = 0; i < lrvb.size(); ++i) {
    OracleRow r;
    r.index = static_cast<int>(i);
    r.lrvb = lrvb(i);
    r.oracle = oracle(i);
    r.abs_err = std::abs(r.lrvb - r.oracle);
    r.rel_err = r.abs_err / std::max(std::abs(r.oracle), 1e-300);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lrvb
