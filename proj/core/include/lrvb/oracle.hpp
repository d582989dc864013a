#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrvb/gmm_model.hpp"
#include "lrvb/mfvb_solver.hpp"

namespace lrvb {

// Step used when the caller passes h <= 0.
double default_step(double scale);

/// Central-difference column i of dm/dt^T: refits with t = +-h e_i, each
/// warm-started from `base` at tolerance cfg.tol / 100.  `base` must be a
/// converged fit of (data, cfg) with cfg.tol <= 1e-10.  Returns a vector
/// over every coordinate of m.
Eigen::VectorXd numeric_dm_dt(const Dataset& data, const SolverConfig& cfg,
                              const VariationalState& base, int i, double h = 0.0);

/// Central-difference derivative of the alpha means with respect to the data
/// value x(n, p), refitting as in numeric_dm_dt.
Eigen::VectorXd numeric_influence(const Dataset& data, const SolverConfig& cfg,
                                  const VariationalState& base, int n, int p, double h = 0.0);

struct OracleRow {
  int index = 0;
  double lrvb = 0.0;
  double oracle = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
};

std::vector<OracleRow> compare_columns(const Eigen::VectorXd& lrvb, const Eigen::VectorXd& oracle);

}  // namespace lrvb
