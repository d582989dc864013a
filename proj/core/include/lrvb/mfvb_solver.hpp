#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "lrvb/gmm_model.hpp"
#include "lrvb/param_layout.hpp"

namespace lrvb {

// Mean-field factors, updated in this order within a sweep.
enum class Factor { kZ, kMu, kLambda, kPi, kX };

Factor parse_factor(std::string_view name);
std::string_view factor_name(Factor f);

enum class InitMethod { kTruth, kKmeans, kRandom };

InitMethod parse_init(std::string_view name);
std::string_view init_name(InitMethod m);

// Sparse linear perturbation t of the log posterior, keyed by index into m.
using Perturbation = std::map<int, double>;

struct SolverConfig {
  int num_components = 0;  // K; taken from `truth` when init == kTruth
  double tol = 1e-9;       // on max |delta m| per sweep
  int max_iter = 1000;
  InitMethod init = InitMethod::kKmeans;
  std::uint64_t seed = 0;
  std::optional<GmmTruth> truth;
  Perturbation t;
  bool include_x = false;

  void validate() const;
};

struct VariationalState {
  std::shared_ptr<const ParamLayout> layout;
  FactorParams factors;
  Eigen::VectorXd m;
  Eigen::VectorXd t;  // dense perturbation, empty when zero
  int iterations = 0;
  bool converged = false;
  double max_change = std::numeric_limits<double>::infinity();
};

// Flat improper priors on (mu, Lambda, pi) make the Lambda update a Wishart
// with dof = sum_n E z_nk + wishart_dof_offset(P).
constexpr double wishart_dof_offset(int p) { return p + 1.0; }

// Degenerate when a component's expected count drops below this.
inline constexpr double kMinComponentCount = 1e-8;

/// Exact conditional update of one factor given the current means of all
/// others.  Returns the updated state with m recomputed.
VariationalState coordinate_step(const VariationalState& state, const Dataset& data, Factor factor);

/// Builds initial factors from responsibilities (N x K, rows on the simplex).
FactorParams init_from_responsibilities(const Dataset& data, const Eigen::MatrixXd& resp);

/// Initial responsibilities according to cfg.init.
Eigen::MatrixXd initial_responsibilities(const Dataset& data, const SolverConfig& cfg);

/// Coordinate ascent to the fixed point m = M(m).  Non-convergence is
/// reported through the state's `converged` flag, not an exception.
VariationalState fit(const Dataset& data, const SolverConfig& cfg);
VariationalState fit(const Dataset& data, const SolverConfig& cfg, const FactorParams& warm_start);

/// E_q log p(x, theta) + t^T m - E_q log q(theta), dropping constants that do
/// not depend on the variational parameters.
double elbo(const VariationalState& state, const Dataset& data);

}  // namespace lrvb
