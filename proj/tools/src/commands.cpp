#include "lrvb_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "lrvb/error.hpp"
#include "lrvb/gibbs.hpp"
#include "lrvb/influence.hpp"
#include "lrvb/io.hpp"
#include "lrvb/lrvb.hpp"
#include "lrvb/mfvb_solver.hpp"
#include "lrvb/mvn_exact.hpp"

namespace lrvb::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct Options {
  std::string config, data, state, init, gibbs, out, assignments, draws_out, target, axis;
  std::string prefactor = "lrvb-covariance";
  std::string values;
  int n = 0;
  int iters = 0;
  int burn = -1;
  int thin = 1;
  int dim = 0;
  int fixed_n = 10000;
  int fixed_p = 2;
  int fixed_k = 2;
  int gibbs_iters = 1000;
  double rho = 0.0;
  std::uint64_t seed = 0;
  bool second_order = false;
  bool force = false;
  bool full = false;
};

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return io::hash_hex(io::config_hash(json(ss.str())));
}

// Provenance lines shared by every CSV output.
std::vector<std::string> provenance(const json& layout, const std::string& hash) {
  return {"layout: " + layout.dump(), "config_hash: " + hash};
}

void stamp(json& j, const json& layout, const std::string& hash) {
  j["layout"] = layout;
  j["config_hash"] = hash;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Well-separated mixture used by the scaling sweep.
GmmTruth scaling_truth(int k, int p) {
  GmmTruth t;
  t.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::MatrixXd cov = 0.8 * Eigen::MatrixXd::Identity(p, p) + Eigen::MatrixXd::Constant(p, p, 0.2);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
    m(c % p) = 5.0 * (c / p + 1);
    if (c == 0) m.setZero();
    t.means.push_back(m);
    t.covariances.push_back(cov);
  }
  return t;
}

std::vector<int> parse_values(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("--values: '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw ValidationError("--values is empty");
  return out;
}

VariationalState load_state(const std::string& path, const Dataset& data, std::vector<std::string>& warnings) {
  const VariationalState s = io::state_from_json(io::read_json(path));
  if (s.factors.num_points() != data.num_points() || s.factors.dim() != data.dim()) {
    throw ValidationError("state does not match the data shape");
  }
  if (!s.converged) warnings.push_back("input MFVB fit did not converge");
  return s;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  if (o.n < 1) throw ValidationError("--n must be >= 1");
  const json cfg_json = io::read_json(o.config);
  const GmmTruth truth = io::truth_from_json(cfg_json);
  const Dataset d = simulate(truth, o.n, o.seed);
  const json cfg = {{"command", "simulate"}, {"truth", cfg_json}, {"n", o.n}, {"seed", o.seed}};
  const std::string hash = io::hash_hex(io::config_hash(cfg));
  const json layout = ParamLayout(truth.num_components(), truth.dim(), o.n, false).to_json();
  const auto comments = provenance(layout, hash);
  io::write_dataset(o.out, d, comments);
  const fs::path labels_path =
      o.assignments.empty() ? fs::path(o.out).parent_path() / "truth-assignments.csv" : fs::path(o.assignments);
  io::write_assignments(labels_path, *d.labels, comments);
  out << "wrote " << o.n << " points to " << o.out << " and assignments to " << labels_path.string() << '\n';
  return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset d = io::read_dataset(o.data);
  json cfg_json = io::read_json(o.config);
  if (!o.init.empty()) {
    cfg_json["truth"] = io::read_json(o.init);
    cfg_json["init"] = "truth";
  }
  const SolverConfig cfg = io::solver_config_from_json(cfg_json);
  const auto t0 = std::chrono::steady_clock::now();
  const VariationalState s = fit(d, cfg);
  const double secs = seconds_since(t0);
  const json cfg_all = {{"command", "fit"}, {"solver", io::solver_config_to_json(cfg)},
                        {"data", file_digest(o.data)}};
  json j = io::state_to_json(s);
  stamp(j, s.layout->to_json(), io::hash_hex(io::config_hash(cfg_all)));
  j["solver"] = io::solver_config_to_json(cfg);
  j["elbo"] = elbo(s, d);
  j["seconds"] = secs;
  j["warnings"] = json::array();
  if (!s.converged) j["warnings"].push_back("MFVB fit did not converge");
  io::write_json(o.out, j);
  out << "fit: " << (s.converged ? "converged" : "NOT converged") << " after " << s.iterations
      << " sweeps, max change " << s.max_change << ", ELBO " << j["elbo"].get<double>() << '\n';
  if (!s.converged) {
    err << "warning: MFVB fit did not converge within " << cfg.max_iter << " sweeps\n";
    return kExitNumerical;
  }
  return kExitOk;
}

struct LrvbOutput {
  LrvbResult result;
  Eigen::VectorXd mfvb_sd;
};

LrvbOutput lrvb_of(const VariationalState& s, const Dataset& d, bool full) {
  const BlockMatrix v = factor_covariance_blocks(s.factors, s.layout);
  const BlockMatrix h = hessian_blocks(s.m, d, s.layout);
  LrvbOutput o;
  o.result = full ? lrvb_full(v, h) : lrvb_alpha(v, h);
  o.mfvb_sd = v.dense_range(0, s.layout->alpha_dim()).diagonal().cwiseSqrt();
  return o;
}

int cmd_lrvb(const Options& o, std::ostream& out) {
  const Dataset d = io::read_dataset(o.data);
  std::vector<std::string> warnings;
  const VariationalState s = load_state(o.state, d, warnings);
  const LrvbOutput lr = lrvb_of(s, d, o.full);
  const json cfg = {{"command", "lrvb"}, {"data", file_digest(o.data)}, {"state", file_digest(o.state)},
                    {"full", o.full}};
  json j;
  stamp(j, s.layout->to_json(), io::hash_hex(io::config_hash(cfg)));
  j["labels"] = s.layout->alpha_labels();
  j["mean"] = io::vector_to_json(s.m.head(s.layout->alpha_dim()));
  j["lrvb_sd"] = io::vector_to_json(lr.result.alpha_sd());
  j["mfvb_sd"] = io::vector_to_json(lr.mfvb_sd);
  j["sigma_alpha"] = io::matrix_to_json(lr.result.sigma_alpha);
  j["asymmetry"] = lr.result.asymmetry;
  j["rcond"] = lr.result.rcond;
  if (lr.result.sigma_full) j["sigma_full"] = io::matrix_to_json(*lr.result.sigma_full);
  j["warnings"] = warnings;
  io::write_json(o.out, j);
  out << "lrvb: alpha_dim " << s.layout->alpha_dim() << ", asymmetry " << lr.result.asymmetry
      << ", rcond " << lr.result.rcond << '\n';
  return kExitOk;
}

int cmd_influence(const Options& o, std::ostream& out) {
  const Dataset d = io::read_dataset(o.data);
  std::vector<std::string> warnings;
  const VariationalState s = load_state(o.state, d, warnings);
  const InfluencePrefactor pf = parse_prefactor(o.prefactor);
  const InfluenceMatrix inf = influence_for_state(s, d, pf);
  const json cfg = {{"command", "influence"}, {"data", file_digest(o.data)},
                    {"state", file_digest(o.state)}, {"prefactor", o.prefactor},
                    {"second_order", o.second_order}};
  auto comments = provenance(s.layout->to_json(), io::hash_hex(io::config_hash(cfg)));
  comments.push_back("prefactor: " + o.prefactor);
  for (const auto& w : warnings) comments.push_back("warning: " + w);

  const int p = d.dim();
  const int per_point = o.second_order ? inf.stats_per_point() : p;
  std::vector<int> cols;
  for (int n = 0; n < d.num_points(); ++n) {
    for (int j = 0; j < per_point; ++j) cols.push_back(inf.column(n, j));
  }
  std::vector<std::string> header{"statistic"};
  for (const int c : cols) header.push_back(inf.column_label(c));
  std::vector<std::vector<std::string>> rows;
  const auto labels = s.layout->alpha_labels();
  for (int i = 0; i < s.layout->alpha_dim(); ++i) {
    std::vector<std::string> r{labels[static_cast<std::size_t>(i)]};
    r.reserve(cols.size() + 1);
    for (const int c : cols) r.push_back(io::format_double(inf.values(i, c)));
    rows.push_back(std::move(r));
  }
  io::write_csv(o.out, comments, header, rows);
  out << "influence: " << rows.size() << " statistics x " << cols.size() << " columns\n";
  return kExitOk;
}

int cmd_gibbs(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset d = io::read_dataset(o.data);
  const json init_json = io::read_json(o.init);
  const GmmTruth init = io::truth_from_json(init_json);
  const int burn = o.burn < 0 ? o.iters / 10 : o.burn;
  const GibbsChain chain = gibbs_run(d, init, o.iters, burn, o.seed);
  const PosteriorSummary sum = posterior_summary(chain);
  const json cfg = {{"command", "gibbs"}, {"data", file_digest(o.data)}, {"init", init_json},
                    {"iters", o.iters}, {"burn", burn}, {"seed", o.seed}};
  const std::string hash = io::hash_hex(io::config_hash(cfg));
  json j = io::summary_to_json(sum);
  stamp(j, chain.layout->to_json(), hash);
  j["iters"] = o.iters;
  j["burn"] = burn;
  j["seed"] = o.seed;
  j["seconds"] = chain.seconds;
  j["label_switch"] = chain.label_switch;
  j["priors"] = {{"mu_variance", chain.priors.mu_variance},
                 {"wishart_dof", d.dim() + 1.0 + chain.priors.extra_dof},
                 {"wishart_inv_scale", chain.priors.inv_scale},
                 {"dirichlet", chain.priors.dirichlet}};
  io::write_json(o.out, j);
  if (!o.draws_out.empty()) {
    if (o.thin < 1) throw ValidationError("--thin must be >= 1");
    std::vector<std::string> header{"iteration"};
    for (const auto& l : sum.labels) header.push_back(l);
    std::vector<std::vector<std::string>> rows;
    for (int it = 0; it < chain.iterations(); it += o.thin) {
      std::vector<std::string> r{std::to_string(it)};
      for (Eigen::Index c = 0; c < chain.stats.cols(); ++c) r.push_back(io::format_double(chain.stats(it, c)));
      rows.push_back(std::move(r));
    }
    auto comments = provenance(chain.layout->to_json(), hash);
    comments.push_back("burn: " + std::to_string(burn));
    io::write_csv(o.draws_out, comments, header, rows);
  }
  out << "gibbs: " << sum.draws << " kept draws, min ESS " << sum.min_ess() << ", "
      << chain.seconds << " s\n";
  if (!sum.under_sampled.empty()) {
    err << "warning: " << sum.under_sampled.size() << " statistics have ESS below " << kMinEss << '\n';
  }
  if (chain.label_switch) err << "warning: label switching detected\n";
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const Dataset d = io::read_dataset(o.data);
  std::vector<std::string> warnings;
  const VariationalState s = load_state(o.state, d, warnings);
  const json gj = io::read_json(o.gibbs);
  const PosteriorSummary g = io::summary_from_json(gj);
  const int na = s.layout->alpha_dim();
  if (static_cast<int>(g.labels.size()) != na || g.labels != s.layout->alpha_labels()) {
    throw ValidationError("Gibbs summary statistics do not match the state layout");
  }
  if (g.min_ess() < kMinEss && !o.force) {
    throw ValidationError("Gibbs chain has min ESS " + std::to_string(g.min_ess()) + " < " +
                          std::to_string(kMinEss) + "; rerun longer or pass --force");
  }
  if (g.min_ess() < kMinEss) warnings.push_back("Gibbs chain is under-sampled");
  if (gj.value("label_switch", false)) warnings.push_back("Gibbs chain flagged label switching");
  const LrvbOutput lr = lrvb_of(s, d, false);
  const Eigen::MatrixXd& sl = lr.result.sigma_alpha;

  const json cfg = {{"command", "compare"}, {"data", file_digest(o.data)},
                    {"state", file_digest(o.state)}, {"gibbs", file_digest(o.gibbs)}, {"force", o.force}};
  auto comments = provenance(s.layout->to_json(), io::hash_hex(io::config_hash(cfg)));
  comments.push_back("offdiag columns: covariance with the statistic in offdiag_partner, the one most "
                     "correlated with this row under Gibbs");
  for (const auto& w : warnings) comments.push_back("warning: " + w);

  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < na; ++i) {
    int partner = -1;
    double best = -1.0;
    for (int j = 0; j < na; ++j) {
      if (j == i) continue;
      const double c = std::abs(g.cov(i, j)) / std::max(g.sd(i) * g.sd(j), 1e-300);
      if (c > best) {
        best = c;
        partner = j;
      }
    }
    const auto iu = static_cast<std::size_t>(i);
    rows.push_back({g.labels[iu], io::format_double(g.sd(i)), io::format_double(g.sd_se(i)),
                    io::format_double(lr.mfvb_sd(i)), io::format_double(std::sqrt(sl(i, i))),
                    partner >= 0 ? io::format_double(g.cov(i, partner)) : "",
                    partner >= 0 ? io::format_double(sl(i, partner)) : "",
                    partner >= 0 ? g.labels[static_cast<std::size_t>(partner)] : ""});
  }
  io::write_csv(o.out, comments,
                {"statistic", "gibbs_sd", "gibbs_se", "mfvb_sd", "lrvb_sd", "gibbs_cov_offdiag",
                 "lrvb_cov_offdiag", "offdiag_partner"},
                rows);

  // Every off-diagonal pair, for the full covariance scatter.
  fs::path pairs_path = o.out;
  pairs_path.replace_filename(pairs_path.stem().string() + "-offdiag.csv");
  std::vector<std::vector<std::string>> pairs;
  for (int i = 0; i < na; ++i) {
    for (int j = i + 1; j < na; ++j) {
      pairs.push_back({g.labels[static_cast<std::size_t>(i)], g.labels[static_cast<std::size_t>(j)],
                       io::format_double(g.cov(i, j)), io::format_double(sl(i, j))});
    }
  }
  io::write_csv(pairs_path, comments, {"statistic_a", "statistic_b", "gibbs_cov", "lrvb_cov"}, pairs);
  out << "compare: " << rows.size() << " statistics written to " << o.out << '\n';
  return kExitOk;
}

int cmd_scaling(const Options& o, std::ostream& out) {
  if (o.axis != "N" && o.axis != "P" && o.axis != "K") throw ValidationError("--axis must be N, P or K");
  if (o.gibbs_iters < 20) throw ValidationError("--gibbs-iters must be >= 20");
  const auto values = parse_values(o.values);
  const json cfg = {{"command", "scaling"}, {"axis", o.axis}, {"values", values}, {"seed", o.seed},
                    {"N", o.fixed_n}, {"P", o.fixed_p}, {"K", o.fixed_k}, {"gibbs_iters", o.gibbs_iters}};
  const std::string hash = io::hash_hex(io::config_hash(cfg));
  std::vector<std::vector<std::string>> rows;
  json layouts = json::array();
  for (const int v : values) {
    const int n = o.axis == "N" ? v : o.fixed_n;
    const int p = o.axis == "P" ? v : o.fixed_p;
    const int k = o.axis == "K" ? v : o.fixed_k;
    if (n < 1 || p < 1 || k < 1) throw ValidationError("scaling: dimensions must be >= 1");
    const GmmTruth truth = scaling_truth(k, p);
    const Dataset d = simulate(truth, n, o.seed);
    SolverConfig sc;
    sc.init = InitMethod::kTruth;
    sc.truth = truth;
    sc.num_components = k;
    const VariationalState s = fit(d, sc);
    if (!s.converged) throw NumericalError("scaling: MFVB fit did not converge at " + o.axis + "=" + std::to_string(v));

    const auto t0 = std::chrono::steady_clock::now();
    const BlockMatrix vm = factor_covariance_blocks(s.factors, s.layout);
    const BlockMatrix hm = hessian_blocks(s.m, d, s.layout);
    const auto t1 = std::chrono::steady_clock::now();
    const LrvbResult lr = lrvb_alpha(vm, hm);
    const double alpha_secs = seconds_since(t1);
    const double lrvb_secs = seconds_since(t0);

    const GibbsChain chain = gibbs_run(d, truth, o.gibbs_iters, o.gibbs_iters / 10, o.seed + 1);
    const PosteriorSummary sum = posterior_summary(chain);
    const double gibbs_secs = chain.seconds * 1000.0 / sum.min_ess();
    rows.push_back({o.axis, std::to_string(v), io::format_double(lrvb_secs), io::format_double(gibbs_secs),
                    io::format_double(alpha_secs), io::format_double(sum.min_ess())});
    layouts.push_back(s.layout->to_json());
    out << o.axis << "=" << v << ": lrvb " << lrvb_secs << " s, gibbs to 1000 ESS " << gibbs_secs << " s\n";
  }
  std::vector<std::string> comments{"layouts: " + layouts.dump(), "config_hash: " + hash};
  io::write_csv(o.out, comments,
                {"axis", "value", "lrvb_seconds", "gibbs_seconds_to_1000_ess", "lrvb_alpha_seconds", "gibbs_min_ess"},
                rows);
  return kExitOk;
}

int cmd_mvn_demo(const Options& o, std::ostream& out) {
  MvnTarget t;
  json target_json;
  if (!o.target.empty()) {
    target_json = io::read_json(o.target);
    try {
      t.mean = io::vector_from_json(target_json.at("mean"));
      t.cov = io::matrix_from_json(target_json.at("cov"));
      if (target_json.contains("partition")) {
        t.partition = target_json.at("partition").get<std::vector<std::vector<int>>>();
      }
    } catch (const json::exception& e) {
      throw ValidationError(std::string("mvn target: ") + e.what());
    }
  } else {
    if (o.dim < 1) throw ValidationError("--dim must be >= 1 (or pass --target)");
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(o.dim, o.dim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    t.cov = a * a.transpose() / o.dim + 0.1 * Eigen::MatrixXd::Identity(o.dim, o.dim);
    if (o.rho != 0.0) {
      t.cov = (1.0 - o.rho) * Eigen::MatrixXd::Identity(o.dim, o.dim) +
              Eigen::MatrixXd::Constant(o.dim, o.dim, o.rho);
    }
    t.mean.resize(o.dim);
    for (int i = 0; i < o.dim; ++i) t.mean(i) = normal(rng);
    target_json = {{"mean", io::vector_to_json(t.mean)}, {"cov", io::matrix_to_json(t.cov)}};
  }
  const MvnFit f = mfvb_mvn(t);
  if (!f.converged) throw NumericalError("mvn-demo: coordinate ascent did not converge");
  const Eigen::MatrixXd lr = lrvb_mvn(t);
  const json cfg = {{"command", "mvn-demo"}, {"target", target_json}};
  const std::string hash = io::hash_hex(io::config_hash(cfg));
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < t.dim(); ++i) {
    rows.push_back({std::to_string(i), io::format_double(t.cov(i, i)), io::format_double(f.v(i, i)),
                    io::format_double(lr(i, i))});
  }
  const std::vector<std::string> header{"coordinate", "true_var", "mfvb_var", "lrvb_var"};
  const json layout = {{"J", t.dim()}, {"factors", t.groups()}};
  if (!o.out.empty()) io::write_csv(o.out, provenance(layout, hash), header, rows);
  out << "# config_hash: " << hash << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field and linear-response variational Bayes for Gaussian mixtures", "lrvb"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Draw a dataset from a mixture described in JSON");
  sim->add_option("--config", o.config, "truth JSON (weights, means, covariances)")->required()->check(CLI::ExistingFile);
  sim->add_option("--n", o.n, "number of points")->required();
  sim->add_option("--seed", o.seed, "random seed");
  sim->add_option("--out", o.out, "output data CSV")->required();
  sim->add_option("--assignments", o.assignments, "component labels CSV (default: truth-assignments.csv next to --out)");

  auto* fit_cmd = app.add_subcommand("fit", "Fit the mean-field approximation");
  fit_cmd->add_option("--data", o.data, "data CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--config", o.config, "solver config JSON")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--truth", o.init, "truth JSON; implies init = truth")->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", o.out, "output state JSON")->required();

  auto* lr_cmd = app.add_subcommand("lrvb", "Linear-response covariance of the global parameters");
  lr_cmd->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  lr_cmd->add_option("--state", o.state)->required()->check(CLI::ExistingFile);
  lr_cmd->add_option("--out", o.out)->required();
  lr_cmd->add_flag("--full", o.full, "solve the full system (small problems only)");

  auto* inf_cmd = app.add_subcommand("influence", "Influence of each data value on the posterior means");
  inf_cmd->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  inf_cmd->add_option("--state", o.state)->required()->check(CLI::ExistingFile);
  inf_cmd->add_option("--out", o.out)->required();
  inf_cmd->add_option("--prefactor", o.prefactor, "lrvb-covariance or inverse-lrvb-covariance");
  inf_cmd->add_flag("--second-order", o.second_order, "also emit x x^T columns");

  auto* gibbs_cmd = app.add_subcommand("gibbs", "Run the reference Gibbs sampler");
  gibbs_cmd->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  gibbs_cmd->add_option("--init", o.init, "truth JSON to start from")->required()->check(CLI::ExistingFile);
  gibbs_cmd->add_option("--iters", o.iters)->required();
  gibbs_cmd->add_option("--burn", o.burn, "default: iters / 10");
  gibbs_cmd->add_option("--seed", o.seed);
  gibbs_cmd->add_option("--out", o.out)->required();
  gibbs_cmd->add_option("--draws-out", o.draws_out, "optional CSV of per-iteration statistics");
  gibbs_cmd->add_option("--thin", o.thin, "keep every thin-th draw in --draws-out");

  auto* cmp = app.add_subcommand("compare", "Tabulate Gibbs, MFVB and LRVB standard deviations");
  cmp->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  cmp->add_option("--state", o.state)->required()->check(CLI::ExistingFile);
  cmp->add_option("--gibbs", o.gibbs, "gibbs-summary JSON")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", o.out)->required();
  cmp->add_flag("--force", o.force, "accept chains below the ESS bar");

  auto* scal = app.add_subcommand("scaling", "Time LRVB and Gibbs over a sweep of N, P or K");
  scal->add_option("--axis", o.axis)->required();
  scal->add_option("--values", o.values, "comma-separated sizes")->required();
  scal->add_option("--N", o.fixed_n, "N when not swept");
  scal->add_option("--P", o.fixed_p, "P when not swept");
  scal->add_option("--K", o.fixed_k, "K when not swept");
  scal->add_option("--gibbs-iters", o.gibbs_iters);
  scal->add_option("--seed", o.seed);
  scal->add_option("--out", o.out)->required();

  auto* mvn = app.add_subcommand("mvn-demo", "MFVB and LRVB variances for a Gaussian target");
  mvn->add_option("--target", o.target, "JSON with mean, cov and optional partition")->check(CLI::ExistingFile);
  mvn->add_option("--dim", o.dim, "random target dimension");
  mvn->add_option("--rho", o.rho, "equicorrelation instead of a random covariance");
  mvn->add_option("--seed", o.seed);
  mvn->add_option("--out", o.out, "optional CSV");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (fit_cmd->parsed()) return cmd_fit(o, out, err);
    if (lr_cmd->parsed()) return cmd_lrvb(o, out);
    if (inf_cmd->parsed()) return cmd_influence(o, out);
    if (gibbs_cmd->parsed()) return cmd_gibbs(o, out, err);
    if (cmp->parsed()) return cmd_compare(o, out);
    if (scal->parsed()) return cmd_scaling(o, out);
    if (mvn->parsed()) return cmd_mvn_demo(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace lrvb::cli
