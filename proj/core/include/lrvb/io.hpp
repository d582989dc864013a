#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lrvb/gibbs.hpp"
#include "lrvb/gmm_model.hpp"
#include "lrvb/influence.hpp"
#include "lrvb/lrvb.hpp"
#include "lrvb/mfvb_solver.hpp"

namespace lrvb::io {

using nlohmann::json;

// All readers throw ValidationError for missing files and malformed content.
json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

// FNV-1a over the compact dump of j; object keys are already sorted.
std::uint64_t config_hash(const json& j);
std::string hash_hex(std::uint64_t h);

/// Comment-prefixed CSV: every entry of `comments` becomes a leading "# "
/// line, then a header and the rows.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

std::string format_double(double v);

Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   const std::vector<std::string>& comments);
void write_assignments(const std::filesystem::path& path, const std::vector<int>& labels,
                       const std::vector<std::string>& comments);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

GmmTruth truth_from_json(const json& j);
json truth_to_json(const GmmTruth& t);

SolverConfig solver_config_from_json(const json& j);
json solver_config_to_json(const SolverConfig& cfg);

json factors_to_json(const FactorParams& f);
FactorParams factors_from_json(const json& j);

json state_to_json(const VariationalState& s);
// Rebuilds layout and m from the stored factors.
VariationalState state_from_json(const json& j);

json summary_to_json(const PosteriorSummary& s);
PosteriorSummary summary_from_json(const json& j);

}  // namespace lrvb::io
