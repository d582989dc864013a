#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lrvb/error.hpp"
#include "lrvb/io.hpp"
#include "oracles.hpp"

using namespace lrvb;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lrvb_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST(Io, DatasetRoundTrip) {
  const Dataset d = simulate(ref::two_component_truth(), 25, 1);
  const fs::path p = temp_path("data.csv");
  io::write_dataset(p, d, {"layout: {}", "config_hash: 0"});
  const Dataset back = io::read_dataset(p);
  EXPECT_EQ(back.x, d.x);
  const io::CsvTable t = io::read_csv(p);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_EQ(t.rows.size(), 25u);
}

TEST(Io, CsvQuotesFieldsWithSeparators) {
  const fs::path p = temp_path("quoted.csv");
  io::write_csv(p, {"note, with comma"}, {"statistic", "0:(0,1)"}, {{"lambda[0](0,1)", "1.5"}, {"say \"hi\"", ""}});
  const io::CsvTable t = io::read_csv(p);
  EXPECT_EQ(t.header, (std::vector<std::string>{"statistic", "0:(0,1)"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"lambda[0](0,1)", "1.5"}));
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"say \"hi\"", ""}));
}

TEST(Io, MalformedDataset) {
  const fs::path p = temp_path("bad.csv");
  write_text(p, "x1,x2\n1.0,2.0\n3.0\n");
  EXPECT_THROW(io::read_dataset(p), ValidationError);
  write_text(p, "x1,x2\n1.0,abc\n");
  EXPECT_THROW(io::read_dataset(p), ValidationError);
  write_text(p, "x1,x2\n");
  EXPECT_THROW(io::read_dataset(p), ValidationError);
  EXPECT_THROW(io::read_dataset(temp_path("missing.csv")), ValidationError);
}

TEST(Io, JsonErrors) {
  const fs::path p = temp_path("bad.json");
  write_text(p, "{ not json");
  EXPECT_THROW(io::read_json(p), ValidationError);
  EXPECT_THROW(io::truth_from_json(io::json{{"weights", {1.0}}}), ValidationError);
  EXPECT_THROW(io::solver_config_from_json(io::json{{"tol", -1.0}, {"K", 2}}), ValidationError);
  EXPECT_THROW(io::solver_config_from_json(io::json{{"K", 2}, {"init", "bogus"}}), ValidationError);
}

TEST(Io, TruthRoundTrip) {
  const GmmTruth t = ref::two_component_truth();
  const GmmTruth back = io::truth_from_json(io::truth_to_json(t));
  EXPECT_EQ(back.weights, t.weights);
  EXPECT_EQ(back.means[1], t.means[1]);
  EXPECT_EQ(back.covariances[0], t.covariances[0]);
}

TEST(Io, SolverConfigRoundTrip) {
  SolverConfig cfg;
  cfg.num_components = 3;
  cfg.tol = 1e-7;
  cfg.max_iter = 55;
  cfg.init = InitMethod::kRandom;
  cfg.seed = 42;
  cfg.t[4] = 0.25;
  const SolverConfig back = io::solver_config_from_json(io::solver_config_to_json(cfg));
  EXPECT_EQ(back.num_components, 3);
  EXPECT_EQ(back.tol, 1e-7);
  EXPECT_EQ(back.max_iter, 55);
  EXPECT_EQ(back.init, InitMethod::kRandom);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.t, cfg.t);
}

TEST(Io, StateRoundTrip) {
  const Dataset d = simulate(ref::two_component_truth(), 60, 2);
  SolverConfig cfg;
  cfg.num_components = 2;
  const VariationalState s = fit(d, cfg);
  const io::json j = io::state_to_json(s);
  const VariationalState back = io::state_from_json(io::json::parse(j.dump()));
  EXPECT_LT((back.m - s.m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.converged, s.converged);
  EXPECT_EQ(back.iterations, s.iterations);
  EXPECT_EQ(j.at("layout"), s.layout->to_json());
}

TEST(Io, FormatDoubleRoundTrips) {
  for (const double v : {0.1, -1e-300, 123456.789, 1.0 / 3.0}) {
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
}

TEST(Io, ConfigHashIsStable) {
  const io::json a = io::json::parse(R"({"b": 1, "a": [1, 2]})");
  const io::json b = io::json::parse(R"({"a": [1, 2], "b": 1})");
  const io::json c = io::json::parse(R"({"a": [1, 2], "b": 2})");
  EXPECT_EQ(io::config_hash(a), io::config_hash(b));
  EXPECT_NE(io::config_hash(a), io::config_hash(c));
  EXPECT_EQ(io::hash_hex(0x1f).size(), 16u);
}

TEST(Io, SummaryRoundTrip) {
  PosteriorSummary s;
  s.labels = {"a", "b"};
  s.mean = Eigen::Vector2d(1, 2);
  s.sd = Eigen::Vector2d(0.1, 0.2);
  s.cov = Eigen::Matrix2d::Identity();
  s.ess = Eigen::Vector2d(600, 700);
  s.mean_se = s.sd.array() / s.ess.array().sqrt();
  s.sd_se = s.sd.array() / (2 * s.ess.array()).sqrt();
  s.draws = 1000;
  const PosteriorSummary back = io::summary_from_json(io::summary_to_json(s));
  EXPECT_EQ(back.labels, s.labels);
  EXPECT_EQ(back.ess, s.ess);
  EXPECT_EQ(back.draws, 1000);
}
