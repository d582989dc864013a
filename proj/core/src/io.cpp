#include "lrvb/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "lrvb/error.hpp"

namespace lrvb::io {

namespace fs = std::filesystem;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::uint64_t config_hash(const json& j) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Quotes a field that holds a separator, quote or line break.
std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
  std::string out = "\"";
  for (const char ch : f) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

void write_csv(const fs::path& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& c : comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_field(header[i]);
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(r[i]);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  auto finish = [&] {
    if (!was_quoted) {
      while (!cell.empty() && cell.back() == ' ') cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    }
    out.push_back(cell);
    cell.clear();
    was_quoted = false;
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"' && cell.find_first_not_of(' ') == std::string::npos) {
      cell.clear();
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      finish();
    } else {
      cell += ch;
    }
  }
  finish();
  return out;
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      t.header = split(line);
      have_header = true;
    } else {
      t.rows.push_back(split(line));
    }
  }
  if (!have_header) throw ValidationError(path.string() + " has no header");
  return t;
}

Dataset read_dataset(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto p = static_cast<Eigen::Index>(t.header.size());
  if (p < 1) throw ValidationError(path.string() + ": no columns");
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(t.rows.size()), p);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (static_cast<Eigen::Index>(t.rows[i].size()) != p) {
      throw ValidationError(path.string() + ": row " + std::to_string(i + 1) +
                            " has the wrong number of fields");
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      d.x(static_cast<Eigen::Index>(i), j) = parse_double(t.rows[i][static_cast<std::size_t>(j)], path, i + 1);
    }
  }
  d.validate();
  return d;
}

void write_dataset(const fs::path& path, const Dataset& data, const std::vector<std::string>& comments) {
  std::vector<std::string> header;
  for (int j = 0; j < data.dim(); ++j) header.push_back("x" + std::to_string(j + 1));
  std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(data.num_points()));
  for (int i = 0; i < data.num_points(); ++i) {
    for (int j = 0; j < data.dim(); ++j) rows[static_cast<std::size_t>(i)].push_back(format_double(data.x(i, j)));
  }
  write_csv(path, comments, header, rows);
}

void write_assignments(const fs::path& path, const std::vector<int>& labels,
                       const std::vector<std::string>& comments) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rows.push_back({std::to_string(i), std::to_string(labels[i])});
  }
  write_csv(path, comments, {"n", "component"}, rows);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& r = j.at(static_cast<std::size_t>(i));
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols) {
      throw ValidationError("matrix rows have unequal lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("expected a vector");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

namespace {

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

GmmTruth truth_from_json(const json& j) {
  return guarded("truth", [&] {
    GmmTruth t;
    t.weights = vector_from_json(j.at("weights"));
    for (const auto& m : j.at("means")) t.means.push_back(vector_from_json(m));
    for (const auto& c : j.at("covariances")) t.covariances.push_back(matrix_from_json(c));
    t.seed = j.value("seed", std::uint64_t{0});
    t.validate();
    return t;
  });
}

json truth_to_json(const GmmTruth& t) {
  json j;
  j["weights"] = vector_to_json(t.weights);
  j["means"] = json::array();
  for (const auto& m : t.means) j["means"].push_back(vector_to_json(m));
  j["covariances"] = json::array();
  for (const auto& c : t.covariances) j["covariances"].push_back(matrix_to_json(c));
  j["seed"] = t.seed;
  return j;
}

SolverConfig solver_config_from_json(const json& j) {
  return guarded("solver config", [&] {
    SolverConfig c;
    c.num_components = j.value("K", 0);
    c.tol = j.value("tol", c.tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.init = parse_init(j.value("init", std::string("kmeans")));
    c.seed = j.value("seed", std::uint64_t{0});
    c.include_x = j.value("include_x", false);
    if (j.contains("truth")) c.truth = truth_from_json(j.at("truth"));
    if (j.contains("t")) {
      for (const auto& [key, value] : j.at("t").items()) {
        int idx = 0;
        const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
        if (ec != std::errc() || ptr != key.data() + key.size()) {
          throw ValidationError("solver config: perturbation key '" + key + "' is not an index");
        }
        c.t[idx] = value.get<double>();
      }
    }
    if (c.init == InitMethod::kTruth && c.num_components == 0 && c.truth) {
      c.num_components = c.truth->num_components();
    }
    c.validate();
    return c;
  });
}

json solver_config_to_json(const SolverConfig& c) {
  json j;
  j["K"] = c.num_components;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["init"] = std::string(init_name(c.init));
  j["seed"] = c.seed;
  j["include_x"] = c.include_x;
  if (c.truth) j["truth"] = truth_to_json(*c.truth);
  if (!c.t.empty()) {
    json t = json::object();
    for (const auto& [i, v] : c.t) t[std::to_string(i)] = v;
    j["t"] = t;
  }
  return j;
}

json factors_to_json(const FactorParams& f) {
  json j;
  j["mu"] = json::array();
  for (const auto& m : f.mu) j["mu"].push_back({{"mean", vector_to_json(m.mean)}, {"cov", matrix_to_json(m.cov)}});
  j["lambda"] = json::array();
  for (const auto& w : f.lambda) j["lambda"].push_back({{"dof", w.dof}, {"scale", matrix_to_json(w.scale)}});
  j["pi"] = {{"concentration", vector_to_json(f.pi.concentration)}};
  j["responsibilities"] = matrix_to_json(f.resp);
  return j;
}

FactorParams factors_from_json(const json& j) {
  return guarded("factors", [&] {
    FactorParams f;
    for (const auto& m : j.at("mu")) {
      f.mu.push_back({vector_from_json(m.at("mean")), matrix_from_json(m.at("cov"))});
    }
    for (const auto& w : j.at("lambda")) {
      f.lambda.push_back({w.at("dof").get<double>(), matrix_from_json(w.at("scale"))});
    }
    f.pi.concentration = vector_from_json(j.at("pi").at("concentration"));
    f.resp = matrix_from_json(j.at("responsibilities"));
    try {
      f.validate();
    } catch (const NumericalError& e) {
      throw ValidationError(e.what());
    }
    return f;
  });
}

json state_to_json(const VariationalState& s) {
  json j;
  j["layout"] = s.layout->to_json();
  j["factors"] = factors_to_json(s.factors);
  j["m"] = vector_to_json(s.m);
  j["convergence"] = {{"converged", s.converged},
                      {"iterations", s.iterations},
                      {"max_change", s.max_change}};
  return j;
}

VariationalState state_from_json(const json& j) {
  return guarded("state", [&] {
    VariationalState s;
    s.factors = factors_from_json(j.at("factors"));
    s.layout = std::make_shared<const ParamLayout>(s.factors.num_components(), s.factors.dim(),
                                                   s.factors.num_points(), false);
    s.m = factor_mean_params(s.factors, *s.layout);
    const json& c = j.at("convergence");
    s.converged = c.at("converged").get<bool>();
    s.iterations = c.at("iterations").get<int>();
    s.max_change = c.at("max_change").is_number() ? c.at("max_change").get<double>()
                                                  : std::numeric_limits<double>::infinity();
    return s;
  });
}

json summary_to_json(const PosteriorSummary& s) {
  json j;
  j["labels"] = s.labels;
  j["mean"] = vector_to_json(s.mean);
  j["sd"] = vector_to_json(s.sd);
  j["cov"] = matrix_to_json(s.cov);
  j["ess"] = vector_to_json(s.ess);
  j["mean_se"] = vector_to_json(s.mean_se);
  j["sd_se"] = vector_to_json(s.sd_se);
  j["under_sampled"] = s.under_sampled;
  j["draws"] = s.draws;
  j["min_ess"] = s.min_ess();
  return j;
}

PosteriorSummary summary_from_json(const json& j) {
  return guarded("posterior summary", [&] {
    PosteriorSummary s;
    s.labels = j.at("labels").get<std::vector<std::string>>();
    s.mean = vector_from_json(j.at("mean"));
    s.sd = vector_from_json(j.at("sd"));
    s.cov = matrix_from_json(j.at("cov"));
    s.ess = vector_from_json(j.at("ess"));
    s.mean_se = vector_from_json(j.at("mean_se"));
    s.sd_se = vector_from_json(j.at("sd_se"));
    s.under_sampled = j.at("under_sampled").get<std::vector<std::string>>();
    s.draws = j.at("draws").get<int>();
    const auto d = static_cast<Eigen::Index>(s.labels.size());
    if (s.mean.size() != d || s.sd.size() != d || s.cov.rows() != d || s.cov.cols() != d ||
        s.ess.size() != d) {
      throw ValidationError("posterior summary: inconsistent dimensions");
    }
    return s;
  });
}

}  // namespace lrvb::io
