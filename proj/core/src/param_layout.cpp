#include "lrvb/param_layout.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "lrvb/error.hpp"

namespace lrvb {

int packed_index(int a, int b, int p) {
  if (a > b) std::swap(a, b);
  if (a < 0 || b >= p) throw std::out_of_range("packed_index: (a, b) outside matrix");
  // Rows 0..a-1 contribute p, p-1, ..., p-a+1 entries.
  return a * p - a * (a - 1) / 2 + (b - a);
}

std::pair<int, int> packed_pair(int i, int p) {
  if (i < 0 || i >= packed_size(p)) throw std::out_of_range("packed_pair: index out of range");
  int a = 0;
  int row_len = p;
  while (i >= row_len) {
    i -= row_len;
    ++a;
    --row_len;
  }
  return {a, a + i};
}

Eigen::VectorXd pack_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols()) throw ValidationError("pack_symmetric: matrix is not square");
  const int p = static_cast<int>(m.rows());
  Eigen::VectorXd out(packed_size(p));
  int i = 0;
  for (int a = 0; a < p; ++a) {
    for (int b = a; b < p; ++b) {
      const double u = m(a, b);
      const double l = m(b, a);
      const double scale = std::max({1.0, std::abs(u), std::abs(l)});
      if (!(std::abs(u - l) <= 1e-10 * scale)) {
        throw ValidationError("pack_symmetric: matrix not symmetric at (" + std::to_string(a) + ", " +
                              std::to_string(b) + ")");
      }
      out(i++) = u;
    }
  }
  return out;
}

Eigen::MatrixXd unpack_symmetric(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const auto len = static_cast<double>(v.size());
  const int p = static_cast<int>(std::lround((std::sqrt(1.0 + 8.0 * len) - 1.0) / 2.0));
  if (packed_size(p) != v.size()) {
    throw ValidationError("unpack_symmetric: length " + std::to_string(v.size()) +
                          " is not a triangular number");
  }
  Eigen::MatrixXd m(p, p);
  int i = 0;
  for (int a = 0; a < p; ++a) {
    for (int b = a; b < p; ++b) {
      m(a, b) = v(i);
      m(b, a) = v(i);
      ++i;
    }
  }
  return m;
}

std::string_view block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::kMu: return "mu";
    case BlockKind::kMuOuter: return "mu_outer";
    case BlockKind::kLambda: return "lambda";
    case BlockKind::kLogDetLambda: return "log_det_lambda";
    case BlockKind::kLogPi: return "log_pi";
    case BlockKind::kX: return "x";
    case BlockKind::kXOuter: return "x_outer";
    case BlockKind::kZ: return "z";
  }
  return "?";
}

std::string Block::name() const {
  if (kind == BlockKind::kLogPi) return "log_pi";
  return std::string(block_kind_name(kind)) + "[" + std::to_string(index) + "]";
}

ParamLayout::ParamLayout(int k, int p, int n, bool include_x)
    : k_(k), p_(p), n_(n), include_x_(include_x) {
  if (k < 1 || p < 1 || n < 1) {
    throw ValidationError("build_layout: K, P and N must all be >= 1 (got K=" + std::to_string(k) +
                          ", P=" + std::to_string(p) + ", N=" + std::to_string(n) + ")");
  }
  const int ps = packed_size(p);
  int offset = 0;
  auto add = [&](BlockKind kind, int index, int length) {
    blocks_.push_back(Block{kind, index, offset, length});
    offset += length;
  };
  blocks_.reserve(static_cast<std::size_t>(4 * k + 1 + (include_x ? 3 : 1) * n));
  for (int c = 0; c < k; ++c) {
    add(BlockKind::kMu, c, p);
    add(BlockKind::kMuOuter, c, ps);
  }
  for (int c = 0; c < k; ++c) {
    add(BlockKind::kLambda, c, ps);
    add(BlockKind::kLogDetLambda, c, 1);
  }
  add(BlockKind::kLogPi, 0, k);
  alpha_dim_ = offset;
  if (include_x) {
    for (int i = 0; i < n; ++i) {
      add(BlockKind::kX, i, p);
      add(BlockKind::kXOuter, i, ps);
    }
  }
  x_dim_ = offset - alpha_dim_;
  for (int i = 0; i < n; ++i) add(BlockKind::kZ, i, k);
  z_dim_ = offset - alpha_dim_ - x_dim_;
}

namespace {
void check_range(int v, int hi, const char* what) {
  if (v < 0 || v >= hi) throw std::out_of_range(std::string(what) + " index out of range");
}
}  // namespace

int ParamLayout::mu_block(int k) const {
  check_range(k, k_, "component");
  return 2 * k;
}
int ParamLayout::mu_outer_block(int k) const {
  check_range(k, k_, "component");
  return 2 * k + 1;
}
int ParamLayout::lambda_block(int k) const {
  check_range(k, k_, "component");
  return 2 * k_ + 2 * k;
}
int ParamLayout::log_det_lambda_block(int k) const {
  check_range(k, k_, "component");
  return 2 * k_ + 2 * k + 1;
}
int ParamLayout::x_block(int n) const {
  if (!include_x_) throw std::out_of_range("layout has no x blocks");
  check_range(n, n_, "data point");
  return first_x_block() + 2 * n;
}
int ParamLayout::x_outer_block(int n) const {
  if (!include_x_) throw std::out_of_range("layout has no x blocks");
  check_range(n, n_, "data point");
  return first_x_block() + 2 * n + 1;
}
int ParamLayout::z_block(int n) const {
  check_range(n, n_, "data point");
  return first_z_block() + n;
}

int ParamLayout::mu(int k, int a) const {
  check_range(a, p_, "coordinate");
  return blocks_[static_cast<std::size_t>(mu_block(k))].offset + a;
}
int ParamLayout::mu_outer(int k, int a, int b) const {
  return blocks_[static_cast<std::size_t>(mu_outer_block(k))].offset + packed_index(a, b, p_);
}
int ParamLayout::lambda(int k, int a, int b) const {
  return blocks_[static_cast<std::size_t>(lambda_block(k))].offset + packed_index(a, b, p_);
}
int ParamLayout::log_det_lambda(int k) const {
  return blocks_[static_cast<std::size_t>(log_det_lambda_block(k))].offset;
}
int ParamLayout::log_pi(int k) const {
  check_range(k, k_, "component");
  return blocks_[static_cast<std::size_t>(log_pi_block())].offset + k;
}
int ParamLayout::x(int n, int a) const {
  check_range(a, p_, "coordinate");
  return blocks_[static_cast<std::size_t>(x_block(n))].offset + a;
}
int ParamLayout::x_outer(int n, int a, int b) const {
  return blocks_[static_cast<std::size_t>(x_outer_block(n))].offset + packed_index(a, b, p_);
}
int ParamLayout::z(int n, int k) const {
  check_range(k, k_, "component");
  return blocks_[static_cast<std::size_t>(z_block(n))].offset + k;
}

int ParamLayout::block_id(std::string_view name) const {
  auto fail = [&]() -> int {
    throw std::invalid_argument("unknown block name '" + std::string(name) + "'");
  };
  if (name == "log_pi") return log_pi_block();
  const auto open = name.find('[');
  if (open == std::string_view::npos || name.back() != ']') return fail();
  const auto base = name.substr(0, open);
  const auto digits = name.substr(open + 1, name.size() - open - 2);
  int idx = -1;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return fail();
  try {
    if (base == "mu") return mu_block(idx);
    if (base == "mu_outer") return mu_outer_block(idx);
    if (base == "lambda") return lambda_block(idx);
    if (base == "log_det_lambda") return log_det_lambda_block(idx);
    if (base == "x") return x_block(idx);
    if (base == "x_outer") return x_outer_block(idx);
    if (base == "z") return z_block(idx);
  } catch (const std::out_of_range&) {
    return fail();
  }
  return fail();
}

std::string ParamLayout::label(int i) const {
  if (i < 0 || i >= total_dim()) throw std::out_of_range("label: index out of range");
  // Blocks are sorted by offset.
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), i,
                             [](int v, const Block& b) { return v < b.offset; });
  const Block& b = *(it - 1);
  const int local = i - b.offset;
  switch (b.kind) {
    case BlockKind::kMu:
    case BlockKind::kX:
    case BlockKind::kZ:
      return b.name() + "(" + std::to_string(local) + ")";
    case BlockKind::kMuOuter:
    case BlockKind::kLambda:
    case BlockKind::kXOuter: {
      const auto [a, c] = packed_pair(local, p_);
      return b.name() + "(" + std::to_string(a) + "," + std::to_string(c) + ")";
    }
    case BlockKind::kLogDetLambda:
      return b.name();
    case BlockKind::kLogPi:
      return "log_pi(" + std::to_string(local) + ")";
  }
  return b.name();
}

std::vector<std::string> ParamLayout::alpha_labels() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(alpha_dim_));
  for (int i = 0; i < alpha_dim_; ++i) out.push_back(label(i));
  return out;
}

nlohmann::json ParamLayout::to_json() const {
  nlohmann::json j;
  j["K"] = k_;
  j["P"] = p_;
  j["N"] = n_;
  j["include_x"] = include_x_;
  j["alpha_dim"] = alpha_dim_;
  j["x_dim"] = x_dim_;
  j["z_dim"] = z_dim_;
  j["packing"] = "row-major upper triangle, a <= b";
  auto alpha = nlohmann::json::array();
  for (int b = 0; b < num_alpha_blocks(); ++b) {
    const Block& blk = blocks_[static_cast<std::size_t>(b)];
    alpha.push_back({{"name", blk.name()}, {"offset", blk.offset}, {"length", blk.length}});
  }
  j["blocks"] = alpha;
  // Per-point families are described by their first offset and stride rather
  // than enumerated, so large-N layouts stay small on disk.
  auto per_point = nlohmann::json::array();
  const int ps = packed_size(p_);
  if (include_x_) {
    per_point.push_back({{"name", "x[n]"}, {"offset0", x_offset()}, {"stride", p_ + ps},
                         {"length", p_}, {"count", n_}});
    per_point.push_back({{"name", "x_outer[n]"}, {"offset0", x_offset() + p_},
                         {"stride", p_ + ps}, {"length", ps}, {"count", n_}});
  }
  per_point.push_back({{"name", "z[n]"}, {"offset0", z_offset()}, {"stride", k_},
                       {"length", k_}, {"count", n_}});
  j["per_point_blocks"] = per_point;
  return j;
}

ParamLayout build_layout(int k, int p, int n, bool include_x) {
  return ParamLayout(k, p, n, include_x);
}

}  // namespace lrvb
