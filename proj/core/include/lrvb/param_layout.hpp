#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace lrvb {

// Number of unique entries of a symmetric P x P matrix.
constexpr int packed_size(int p) { return p * (p + 1) / 2; }

// Index of (a, b) in the packed upper triangle, row-major, a <= b enforced by
// swapping.  For P = 3 the order is (0,0) (0,1) (0,2) (1,1) (1,2) (2,2).
int packed_index(int a, int b, int p);

// Inverse of packed_index: the (a, b) pair, a <= b, at packed position i.
std::pair<int, int> packed_pair(int i, int p);

// Packs the upper triangle.  Throws ValidationError naming the first (a, b)
// with |M(a,b) - M(b,a)| > 1e-10 * max(1, |M(a,b)|, |M(b,a)|).
Eigen::VectorXd pack_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd unpack_symmetric(const Eigen::Ref<const Eigen::VectorXd>& v);

enum class BlockKind {
  kMu,
  kMuOuter,
  kLambda,
  kLogDetLambda,
  kLogPi,
  kX,
  kXOuter,
  kZ,
};

std::string_view block_kind_name(BlockKind kind);

struct Block {
  BlockKind kind;
  int index;  // component k or data point n; 0 for log_pi
  int offset;
  int length;

  std::string name() const;
};

/// Coordinate system of the stacked sufficient-statistic vector m.
///
/// Blocks are laid out as
///   alpha: mu[k], mu_outer[k] for each k; lambda[k], log_det_lambda[k] for
///          each k; log_pi
///   x:     x[n], x_outer[n] for each n (only when include_x)
///   z:     z[n] for each n
/// so the alpha / x / z partitions are contiguous slices.
class ParamLayout {
 public:
  ParamLayout(int k, int p, int n, bool include_x);

  int num_components() const { return k_; }
  int dim() const { return p_; }
  int num_points() const { return n_; }
  bool include_x() const { return include_x_; }

  int alpha_dim() const { return alpha_dim_; }
  int x_dim() const { return x_dim_; }
  int z_dim() const { return z_dim_; }
  int total_dim() const { return alpha_dim_ + x_dim_ + z_dim_; }

  int alpha_offset() const { return 0; }
  int x_offset() const { return alpha_dim_; }
  int z_offset() const { return alpha_dim_ + x_dim_; }

  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const Block& block(int id) const { return blocks_.at(static_cast<std::size_t>(id)); }
  const std::vector<Block>& blocks() const { return blocks_; }

  // Number of leading blocks that make up alpha.
  int num_alpha_blocks() const { return 4 * k_ + 1; }
  int first_x_block() const { return num_alpha_blocks(); }
  int first_z_block() const { return num_alpha_blocks() + (include_x_ ? 2 * n_ : 0); }

  // Block ids.  All throw std::out_of_range on bad indices.
  int mu_block(int k) const;
  int mu_outer_block(int k) const;
  int lambda_block(int k) const;
  int log_det_lambda_block(int k) const;
  int log_pi_block() const { return 4 * k_; }
  int x_block(int n) const;
  int x_outer_block(int n) const;
  int z_block(int n) const;

  // Scalar indices into m.
  int mu(int k, int a) const;
  int mu_outer(int k, int a, int b) const;
  int lambda(int k, int a, int b) const;
  int log_det_lambda(int k) const;
  int log_pi(int k) const;
  int x(int n, int a) const;
  int x_outer(int n, int a, int b) const;
  int z(int n, int k) const;

  // Lookup by name, e.g. "mu_outer[1]" or "log_pi".  Throws
  // std::invalid_argument for names outside the documented set.
  int block_id(std::string_view name) const;

  // Human-readable label of scalar index i, e.g. "lambda[0](0,1)".
  std::string label(int i) const;
  std::vector<std::string> alpha_labels() const;

  nlohmann::json to_json() const;

 private:
  int k_;
  int p_;
  int n_;
  bool include_x_;
  int alpha_dim_ = 0;
  int x_dim_ = 0;
  int z_dim_ = 0;
  std::vector<Block> blocks_;
};

ParamLayout build_layout(int k, int p, int n, bool include_x);

}  // namespace lrvb
