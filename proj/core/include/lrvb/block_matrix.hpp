#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lrvb/param_layout.hpp"

namespace lrvb {

/// Block-sparse square matrix over a ParamLayout's blocks.
///
/// Each stored block (r, c) is a dense layout.block(r).length x
/// layout.block(c).length matrix; absent blocks are exactly zero.  Values live
/// in one contiguous pool so per-point blocks do not each allocate.  Both
/// triangles are stored explicitly: set_symmetric_block writes (r, c) and the
/// transpose into (c, r).
class BlockMatrix {
 public:
  using ConstBlock = Eigen::Map<const Eigen::MatrixXd>;
  using MutableBlock = Eigen::Map<Eigen::MatrixXd>;

  // Densification refuses matrices larger than this.
  static constexpr int kMaxDenseDim = 20000;

  explicit BlockMatrix(std::shared_ptr<const ParamLayout> layout);

  const ParamLayout& layout() const { return *layout_; }
  std::shared_ptr<const ParamLayout> layout_ptr() const { return layout_; }
  int dim() const { return layout_->total_dim(); }

  // Returns a zero-initialised block, creating it if necessary.
  MutableBlock block_ref(int row_block, int col_block);
  void set_block(int row_block, int col_block, const Eigen::Ref<const Eigen::MatrixXd>& value);
  void set_symmetric_block(int row_block, int col_block,
                           const Eigen::Ref<const Eigen::MatrixXd>& value);

  bool has_block(int row_block, int col_block) const;
  // Throws std::out_of_range if the block is not stored.
  ConstBlock block(int row_block, int col_block) const;

  // Stored column blocks of one block row, in ascending column-block order.
  std::vector<std::pair<int, ConstBlock>> row(int row_block) const;

  std::size_t num_stored_blocks() const;
  std::size_t num_stored_values() const { return values_.size(); }

  // True if every stored block (r, c) has group_of_block[r] ==
  // group_of_block[c].  With an empty grouping, requires r == c.
  bool is_block_diagonal(std::span<const int> group_of_block = {}) const;

  // max |A - A^T| over stored entries, relative to max |A|.
  double asymmetry() const;

  // Dense copy of the full matrix; throws ValidationError above kMaxDenseDim.
  Eigen::MatrixXd to_dense() const;
  // Dense copy of the index range [begin, end) x [begin, end).
  Eigen::MatrixXd dense_range(int begin, int end) const;
  Eigen::SparseMatrix<double> to_sparse() const;

  // Number of to_dense() calls made process-wide.  Lets tests assert that a
  // code path never materialises a full matrix.
  static std::size_t dense_materialisations();

 private:
  struct Slot {
    int col_block;
    std::size_t offset;
  };

  const Slot* find(int row_block, int col_block) const;

  std::shared_ptr<const ParamLayout> layout_;
  std::vector<std::vector<Slot>> rows_;
  std::vector<double> values_;
};

}  // namespace lrvb
