#include "lrvb/block_matrix.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lrvb/error.hpp"

namespace lrvb {

namespace {
std::atomic<std::size_t> g_dense_count{0};
}

BlockMatrix::BlockMatrix(std::shared_ptr<const ParamLayout> layout) : layout_(std::move(layout)) {
  if (!layout_) throw ValidationError("BlockMatrix: null layout");
  rows_.resize(static_cast<std::size_t>(layout_->num_blocks()));
}

const BlockMatrix::Slot* BlockMatrix::find(int row_block, int col_block) const {
  const auto& r = rows_.at(static_cast<std::size_t>(row_block));
  auto it = std::lower_bound(r.begin(), r.end(), col_block,
                             [](const Slot& s, int c) { return s.col_block < c; });
  if (it == r.end() || it->col_block != col_block) return nullptr;
  return &*it;
}

BlockMatrix::MutableBlock BlockMatrix::block_ref(int row_block, int col_block) {
  const Block& rb = layout_->block(row_block);
  const Block& cb = layout_->block(col_block);
  auto& r = rows_[static_cast<std::size_t>(row_block)];
  auto it = std::lower_bound(r.begin(), r.end(), col_block,
                             [](const Slot& s, int c) { return s.col_block < c; });
  std::size_t offset;
  if (it != r.end() && it->col_block == col_block) {
    offset = it->offset;
  } else {
    offset = values_.size();
    values_.resize(values_.size() + static_cast<std::size_t>(rb.length) * cb.length, 0.0);
    r.insert(it, Slot{col_block, offset});
  }
  return MutableBlock(values_.data() + offset, rb.length, cb.length);
}

void BlockMatrix::set_block(int row_block, int col_block,
                            const Eigen::Ref<const Eigen::MatrixXd>& value) {
  const Block& rb = layout_->block(row_block);
  const Block& cb = layout_->block(col_block);
  if (value.rows() != rb.length || value.cols() != cb.length) {
    throw ValidationError("set_block: shape mismatch for (" + rb.name() + ", " + cb.name() + ")");
  }
  block_ref(row_block, col_block) = value;
}

void BlockMatrix::set_symmetric_block(int row_block, int col_block,
                                      const Eigen::Ref<const Eigen::MatrixXd>& value) {
  set_block(row_block, col_block, value);
  if (row_block != col_block) {
    set_block(col_block, row_block, value.transpose());
  }
}

bool BlockMatrix::has_block(int row_block, int col_block) const {
  return find(row_block, col_block) != nullptr;
}

BlockMatrix::ConstBlock BlockMatrix::block(int row_block, int col_block) const {
  const Slot* s = find(row_block, col_block);
  if (s == nullptr) {
    throw std::out_of_range("block (" + layout_->block(row_block).name() + ", " +
                            layout_->block(col_block).name() + ") is not stored");
  }
  return ConstBlock(values_.data() + s->offset, layout_->block(row_block).length,
                    layout_->block(col_block).length);
}

std::vector<std::pair<int, BlockMatrix::ConstBlock>> BlockMatrix::row(int row_block) const {
  std::vector<std::pair<int, ConstBlock>> out;
  const auto& r = rows_.at(static_cast<std::size_t>(row_block));
  out.reserve(r.size());
  const int rlen = layout_->block(row_block).length;
  for (const Slot& s : r) {
    out.emplace_back(s.col_block,
                     ConstBlock(values_.data() + s.offset, rlen, layout_->block(s.col_block).length));
  }
  return out;
}

std::size_t BlockMatrix::num_stored_blocks() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

bool BlockMatrix::is_block_diagonal(std::span<const int> group_of_block) const {
  if (!group_of_block.empty() && group_of_block.size() != rows_.size()) {
    throw ValidationError("is_block_diagonal: grouping has the wrong length");
  }
  for (std::size_t rb = 0; rb < rows_.size(); ++rb) {
    for (const Slot& s : rows_[rb]) {
      const auto cb = static_cast<std::size_t>(s.col_block);
      const bool same = group_of_block.empty() ? cb == rb : group_of_block[cb] == group_of_block[rb];
      if (!same) return false;
    }
  }
  return true;
}

double BlockMatrix::asymmetry() const {
  double max_abs = 0.0;
  double max_diff = 0.0;
  for (int rb = 0; rb < static_cast<int>(rows_.size()); ++rb) {
    for (const auto& [cb, m] : row(rb)) {
      max_abs = std::max(max_abs, m.cwiseAbs().maxCoeff());
      if (has_block(cb, rb)) {
        max_diff = std::max(max_diff, (m - block(cb, rb).transpose()).cwiseAbs().maxCoeff());
      } else {
        max_diff = std::max(max_diff, m.cwiseAbs().maxCoeff());
      }
    }
  }
  return max_abs > 0.0 ? max_diff / max_abs : 0.0;
}

Eigen::MatrixXd BlockMatrix::to_dense() const {
  if (dim() > kMaxDenseDim) {
    throw ValidationError("BlockMatrix::to_dense: dimension " + std::to_string(dim()) +
                          " exceeds the densification limit of " + std::to_string(kMaxDenseDim));
  }
  ++g_dense_count;
  return dense_range(0, dim());
}

Eigen::MatrixXd BlockMatrix::dense_range(int begin, int end) const {
  if (begin < 0 || end > dim() || begin > end) throw std::out_of_range("dense_range: bad range");
  if (end - begin > kMaxDenseDim) {
    throw ValidationError("BlockMatrix::dense_range: range exceeds the densification limit");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(end - begin, end - begin);
  for (int rb = 0; rb < static_cast<int>(rows_.size()); ++rb) {
    const Block& r = layout_->block(rb);
    if (r.offset + r.length <= begin || r.offset >= end) continue;
    for (const auto& [cb, m] : row(rb)) {
      const Block& c = layout_->block(cb);
      if (c.offset + c.length <= begin || c.offset >= end) continue;
      // Blocks never straddle the alpha / x / z boundaries, but clip anyway.
      for (int j = 0; j < c.length; ++j) {
        const int gj = c.offset + j;
        if (gj < begin || gj >= end) continue;
        for (int i = 0; i < r.length; ++i) {
          const int gi = r.offset + i;
          if (gi < begin || gi >= end) continue;
          out(gi - begin, gj - begin) = m(i, j);
        }
      }
    }
  }
  return out;
}

Eigen::SparseMatrix<double> BlockMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(values_.size());
  for (int rb = 0; rb < static_cast<int>(rows_.size()); ++rb) {
    const Block& r = layout_->block(rb);
    for (const auto& [cb, m] : row(rb)) {
      const Block& c = layout_->block(cb);
      for (int j = 0; j < c.length; ++j) {
        for (int i = 0; i < r.length; ++i) {
          if (m(i, j) != 0.0) trips.emplace_back(r.offset + i, c.offset + j, m(i, j));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> s(dim(), dim());
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

std::size_t BlockMatrix::dense_materialisations() { return g_dense_count.load(); }

}  // namespace lrvb
