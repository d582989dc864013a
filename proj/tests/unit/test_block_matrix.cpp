#include <gtest/gtest.h>

#include <memory>

#include "lrvb/block_matrix.hpp"
#include "lrvb/error.hpp"

using namespace lrvb;

namespace {
std::shared_ptr<const ParamLayout> layout(int k, int p, int n, bool x = false) {
  return std::make_shared<const ParamLayout>(k, p, n, x);
}
}  // namespace

TEST(BlockMatrix, StoresOnlyWhatIsSet) {
  BlockMatrix m(layout(2, 2, 3));
  EXPECT_EQ(m.num_stored_blocks(), 0u);
  Eigen::MatrixXd b(2, 3);
  b << 1, 2, 3, 4, 5, 6;
  m.set_symmetric_block(0, 1, b);
  EXPECT_EQ(m.num_stored_blocks(), 2u);
  EXPECT_TRUE(m.has_block(1, 0));
  EXPECT_EQ(Eigen::MatrixXd(m.block(1, 0)), b.transpose());
  EXPECT_THROW(m.block(0, 0), std::out_of_range);
  EXPECT_THROW(m.set_block(0, 0, b), ValidationError);
}

TEST(BlockMatrix, DenseAndSparseAgree) {
  BlockMatrix m(layout(1, 1, 2));
  m.set_block(0, 0, Eigen::MatrixXd::Constant(1, 1, 2.0));
  m.set_symmetric_block(0, m.layout().z_block(1), Eigen::MatrixXd::Constant(1, 1, -1.0));
  const Eigen::MatrixXd d = m.to_dense();
  EXPECT_EQ(d.rows(), m.dim());
  EXPECT_EQ(d(0, 0), 2.0);
  EXPECT_EQ(d(0, m.layout().z(1, 0)), -1.0);
  EXPECT_EQ(d(m.layout().z(1, 0), 0), -1.0);
  EXPECT_EQ(Eigen::MatrixXd(m.to_sparse()), d);
  EXPECT_EQ(m.asymmetry(), 0.0);
}

TEST(BlockMatrix, BlockDiagonalCheck) {
  BlockMatrix m(layout(1, 2, 2));
  const auto& l = m.layout();
  m.set_block(l.mu_block(0), l.mu_block(0), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_TRUE(m.is_block_diagonal());
  m.set_symmetric_block(l.mu_block(0), l.mu_outer_block(0), Eigen::MatrixXd::Zero(2, 3));
  EXPECT_FALSE(m.is_block_diagonal());
  std::vector<int> groups(static_cast<std::size_t>(l.num_blocks()));
  for (int b = 0; b < l.num_blocks(); ++b) groups[static_cast<std::size_t>(b)] = b;
  groups[static_cast<std::size_t>(l.mu_outer_block(0))] = groups[static_cast<std::size_t>(l.mu_block(0))];
  EXPECT_TRUE(m.is_block_diagonal(groups));
}

TEST(BlockMatrix, DensifyGuardAndCounter) {
  BlockMatrix big(layout(2, 2, 10001));
  EXPECT_GT(big.dim(), BlockMatrix::kMaxDenseDim);
  EXPECT_THROW(big.to_dense(), ValidationError);
  const auto before = BlockMatrix::dense_materialisations();
  BlockMatrix small(layout(1, 1, 2));
  small.to_dense();
  EXPECT_EQ(BlockMatrix::dense_materialisations(), before + 1);
  // Leading ranges stay available on large matrices.
  EXPECT_EQ(big.dense_range(0, 20).rows(), 20);
}
