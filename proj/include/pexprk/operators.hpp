#pragma once

// Matrix-free linear operators. Every operator is immutable after construction
// and is shared through OperatorPtr; apply() checks the dimension and bumps a
// per-operator matvec counter.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace pexprk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class OperatorKind { dense, sparse_stencil, diagonal, block_diagonal, permuted_sub_block, embedded, zero, sum, scaled };

std::string_view to_string(OperatorKind kind);

class LinearOperator {
 public:
  explicit LinearOperator(Index dim);
  virtual ~LinearOperator() = default;
  LinearOperator(const LinearOperator&) = delete;
  LinearOperator& operator=(const LinearOperator&) = delete;

  Index dim() const { return dim_; }
  virtual OperatorKind kind() const = 0;

  /// out = op * v. Throws ContractViolation on a length mismatch.
  void apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const;
  Vector apply(const Eigen::Ref<const Vector>& v) const;

  std::uint64_t matvecs() const { return matvecs_.load(std::memory_order_relaxed); }

  /// Dense copy, built column by column unless a kind knows better. Diagnostics only.
  virtual Matrix to_dense() const;

 protected:
  virtual void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const = 0;

 private:
  Index dim_;
  mutable std::atomic<std::uint64_t> matvecs_{0};
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix m);
  OperatorKind kind() const override { return OperatorKind::dense; }
  const Matrix& matrix() const { return m_; }
  Matrix to_dense() const override { return m_; }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  Matrix m_;
};

class SparseOperator final : public LinearOperator {
 public:
  explicit SparseOperator(SparseRowMatrix m);
  OperatorKind kind() const override { return OperatorKind::sparse_stencil; }
  const SparseRowMatrix& matrix() const { return m_; }
  Matrix to_dense() const override { return Matrix(m_); }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  SparseRowMatrix m_;
};

class DiagonalOperator final : public LinearOperator {
 public:
  explicit DiagonalOperator(Vector d);
  OperatorKind kind() const override { return OperatorKind::diagonal; }
  const Vector& diagonal() const { return d_; }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  Vector d_;
};

class ZeroOperator final : public LinearOperator {
 public:
  explicit ZeroOperator(Index dim) : LinearOperator(dim) {}
  OperatorKind kind() const override { return OperatorKind::zero; }

 private:
  void do_apply(const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) const override { out.setZero(); }
};

class BlockDiagOp final : public LinearOperator {
 public:
  explicit BlockDiagOp(std::vector<OperatorPtr> blocks);
  OperatorKind kind() const override { return OperatorKind::block_diagonal; }
  std::span<const OperatorPtr> blocks() const { return blocks_; }
  std::span<const Index> offsets() const { return offsets_; }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  std::vector<OperatorPtr> blocks_;
  std::vector<Index> offsets_;
};

/// Principal sub-block (P^T J P)[range, range] applied without forming P^T J P.
/// perm[i] is the original index placed at permuted position i.
class PermutedSubBlock final : public LinearOperator {
 public:
  PermutedSubBlock(OperatorPtr base, std::vector<Index> perm, Index first, Index last);
  OperatorKind kind() const override { return OperatorKind::permuted_sub_block; }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  OperatorPtr base_;
  std::vector<Index> indices_;  // original indices of the retained rows, in permuted order
};

/// An operator of dimension k acting on selected coordinates of a larger space;
/// all other coordinates map to zero.
class EmbeddedOperator final : public LinearOperator {
 public:
  EmbeddedOperator(OperatorPtr inner, std::vector<Index> indices, Index dim);
  OperatorKind kind() const override { return OperatorKind::embedded; }
  const OperatorPtr& inner() const { return inner_; }
  std::span<const Index> indices() const { return indices_; }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  OperatorPtr inner_;
  std::vector<Index> indices_;
};

class SumOperator final : public LinearOperator {
 public:
  explicit SumOperator(std::vector<OperatorPtr> terms);
  OperatorKind kind() const override { return OperatorKind::sum; }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  std::vector<OperatorPtr> terms_;
};

class ScaledOperator final : public LinearOperator {
 public:
  ScaledOperator(double scale, OperatorPtr inner);
  OperatorKind kind() const override { return OperatorKind::scaled; }

 private:
  void do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const override;
  double scale_;
  OperatorPtr inner_;
};

// Factories.
OperatorPtr dense(Matrix m);
OperatorPtr sparse(SparseRowMatrix m);
OperatorPtr diagonal(Vector d);
OperatorPtr zero(Index dim);
OperatorPtr block_diagonal(std::vector<OperatorPtr> blocks);
OperatorPtr sum(std::vector<OperatorPtr> terms);
OperatorPtr sum(OperatorPtr a, OperatorPtr b);
OperatorPtr scaled(double scale, OperatorPtr inner);
OperatorPtr permuted_subblock(OperatorPtr base, std::vector<Index> perm, Index first, Index last);
OperatorPtr embedded(OperatorPtr inner, std::vector<Index> indices, Index dim);

/// Five-point Laplacian on an n x n periodic grid over the unit square with
/// spacing 1/n, scaled by d / spacing^2. Node (ix, iy) lives at iy * n + ix.
SparseRowMatrix laplacian_2d_periodic_matrix(Index n, double d);
OperatorPtr laplacian_2d_periodic(Index n, double d);

bool is_zero(const LinearOperator& op);

}  // namespace pexprk
