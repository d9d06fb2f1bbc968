#include "pexprk/operators.hpp"

#include <algorithm>
#include <string>

#include "pexprk/errors.hpp"

namespace pexprk {

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::dense: return "dense";
    case OperatorKind::sparse_stencil: return "sparse-stencil";
    case OperatorKind::diagonal: return "diagonal";
    case OperatorKind::block_diagonal: return "block-diagonal";
    case OperatorKind::permuted_sub_block: return "permuted-sub-block";
    case OperatorKind::embedded: return "embedded";
    case OperatorKind::zero: return "zero";
    case OperatorKind::sum: return "sum";
    case OperatorKind::scaled: return "scaled";
  }
  return "unknown";
}

LinearOperator::LinearOperator(Index dim) : dim_(dim) {
  if (dim < 0) throw ContractViolation("LinearOperator: negative dimension");
}

void LinearOperator::apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  if (v.size() != dim_ || out.size() != dim_) {
    throw ContractViolation("LinearOperator::apply: length " + std::to_string(v.size()) + " does not match dimension " +
                            std::to_string(dim_));
  }
  matvecs_.fetch_add(1, std::memory_order_relaxed);
  do_apply(v, out);
}

Vector LinearOperator::apply(const Eigen::Ref<const Vector>& v) const {
  Vector out(dim_);
  apply(v, out);
  return out;
}

Matrix LinearOperator::to_dense() const {
  Matrix m(dim_, dim_);
  Vector unit = Vector::Zero(dim_);
  Vector col(dim_);
  for (Index j = 0; j < dim_; ++j) {
    unit(j) = 1.0;
    do_apply(unit, col);
    m.col(j) = col;
    unit(j) = 0.0;
  }
  return m;
}

DenseOperator::DenseOperator(Matrix m) : LinearOperator(m.rows()), m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw ContractViolation("DenseOperator: matrix must be square");
}

void DenseOperator::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  out.noalias() = m_ * v;
}

SparseOperator::SparseOperator(SparseRowMatrix m) : LinearOperator(m.rows()), m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw ContractViolation("SparseOperator: matrix must be square");
  m_.makeCompressed();
}

void SparseOperator::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  out.noalias() = m_ * v;
}

DiagonalOperator::DiagonalOperator(Vector d) : LinearOperator(d.size()), d_(std::move(d)) {}

void DiagonalOperator::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  out = d_.cwiseProduct(v);
}

namespace {

Index total_dim(const std::vector<OperatorPtr>& blocks) {
  Index n = 0;
  for (const auto& b : blocks) {
    if (!b) throw ContractViolation("block_diagonal: null block");
    n += b->dim();
  }
  return n;
}

Index common_dim(const std::vector<OperatorPtr>& terms) {
  if (terms.empty()) throw ContractViolation("sum: no terms");
  for (const auto& t : terms) {
    if (!t) throw ContractViolation("sum: null term");
    if (t->dim() != terms.front()->dim()) throw ContractViolation("sum: dimension mismatch between terms");
  }
  return terms.front()->dim();
}

}  // namespace

BlockDiagOp::BlockDiagOp(std::vector<OperatorPtr> blocks) : LinearOperator(total_dim(blocks)), blocks_(std::move(blocks)) {
  offsets_.reserve(blocks_.size() + 1);
  Index offset = 0;
  for (const auto& b : blocks_) {
    offsets_.push_back(offset);
    offset += b->dim();
  }
  offsets_.push_back(offset);
}

void BlockDiagOp::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Index n = blocks_[b]->dim();
    blocks_[b]->apply(v.segment(offsets_[b], n), out.segment(offsets_[b], n));
  }
}

PermutedSubBlock::PermutedSubBlock(OperatorPtr base, std::vector<Index> perm, Index first, Index last)
    : LinearOperator(last - first), base_(std::move(base)) {
  if (!base_) throw ContractViolation("permuted_subblock: null operator");
  const Index n = base_->dim();
  if (static_cast<Index>(perm.size()) != n) throw ContractViolation("permuted_subblock: permutation length differs from dimension");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Index p : perm) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) throw ContractViolation("permuted_subblock: not a permutation");
    seen[static_cast<std::size_t>(p)] = 1;
  }
  if (first < 0 || last > n || first > last) throw ContractViolation("permuted_subblock: range out of bounds");
  indices_.assign(perm.begin() + first, perm.begin() + last);
}

void PermutedSubBlock::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  Vector full = Vector::Zero(base_->dim());
  for (std::size_t i = 0; i < indices_.size(); ++i) full(indices_[i]) = v(static_cast<Index>(i));
  const Vector image = base_->apply(full);
  for (std::size_t i = 0; i < indices_.size(); ++i) out(static_cast<Index>(i)) = image(indices_[i]);
}

EmbeddedOperator::EmbeddedOperator(OperatorPtr inner, std::vector<Index> indices, Index dim)
    : LinearOperator(dim), inner_(std::move(inner)), indices_(std::move(indices)) {
  if (!inner_) throw ContractViolation("embedded: null operator");
  if (static_cast<Index>(indices_.size()) != inner_->dim()) throw ContractViolation("embedded: index count differs from inner dimension");
  for (Index i : indices_) {
    if (i < 0 || i >= dim) throw ContractViolation("embedded: index out of range");
  }
}

void EmbeddedOperator::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  Vector local(inner_->dim());
  for (std::size_t i = 0; i < indices_.size(); ++i) local(static_cast<Index>(i)) = v(indices_[i]);
  const Vector image = inner_->apply(local);
  out.setZero();
  for (std::size_t i = 0; i < indices_.size(); ++i) out(indices_[i]) = image(static_cast<Index>(i));
}

SumOperator::SumOperator(std::vector<OperatorPtr> terms) : LinearOperator(common_dim(terms)), terms_(std::move(terms)) {}

void SumOperator::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  terms_.front()->apply(v, out);
  Vector tmp(dim());
  for (std::size_t i = 1; i < terms_.size(); ++i) {
    terms_[i]->apply(v, tmp);
    out += tmp;
  }
}

ScaledOperator::ScaledOperator(double scale, OperatorPtr inner)
    : LinearOperator(inner ? inner->dim() : 0), scale_(scale), inner_(std::move(inner)) {
  if (!inner_) throw ContractViolation("scaled: null operator");
}

void ScaledOperator::do_apply(const Eigen::Ref<const Vector>& v, Eigen::Ref<Vector> out) const {
  inner_->apply(v, out);
  out *= scale_;
}

OperatorPtr dense(Matrix m) { return std::make_shared<DenseOperator>(std::move(m)); }
OperatorPtr sparse(SparseRowMatrix m) { return std::make_shared<SparseOperator>(std::move(m)); }
OperatorPtr diagonal(Vector d) { return std::make_shared<DiagonalOperator>(std::move(d)); }
OperatorPtr zero(Index dim) { return std::make_shared<ZeroOperator>(dim); }
OperatorPtr block_diagonal(std::vector<OperatorPtr> blocks) { return std::make_shared<BlockDiagOp>(std::move(blocks)); }
OperatorPtr sum(std::vector<OperatorPtr> terms) { return std::make_shared<SumOperator>(std::move(terms)); }
OperatorPtr sum(OperatorPtr a, OperatorPtr b) { return sum(std::vector<OperatorPtr>{std::move(a), std::move(b)}); }
OperatorPtr scaled(double scale, OperatorPtr inner) { return std::make_shared<ScaledOperator>(scale, std::move(inner)); }

OperatorPtr permuted_subblock(OperatorPtr base, std::vector<Index> perm, Index first, Index last) {
  return std::make_shared<PermutedSubBlock>(std::move(base), std::move(perm), first, last);
}

OperatorPtr embedded(OperatorPtr inner, std::vector<Index> indices, Index dim) {
  return std::make_shared<EmbeddedOperator>(std::move(inner), std::move(indices), dim);
}

SparseRowMatrix laplacian_2d_periodic_matrix(Index n, double d) {
  if (n < 3) throw ContractViolation("laplacian_2d_periodic: grid side must be at least 3");
  const double spacing = 1.0 / static_cast<double>(n);
  const double w = d / (spacing * spacing);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(5 * n * n));
  auto node = [n](Index ix, Index iy) { return ((iy + n) % n) * n + (ix + n) % n; };
  for (Index iy = 0; iy < n; ++iy) {
    for (Index ix = 0; ix < n; ++ix) {
      const Index row = node(ix, iy);
      entries.emplace_back(row, row, -4.0 * w);
      entries.emplace_back(row, node(ix - 1, iy), w);
      entries.emplace_back(row, node(ix + 1, iy), w);
      entries.emplace_back(row, node(ix, iy - 1), w);
      entries.emplace_back(row, node(ix, iy + 1), w);
    }
  }
  SparseRowMatrix m(n * n, n * n);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

OperatorPtr laplacian_2d_periodic(Index n, double d) { return sparse(laplacian_2d_periodic_matrix(n, d)); }

bool is_zero(const LinearOperator& op) {
  if (op.kind() == OperatorKind::zero) return true;
  if (op.kind() == OperatorKind::block_diagonal) {
    const auto& bd = static_cast<const BlockDiagOp&>(op);
    return std::all_of(bd.blocks().begin(), bd.blocks().end(), [](const OperatorPtr& b) { return is_zero(*b); });
  }
  return false;
}

}  // namespace pexprk
