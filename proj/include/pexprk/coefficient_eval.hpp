#pragma once

// Applying coefficient functions of z = hL to vectors without forming them.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pexprk/coefficient.hpp"
#include "pexprk/krylov.hpp"
#include "pexprk/operators.hpp"

namespace pexprk {

struct EvalStats {
  std::uint64_t matvecs = 0;
  std::uint64_t krylov_dims = 0;  ///< sum of Krylov dimensions over all projections
  std::uint64_t krylov_calls = 0;

  EvalStats& operator+=(const EvalStats& o) {
    matvecs += o.matvecs;
    krylov_dims += o.krylov_dims;
    krylov_calls += o.krylov_calls;
    return *this;
  }
};

/// A fixed list of coefficients that are all applied to the same vector.
/// Structurally equal subexpressions are evaluated once, and every phi leaf
/// acting on the same intermediate vector shares one Krylov projection.
/// Block-diagonal and embedded operators are evaluated block by block; zero
/// blocks are handled exactly without Krylov.
class CoefficientBatch {
 public:
  explicit CoefficientBatch(std::vector<CoefficientExpr> exprs, std::vector<std::string> labels = {});

  std::size_t size() const { return exprs_.size(); }
  const CoefficientExpr& expr(std::size_t i) const { return exprs_[i]; }
  const std::string& label(std::size_t i) const { return labels_[i]; }

  /// result[i] = expr(i)(hL) v. Throws KrylovFailure, naming the context and the
  /// coefficient labels, if a projection does not converge.
  std::vector<Vector> apply(const LinearOperator& op, double h, const Eigen::Ref<const Vector>& v,
                            const KrylovConfig& cfg, EvalStats* stats = nullptr, std::string_view context = {}) const;

 private:
  struct Step {
    enum class Type { input, combine, matvec, phi } type = Type::input;
    std::vector<std::pair<double, int>> terms;  // combine
    int src = 0;                                // matvec, phi
    int k = 0;
    double c = 1.0;
  };
  int plan(const CoefficientExpr& e, int input, std::map<std::pair<std::string, int>, int>& memo);
  std::vector<Vector> run(const LinearOperator& op, double h, const Vector& v, const KrylovConfig& cfg,
                          EvalStats& stats, std::string_view context) const;
  std::vector<Vector> run_zero(const Vector& v) const;

  std::vector<CoefficientExpr> exprs_;
  std::vector<std::string> labels_;
  std::vector<Step> steps_;
  std::vector<int> outputs_;
};

/// Single-coefficient convenience: expr(hL) v.
Vector eval_coeff(const CoefficientExpr& expr, const LinearOperator& op, double h, const Eigen::Ref<const Vector>& v,
                  const KrylovConfig& cfg = {}, EvalStats* stats = nullptr);

}  // namespace pexprk
