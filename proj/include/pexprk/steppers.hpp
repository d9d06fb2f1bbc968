#pragma once

// One-step maps for u' = f(u) with exponential Runge-Kutta methods: the original
// remainder form, the transformed form, and the partitioned additive form
// u' = sum_p f^p(u) with one linear operator per partition.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "pexprk/coefficient_eval.hpp"
#include "pexprk/krylov.hpp"
#include "pexprk/tableau.hpp"

namespace pexprk {

using Rhs = std::function<Vector(const Vector&)>;
/// Linear operator attached to the current state (typically a Jacobian or a part of it).
using LinearBuilder = std::function<OperatorPtr(const Vector&)>;

struct SplitProblem {
  Index dim = 0;
  std::vector<Rhs> parts;
  std::vector<LinearBuilder> linear;
  /// Sum of the parts; built from them when left empty.
  Rhs full;

  int partitions() const { return static_cast<int>(parts.size()); }
  Vector rhs(const Vector& u) const;
  /// Throws ContractViolation unless parts and linear have equal, nonzero length.
  void validate() const;
};

struct StepStats {
  std::uint64_t matvecs = 0;
  std::uint64_t krylov_dims = 0;
  std::uint64_t krylov_calls = 0;
  std::uint64_t rhs_evals = 0;  ///< evaluations of f or of a single f^p

  StepStats& operator+=(const StepStats& o);
  StepStats& operator+=(const EvalStats& o);
};

/// Optional per-step trace; with trace = false only the statistics are filled.
struct StepRecord {
  bool trace = true;
  std::vector<Vector> stages;  ///< U_1 = u_n, ..., U_s
  /// part_evals[p][i] = f^p(U_i) (one part for unpartitioned steppers).
  std::vector<std::vector<Vector>> part_evals;
  StepStats stats;
};

/// Original form: stages see g = f - L y through a_ij(hL), and c_i phi_1(c_i hL) f(y_n).
class OriginalStepper {
 public:
  explicit OriginalStepper(ExprkTableau tab);
  Vector step(const Rhs& f, const LinearOperator& op, const Vector& y, double h, const KrylovConfig& cfg,
              StepRecord* rec = nullptr) const;
  const ExprkTableau& tableau() const { return tab_; }

 private:
  ExprkTableau tab_;
  std::unique_ptr<CoefficientBatch> on_f_;
  std::vector<std::unique_ptr<CoefficientBatch>> on_stage_;
};

/// How the transformed coefficients are applied.
///  expanded:  every alpha_ij(hL), beta_j(hL) is evaluated from its expression tree.
///  recursive: alpha = E (...) and beta^T = b^T E are applied through E = I - z E A,
///             i.e. partition p feeds a_ij(hL^p) the vector f^p(U_j) - f^p(u_n) - hL^p X_j^p,
///             X_j^p being the partition-p increment of stage j. One projection per stage
///             and partition.
enum class CoefficientEvaluation { expanded, recursive };

std::string_view to_string(CoefficientEvaluation e);
CoefficientEvaluation parse_coefficient_evaluation(std::string_view s);

/// Transformed form: alpha and beta act on f(y_n) and on f(U_j) - f(y_n).
class TransformedStepper {
 public:
  explicit TransformedStepper(TransformedTableau tab);
  TransformedStepper(const ExprkTableau& tab, CoefficientEvaluation mode);
  Vector step(const Rhs& f, const LinearOperator& op, const Vector& y, double h, const KrylovConfig& cfg,
              StepRecord* rec = nullptr) const;
  /// Partitioned form: the coefficients of partition p are evaluated at hL^p.
  Vector step(const SplitProblem& prob, const Vector& u, double h, const KrylovConfig& cfg,
              StepRecord* rec = nullptr) const;
  const TransformedTableau& tableau() const { return tab_; }
  CoefficientEvaluation mode() const { return mode_; }

 private:
  void init_expanded();
  Vector run(const std::vector<Rhs>& f, const std::vector<OperatorPtr>& ops, const Vector& u, double h,
             const KrylovConfig& cfg, StepRecord* rec) const;

  TransformedTableau tab_;
  CoefficientEvaluation mode_ = CoefficientEvaluation::expanded;
  std::unique_ptr<CoefficientBatch> on_f_;
  std::vector<std::unique_ptr<CoefficientBatch>> on_stage_;
};

/// Second-order two-way partitioned method in residual form:
///   U_2 = u_n + h sum_p phi_1(hL^p) f^p(u_n),
///   u_{n+1} = u_n + h sum_p phi_1(hL^{p'}) phi_1(hL^p) f^p(u_n)
///             + h sum_p phi_2(hL^p) [f^p(U_2) - f^p(u_n) - L^p (U_2 - u_n)],
/// where p' is the other partition.
Vector step_pexprk2_residual(const SplitProblem& prob, const Vector& u, double h, const KrylovConfig& cfg,
                             StepRecord* rec = nullptr);

using StepFunction = std::function<Vector(const Vector& u, double h, StepStats& stats)>;

StepFunction make_original_stepper(int order, Rhs f, LinearBuilder linear, KrylovConfig cfg);
StepFunction make_transformed_stepper(int order, Rhs f, LinearBuilder linear, KrylovConfig cfg,
                                      CoefficientEvaluation mode = CoefficientEvaluation::expanded);
StepFunction make_partitioned_stepper(int order, SplitProblem prob, KrylovConfig cfg,
                                      CoefficientEvaluation mode = CoefficientEvaluation::expanded);
StepFunction make_residual_stepper(SplitProblem prob, KrylovConfig cfg);

struct IntegrationResult {
  Vector state;
  StepStats stats;
  int steps = 0;
};

/// n_steps uniform steps from t0 to tf. Throws EvaluationFailure if the state
/// becomes non-finite.
IntegrationResult integrate_fixed(const StepFunction& step, const Vector& u0, double t0, double tf, int n_steps);

/// Spectral radius of exp(hL1) + exp(hL2) - I, the one-step map of the
/// partitioned first-order method on u' = (L1 + L2) u; dense, for small sizes.
double stability_matrix_spectral_radius(const Matrix& l1, const Matrix& l2, double h);

}  // namespace pexprk
