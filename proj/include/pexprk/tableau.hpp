#pragma once

// Exponential Runge-Kutta tableaux and their transformation to the form that
// uses the full right-hand side f instead of the remainder g = f - Ly.

#include <string>
#include <vector>

#include "pexprk/coefficient.hpp"

namespace pexprk {

/// Original form. Stage i (0-based) uses c[i] phi_1(c[i] z) on f(y_n) plus
/// a[i][j], j >= 1, on the remainder differences; a[i][0] is stored for
/// completeness (it equals c[i] phi_1(c[i] z) minus the row sum) but is not used
/// by the stepper. Entries on and above the diagonal are zero.
struct ExprkTableau {
  std::string name;
  int order = 0;
  int stages = 0;
  std::vector<double> c;
  std::vector<std::vector<CoefficientExpr>> a;
  std::vector<CoefficientExpr> b;

  /// Throws ContractViolation for wrong sizes, c[0] != 0, or a non-strictly-lower a.
  void validate() const;
};

/// Transformed form: alpha[i][0] multiplies f(y_n), alpha[i][j] (j >= 1) multiplies
/// f(U_j) - f(y_n); beta likewise for the update.
struct TransformedTableau {
  std::string name;
  int order = 0;
  int stages = 0;
  std::vector<double> c;
  std::vector<std::vector<CoefficientExpr>> alpha;
  std::vector<CoefficientExpr> beta;

  void validate() const;
};

ExprkTableau exprk_order2();
ExprkTableau exprk_order3();
ExprkTableau exprk_order4();
/// Throws ConfigError unless order is 2, 3 or 4.
ExprkTableau exprk_tableau(int order);

/// With E = (I + z A)^{-1} over the stages 2..s (a finite Neumann sum, A being
/// strictly lower triangular):
///   alpha[2:s][1] = E (c_i phi_1(c_i z)),  alpha[2:s][2:s] = E A,
///   beta[1] = phi_1 - z sum_j b_j alpha[j][1],  beta[2:s]^T = b[2:s]^T E.
TransformedTableau transform(const ExprkTableau& tab);

/// One line per nonzero entry, e.g. "a[2][1] = (phi 1 1)", with 1-based indices.
std::string dump(const ExprkTableau& tab);
std::string dump(const TransformedTableau& tab);

}  // namespace pexprk
