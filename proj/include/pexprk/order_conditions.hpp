#pragma once

// Numerical check of the stiff order conditions of an exponential Runge-Kutta
// tableau, with the coefficients evaluated at random dense matrix arguments.

#include <cstdint>
#include <string>
#include <vector>

#include "pexprk/tableau.hpp"

namespace pexprk {

struct ConditionResidual {
  std::string label;  ///< "1", "2a", "2b", "3a", "3b", "4a", "4b", "4c", "4d"
  int order = 0;
  /// Max-abs entry of the residual with every coefficient evaluated at z = hL.
  double strong = 0.0;
  /// Same with the weights b_j and the right-hand phi_k taken at z = 0.
  double weak = 0.0;
};

/// Evaluates all conditions of order <= up_to for L, J, K with entries uniform in
/// [-1, 1] (drawn in that order from one mt19937_64 stream) and h = 1.
std::vector<ConditionResidual> check_order_conditions(const ExprkTableau& tab, int up_to, int size,
                                                      std::uint64_t seed);

}  // namespace pexprk
