#pragma once

// Test problems: the two-species Gray-Scott reaction-diffusion system on a
// periodic unit square with four partitionings, and a small semilinear oracle.

#include <cstdint>

#include "pexprk/steppers.hpp"

namespace pexprk {

inline constexpr double kGrayScottFinalTime = 0.262144;
inline constexpr Index kGrayScottPaperGrid = 300;
inline constexpr Index kGrayScottDeskGrid = 64;

/// State layout: all a values (node iy * n + ix), then all b values.
struct GrayScottModel {
  Index n = kGrayScottDeskGrid;
  double d_a = 2.0;
  double d_b = 1.0;
  double feed = 0.04;
  double kill = 0.06;

  Index nodes() const { return n * n; }
  Index dim() const { return 2 * n * n; }
  /// Throws ConfigError for n < 3 or non-positive parameters.
  void validate() const;
};

GrayScottModel gs_default(Index n = kGrayScottDeskGrid);

/// a = 0.4 + 0.1(x + y) + 0.1 sin(10x) sin(20y), b = 0.4 + 0.1(x + y) + 0.1 cos(10x) cos(20y),
/// sampled at cell centers x = (i + 1/2)/n, y = (j + 1/2)/n.
Vector gs_initial(const GrayScottModel& m);
Vector gs_rhs(const GrayScottModel& m, const Vector& u);
Vector gs_diffusion(const GrayScottModel& m, const Vector& u);
Vector gs_reaction(const GrayScottModel& m, const Vector& u);

/// Analytic Jacobian of the full right-hand side.
SparseRowMatrix gs_jacobian_matrix(const GrayScottModel& m, const Vector& u);
OperatorPtr gs_jacobian(const GrayScottModel& m, const Vector& u);
/// Species-diagonal part of the Jacobian (inter-species coupling dropped), block-diagonal.
OperatorPtr gs_block_jacobian(const GrayScottModel& m, const Vector& u);
/// Jacobian of the reaction terms alone.
SparseRowMatrix gs_reaction_jacobian_matrix(const GrayScottModel& m, const Vector& u);

SplitProblem gs_partition_species(const GrayScottModel& m);
/// Rows iy < n/2 form the first subdomain. Throws ConfigError for odd n.
SplitProblem gs_partition_space(const GrayScottModel& m);
/// Ordering used by the spatial split: first subdomain (a then b), then the second.
std::vector<Index> gs_space_permutation(const GrayScottModel& m);
SplitProblem gs_partition_physics(const GrayScottModel& m);
SplitProblem gs_partition_imex(const GrayScottModel& m);

/// u' = L u + eps sin(u) with a random, shifted-stable dense L.
struct SemilinearOracle {
  Matrix l;
  double eps = 0.1;
  Vector u0;

  Index dim() const { return l.rows(); }
  Vector rhs(const Vector& u) const;
  OperatorPtr linear() const;
  /// Classical fourth-order Runge-Kutta with the given number of uniform steps.
  Vector reference(double t, int steps = 4000) const;
};

/// L = G / sqrt(dim) - 2 I with G standard normal; u0 uniform in [-1, 1].
SemilinearOracle oracle_semilinear(Index dim, std::uint64_t seed, double eps = 0.1);

}  // namespace pexprk
