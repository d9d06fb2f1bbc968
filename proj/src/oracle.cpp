#include <cmath>
#include <random>

#include "pexprk/errors.hpp"
#include "pexprk/problems.hpp"

namespace pexprk {

Vector SemilinearOracle::rhs(const Vector& u) const {
  if (u.size() != dim()) throw ContractViolation("oracle state has the wrong length");
  return l * u + eps * u.array().sin().matrix();
}

OperatorPtr SemilinearOracle::linear() const { return dense(l); }

Vector SemilinearOracle::reference(double t, int steps) const {
  if (steps < 1) throw ContractViolation("reference needs at least one step");
  const double h = t / steps;
  Vector u = u0;
  for (int i = 0; i < steps; ++i) {
    Vector k1 = rhs(u);
    Vector k2 = rhs(u + 0.5 * h * k1);
    Vector k3 = rhs(u + 0.5 * h * k2);
    Vector k4 = rhs(u + h * k3);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

SemilinearOracle oracle_semilinear(Index dim, std::uint64_t seed, double eps) {
  if (dim < 1) throw ConfigError("oracle dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  SemilinearOracle o;
  o.eps = eps;
  o.l.resize(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) o.l(i, j) = normal(rng) / std::sqrt(static_cast<double>(dim));
  o.l -= 2.0 * Matrix::Identity(dim, dim);
  o.u0.resize(dim);
  for (Index i = 0; i < dim; ++i) o.u0[i] = unif(rng);
  return o;
}

}  // namespace pexprk
