#include "pexprk/order_conditions.hpp"

#include <map>
#include <random>

#include "pexprk/errors.hpp"
#include "pexprk/phi.hpp"

namespace pexprk {

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix random_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = dist(rng);
  return m;
}

}  // namespace

std::vector<ConditionResidual> check_order_conditions(const ExprkTableau& tab, int up_to, int size,
                                                      std::uint64_t seed) {
  tab.validate();
  if (up_to < 1 || up_to > 4) throw ConfigError("order conditions are available up to order 4");
  if (size < 1) throw ConfigError("matrix size must be positive");

  std::mt19937_64 rng(seed);
  const Matrix z = random_matrix(size, rng);  // h = 1
  const Matrix jac = random_matrix(size, rng);
  const Matrix k_mat = random_matrix(size, rng);
  const Matrix dj = jac - z;
  const Matrix eye = Matrix::Identity(size, size);
  const Matrix zero_arg = Matrix::Zero(size, size);

  const int s = tab.stages;
  const auto& c = tab.c;
  std::map<std::pair<int, double>, Matrix> cache;
  std::map<std::pair<int, double>, Matrix> cache0;
  std::vector<std::vector<Matrix>> a(s, std::vector<Matrix>(s));
  std::vector<Matrix> b(s), b0(s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) a[i][j] = tab.a[i][j].eval(z, cache);
    b[i] = tab.b[i].eval(z, cache);
    b0[i] = tab.b[i].eval(zero_arg, cache0);
  }
  auto phi_at = [&](int k, double cc) -> Matrix {
    if (cc == 0.0) return eye / detail::factorial<double>(k);
    return CoefficientExpr::phi(k, cc).eval(z, cache);
  };
  auto phi0 = [&](int k) -> Matrix { return eye / detail::factorial<double>(k); };

  // psi_{q,j} = sum_{k<j} a_jk c_k^{q-1}/(q-1)! - c_j^q phi_q(c_j z).
  auto psi = [&](int q, int j) -> Matrix {
    Matrix r = Matrix::Zero(size, size);
    for (int k = 0; k < j; ++k) r += a[j][k] * (std::pow(c[k], q - 1) / detail::factorial<double>(q - 1));
    return r - std::pow(c[j], q) * phi_at(q, c[j]);
  };

  std::vector<ConditionResidual> out;
  auto add = [&](std::string label, int order, const Matrix& strong, const Matrix& weak) {
    out.push_back({std::move(label), order, max_abs(strong), max_abs(weak)});
  };

  // Quadrature-type conditions: sum_j b_j c_j^{q-1}/(q-1)! = phi_q.
  auto quadrature = [&](int q, const std::vector<Matrix>& w, const Matrix& rhs) {
    Matrix r = -rhs;
    for (int j = 0; j < s; ++j) r += w[j] * (std::pow(c[j], q - 1) / detail::factorial<double>(q - 1));
    return r;
  };

  if (up_to >= 1) add("1", 1, quadrature(1, b, phi_at(1, 1.0)), quadrature(1, b0, phi0(1)));
  if (up_to >= 2) {
    add("2a", 2, quadrature(2, b, phi_at(2, 1.0)), quadrature(2, b0, phi0(2)));
    double worst = 0.0;
    for (int i = 1; i < s; ++i) {
      Matrix r = -c[i] * phi_at(1, c[i]);
      for (int j = 0; j < i; ++j) r += a[i][j];
      worst = std::max(worst, max_abs(r));
    }
    out.push_back({"2b", 2, worst, worst});
  }
  if (up_to >= 3) {
    add("3a", 3, quadrature(3, b, phi_at(3, 1.0)), quadrature(3, b0, phi0(3)));
    Matrix strong = Matrix::Zero(size, size), weak = strong;
    for (int j = 1; j < s; ++j) {
      Matrix t = dj * psi(2, j);
      strong += b[j] * t;
      weak += b0[j] * t;
    }
    add("3b", 3, strong, weak);
  }
  if (up_to >= 4) {
    add("4a", 4, quadrature(4, b, phi_at(4, 1.0)), quadrature(4, b0, phi0(4)));
    Matrix s4b = Matrix::Zero(size, size), w4b = s4b, s4c = s4b, w4c = s4b, s4d = s4b, w4d = s4b;
    for (int j = 1; j < s; ++j) {
      Matrix t = dj * psi(3, j);
      s4b += b[j] * t;
      w4b += b0[j] * t;
      Matrix inner = Matrix::Zero(size, size);
      for (int k = 1; k < j; ++k) inner += a[j][k] * dj * psi(2, k);
      Matrix u = dj * inner;
      s4c += b[j] * u;
      w4c += b0[j] * u;
      Matrix v = c[j] * k_mat * psi(2, j);
      s4d += b[j] * v;
      w4d += b0[j] * v;
    }
    add("4b", 4, s4b, w4b);
    add("4c", 4, s4c, w4c);
    add("4d", 4, s4d, w4d);
  }
  return out;
}

}  // namespace pexprk
