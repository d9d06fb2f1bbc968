#include "pexprk/tableau.hpp"

#include <sstream>

#include "pexprk/errors.hpp"

namespace pexprk {

namespace {

using E = CoefficientExpr;

E phi(int k, double c = 1.0) { return E::phi(k, c); }
E zero() { return E::constant(0.0); }

std::vector<std::vector<E>> zero_matrix(int s) { return std::vector<std::vector<E>>(s, std::vector<E>(s, zero())); }

void check_shape(const std::string& name, int s, const std::vector<double>& c, const std::vector<std::vector<E>>& a,
                 const std::vector<E>& b) {
  if (s < 1) throw ContractViolation(name + ": at least one stage required");
  if (static_cast<int>(c.size()) != s || static_cast<int>(a.size()) != s || static_cast<int>(b.size()) != s)
    throw ContractViolation(name + ": tableau dimensions do not match the stage count");
  if (c[0] != 0.0) throw ContractViolation(name + ": first node must be zero");
  for (int i = 0; i < s; ++i) {
    if (static_cast<int>(a[i].size()) != s) throw ContractViolation(name + ": ragged coefficient matrix");
    for (int j = i; j < s; ++j)
      if (!a[i][j].is_zero()) throw ContractViolation(name + ": coefficient matrix must be strictly lower triangular");
  }
}

/// First-column entry implied by the row-sum condition.
void fill_first_column(ExprkTableau& t) {
  for (int i = 1; i < t.stages; ++i) {
    std::vector<E> terms{t.c[i] * phi(1, t.c[i])};
    for (int j = 1; j < i; ++j) terms.push_back(E::scale(-1.0, t.a[i][j]));
    t.a[i][0] = E::sum(terms).simplified();
  }
}

}  // namespace

void ExprkTableau::validate() const { check_shape(name, stages, c, a, b); }
void TransformedTableau::validate() const { check_shape(name, stages, c, alpha, beta); }

ExprkTableau exprk_order2() {
  ExprkTableau t{"exprk2", 2, 2, {0.0, 1.0}, zero_matrix(2), {}};
  t.a[1][0] = phi(1);
  t.b = {(phi(1) - phi(2)).simplified(), phi(2)};
  return t;
}

ExprkTableau exprk_order3() {
  const double c2 = 2.0 / 3.0;
  ExprkTableau t{"exprk3", 3, 3, {0.0, c2, c2}, zero_matrix(3), {}};
  t.a[2][1] = (4.0 / (9.0 * c2)) * phi(2, c2);
  t.b = {(phi(1) - 1.5 * phi(2)).simplified(), zero(), 1.5 * phi(2)};
  fill_first_column(t);
  return t;
}

ExprkTableau exprk_order4() {
  ExprkTableau t{"exprk4", 4, 5, {0.0, 0.5, 0.5, 1.0, 0.5}, zero_matrix(5), {}};
  t.a[2][1] = phi(2, 0.5);
  t.a[3][1] = phi(2, 1.0);
  t.a[3][2] = phi(2, 1.0);
  E a52 = E::sum({0.5 * phi(2, 0.5), -1.0 * phi(3, 1.0), 0.25 * phi(2, 1.0), -0.5 * phi(3, 0.5)}).simplified();
  t.a[4][1] = a52;
  t.a[4][2] = a52;
  t.a[4][3] = (0.25 * phi(2, 0.5) - a52).simplified();
  t.b = {E::sum({phi(1), -3.0 * phi(2), 4.0 * phi(3)}).simplified(), zero(), zero(),
         (-1.0 * phi(2) + 4.0 * phi(3)).simplified(), (4.0 * phi(2) - 8.0 * phi(3)).simplified()};
  fill_first_column(t);
  return t;
}

ExprkTableau exprk_tableau(int order) {
  switch (order) {
    case 2:
      return exprk_order2();
    case 3:
      return exprk_order3();
    case 4:
      return exprk_order4();
    default:
      throw ConfigError("no exponential Runge-Kutta tableau of order " + std::to_string(order) +
                        " (available: 2, 3, 4)");
  }
}

TransformedTableau transform(const ExprkTableau& tab) {
  tab.validate();
  const int s = tab.stages;
  const int m = s - 1;  // stages 2..s

  // N = -z A on stages 2..s.
  std::vector<std::vector<E>> nmat(m, std::vector<E>(m, zero()));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j)
      if (!tab.a[i + 1][j + 1].is_zero()) nmat[i][j] = E::scale(-1.0, E::zmul(tab.a[i + 1][j + 1])).simplified();

  // E = sum_{p < m} N^p; N is nilpotent of index m. Right factors act first.
  std::vector<std::vector<E>> power(m, std::vector<E>(m, zero()));
  for (int i = 0; i < m; ++i) power[i][i] = E::constant(1.0);
  std::vector<std::vector<std::vector<E>>> inv_terms(m, std::vector<std::vector<E>>(m));
  for (int p = 0; p < m; ++p) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (!power[i][j].is_zero()) inv_terms[i][j].push_back(power[i][j]);
    std::vector<std::vector<E>> next(m, std::vector<E>(m, zero()));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        std::vector<E> terms;
        for (int l = 0; l < m; ++l)
          if (!power[i][l].is_zero() && !nmat[l][j].is_zero()) terms.push_back(E::product(power[i][l], nmat[l][j]));
        next[i][j] = E::sum(terms).simplified();
      }
    }
    power = std::move(next);
  }
  std::vector<std::vector<E>> inv(m, std::vector<E>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) inv[i][j] = E::sum(inv_terms[i][j]).simplified();

  TransformedTableau out{tab.name + "-transformed", tab.order, s, tab.c, zero_matrix(s), std::vector<E>(s, zero())};

  for (int i = 0; i < m; ++i) {
    std::vector<E> first;
    for (int k = 0; k < m; ++k) {
      if (inv[i][k].is_zero()) continue;
      first.push_back(E::product(inv[i][k], tab.c[k + 1] * phi(1, tab.c[k + 1])));
    }
    out.alpha[i + 1][0] = E::sum(first).simplified();
    for (int j = 0; j < m; ++j) {
      std::vector<E> terms;
      for (int k = 0; k < m; ++k)
        if (!inv[i][k].is_zero() && !tab.a[k + 1][j + 1].is_zero())
          terms.push_back(E::product(inv[i][k], tab.a[k + 1][j + 1]));
      out.alpha[i + 1][j + 1] = E::sum(terms).simplified();
    }
  }

  std::vector<E> weighted;
  for (int j = 1; j < s; ++j)
    if (!tab.b[j].is_zero()) weighted.push_back(E::product(tab.b[j], out.alpha[j][0]));
  out.beta[0] = E::sum({phi(1), E::scale(-1.0, E::zmul(E::sum(weighted)))}).simplified();
  for (int k = 0; k < m; ++k) {
    std::vector<E> terms;
    for (int i = 0; i < m; ++i)
      if (!tab.b[i + 1].is_zero() && !inv[i][k].is_zero()) terms.push_back(E::product(tab.b[i + 1], inv[i][k]));
    out.beta[k + 1] = E::sum(terms).simplified();
  }
  out.validate();
  return out;
}

namespace {

void dump_nodes(std::ostringstream& os, const std::vector<double>& c) {
  for (std::size_t i = 0; i < c.size(); ++i) os << "c[" << i + 1 << "] = " << format_number(c[i]) << "\n";
}

void dump_matrix(std::ostringstream& os, const char* name, const std::vector<std::vector<E>>& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (!a[i][j].is_zero()) os << name << "[" << i + 1 << "][" << j + 1 << "] = " << a[i][j].prefix() << "\n";
}

void dump_weights(std::ostringstream& os, const char* name, const std::vector<E>& b) {
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!b[j].is_zero()) os << name << "[" << j + 1 << "] = " << b[j].prefix() << "\n";
}

}  // namespace

std::string dump(const ExprkTableau& tab) {
  std::ostringstream os;
  os << "# " << tab.name << " order " << tab.order << " stages " << tab.stages << "\n";
  dump_nodes(os, tab.c);
  dump_matrix(os, "a", tab.a);
  dump_weights(os, "b", tab.b);
  return os.str();
}

std::string dump(const TransformedTableau& tab) {
  std::ostringstream os;
  os << "# " << tab.name << " order " << tab.order << " stages " << tab.stages << "\n";
  dump_nodes(os, tab.c);
  dump_matrix(os, "alpha", tab.alpha);
  dump_weights(os, "beta", tab.beta);
  return os.str();
}

}  // namespace pexprk
