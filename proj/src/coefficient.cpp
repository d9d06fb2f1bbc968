#include "pexprk/coefficient.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "pexprk/errors.hpp"
#include "pexprk/phi.hpp"

namespace pexprk {

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CoefficientExpr CoefficientExpr::make(Node node) {
  std::string& t = node.text;
  switch (node.kind) {
    case Kind::phi:
      t = "(phi " + std::to_string(node.k) + " " + format_number(node.c) + ")";
      break;
    case Kind::constant:
      t = format_number(node.r);
      break;
    case Kind::scale:
      t = "(* " + format_number(node.r) + " " + node.children[0].prefix() + ")";
      break;
    case Kind::sum:
      t = "(+";
      for (const auto& ch : node.children) t += " " + ch.prefix();
      t += ")";
      break;
    case Kind::product:
      t = "(. " + node.children[0].prefix() + " " + node.children[1].prefix() + ")";
      break;
    case Kind::zmul:
      t = "(z " + node.children[0].prefix() + ")";
      break;
  }
  return CoefficientExpr(std::make_shared<const Node>(std::move(node)));
}

CoefficientExpr CoefficientExpr::phi(int k, double c) {
  if (k < 0) throw DomainError("phi index must be non-negative, got " + std::to_string(k));
  if (!(c > 0.0 && c <= 1.0)) throw DomainError("phi abscissa must lie in (0, 1], got " + format_number(c));
  Node n;
  n.kind = Kind::phi;
  n.k = k;
  n.c = c;
  return make(std::move(n));
}

CoefficientExpr CoefficientExpr::constant(double r) {
  if (!std::isfinite(r)) throw DomainError("non-finite constant coefficient");
  Node n;
  n.kind = Kind::constant;
  n.r = r;
  return make(std::move(n));
}

CoefficientExpr CoefficientExpr::scale(double r, CoefficientExpr child) {
  if (!std::isfinite(r)) throw DomainError("non-finite scale factor");
  Node n;
  n.kind = Kind::scale;
  n.r = r;
  n.children = {std::move(child)};
  return make(std::move(n));
}

CoefficientExpr CoefficientExpr::sum(std::vector<CoefficientExpr> terms) {
  if (terms.empty()) return constant(0.0);
  if (terms.size() == 1) return terms[0];
  Node n;
  n.kind = Kind::sum;
  n.children = std::move(terms);
  return make(std::move(n));
}

CoefficientExpr CoefficientExpr::product(CoefficientExpr left, CoefficientExpr right) {
  Node n;
  n.kind = Kind::product;
  n.children = {std::move(left), std::move(right)};
  return make(std::move(n));
}

CoefficientExpr CoefficientExpr::zmul(CoefficientExpr child) {
  Node n;
  n.kind = Kind::zmul;
  n.children = {std::move(child)};
  return make(std::move(n));
}

bool CoefficientExpr::is_zero() const {
  switch (kind()) {
    case Kind::constant:
      return value() == 0.0;
    case Kind::scale:
      return value() == 0.0 || children()[0].is_zero();
    case Kind::sum:
      for (const auto& ch : children())
        if (!ch.is_zero()) return false;
      return true;
    case Kind::product:
      return children()[0].is_zero() || children()[1].is_zero();
    case Kind::zmul:
      return children()[0].is_zero();
    case Kind::phi:
      return false;
  }
  return false;
}

CoefficientExpr CoefficientExpr::simplified() const {
  switch (kind()) {
    case Kind::phi:
    case Kind::constant:
      return *this;
    case Kind::scale: {
      double r = value();
      CoefficientExpr ch = children()[0].simplified();
      if (r == 0.0 || ch.is_zero()) return constant(0.0);
      if (ch.kind() == Kind::constant) return constant(r * ch.value());
      if (ch.kind() == Kind::scale) {
        r *= ch.value();
        ch = ch.children()[0];
      }
      if (r == 1.0) return ch;
      return scale(r, ch);
    }
    case Kind::sum: {
      std::vector<CoefficientExpr> terms;
      double const_part = 0.0;
      auto absorb = [&](const CoefficientExpr& t, auto& self) -> void {
        if (t.is_zero()) return;
        if (t.kind() == Kind::sum) {
          for (const auto& g : t.children()) self(g, self);
        } else if (t.kind() == Kind::constant) {
          const_part += t.value();
        } else {
          terms.push_back(t);
        }
      };
      for (const auto& ch : children()) absorb(ch.simplified(), absorb);
      if (const_part != 0.0) terms.insert(terms.begin(), constant(const_part));
      return sum(std::move(terms));
    }
    case Kind::product: {
      CoefficientExpr l = children()[0].simplified();
      CoefficientExpr r = children()[1].simplified();
      if (l.is_zero() || r.is_zero()) return constant(0.0);
      double factor = 1.0;
      auto peel = [&factor](CoefficientExpr& e) {
        if (e.kind() == Kind::scale) {
          factor *= e.value();
          e = e.children()[0];
        }
      };
      if (l.kind() == Kind::constant) return scale(l.value(), r).simplified();
      if (r.kind() == Kind::constant) return scale(r.value(), l).simplified();
      peel(l);
      peel(r);
      CoefficientExpr p = product(l, r);
      return factor == 1.0 ? p : scale(factor, p);
    }
    case Kind::zmul: {
      CoefficientExpr ch = children()[0].simplified();
      if (ch.is_zero()) return constant(0.0);
      if (ch.kind() == Kind::scale) {
        CoefficientExpr inner = zmul(ch.children()[0]);
        return ch.value() == 1.0 ? inner : scale(ch.value(), inner);
      }
      return zmul(ch);
    }
  }
  return *this;
}

double CoefficientExpr::eval(double z) const {
  switch (kind()) {
    case Kind::phi:
      return phi_scalar(phi_index(), abscissa() * z);
    case Kind::constant:
      return value();
    case Kind::scale:
      return value() * children()[0].eval(z);
    case Kind::sum: {
      double s = 0.0;
      for (const auto& ch : children()) s += ch.eval(z);
      return s;
    }
    case Kind::product:
      return children()[0].eval(z) * children()[1].eval(z);
    case Kind::zmul:
      return z * children()[0].eval(z);
  }
  return 0.0;
}

Matrix CoefficientExpr::eval(const Matrix& z) const {
  std::map<std::pair<int, double>, Matrix> cache;
  return eval(z, cache);
}

Matrix CoefficientExpr::eval(const Matrix& z, std::map<std::pair<int, double>, Matrix>& cache) const {
  if (z.rows() != z.cols()) throw ContractViolation("coefficient argument must be square");
  const Index n = z.rows();
  switch (kind()) {
    case Kind::phi: {
      auto key = std::make_pair(phi_index(), abscissa());
      auto it = cache.find(key);
      if (it == cache.end()) {
        Matrix arg = abscissa() * z;
        it = cache.emplace(key, phi_matrix(phi_index(), arg)).first;
      }
      return it->second;
    }
    case Kind::constant:
      return value() * Matrix::Identity(n, n);
    case Kind::scale:
      return value() * children()[0].eval(z, cache);
    case Kind::sum: {
      Matrix s = Matrix::Zero(n, n);
      for (const auto& ch : children()) s += ch.eval(z, cache);
      return s;
    }
    case Kind::product:
      return children()[0].eval(z, cache) * children()[1].eval(z, cache);
    case Kind::zmul:
      return z * children()[0].eval(z, cache);
  }
  return Matrix();
}

CoefficientExpr operator+(const CoefficientExpr& a, const CoefficientExpr& b) {
  return CoefficientExpr::sum({a, b});
}
CoefficientExpr operator-(const CoefficientExpr& a, const CoefficientExpr& b) {
  return CoefficientExpr::sum({a, CoefficientExpr::scale(-1.0, b)});
}
CoefficientExpr operator*(double r, const CoefficientExpr& a) { return CoefficientExpr::scale(r, a); }
CoefficientExpr operator*(const CoefficientExpr& a, const CoefficientExpr& b) {
  return CoefficientExpr::product(a, b);
}

namespace {

void add_term(CanonicalForm& form, const Monomial& m, double w) {
  if (w == 0.0) return;
  auto [it, inserted] = form.emplace(m, w);
  if (!inserted) {
    it->second += w;
    if (it->second == 0.0) form.erase(it);
  }
}

}  // namespace

CanonicalForm canonical(const CoefficientExpr& e) {
  using Kind = CoefficientExpr::Kind;
  CanonicalForm out;
  switch (e.kind()) {
    case Kind::phi: {
      Monomial m;
      m.phis.emplace_back(e.phi_index(), e.abscissa());
      out.emplace(m, 1.0);
      break;
    }
    case Kind::constant:
      add_term(out, Monomial{}, e.value());
      break;
    case Kind::scale:
      for (const auto& [m, w] : canonical(e.children()[0])) add_term(out, m, e.value() * w);
      break;
    case Kind::sum:
      for (const auto& ch : e.children())
        for (const auto& [m, w] : canonical(ch)) add_term(out, m, w);
      break;
    case Kind::product: {
      CanonicalForm l = canonical(e.children()[0]);
      CanonicalForm r = canonical(e.children()[1]);
      for (const auto& [ml, wl] : l) {
        for (const auto& [mr, wr] : r) {
          Monomial m;
          m.z_power = ml.z_power + mr.z_power;
          m.phis = ml.phis;
          m.phis.insert(m.phis.end(), mr.phis.begin(), mr.phis.end());
          std::sort(m.phis.begin(), m.phis.end());
          add_term(out, m, wl * wr);
        }
      }
      break;
    }
    case Kind::zmul:
      for (const auto& [m, w] : canonical(e.children()[0])) {
        Monomial shifted = m;
        ++shifted.z_power;
        add_term(out, shifted, w);
      }
      break;
  }
  return out;
}

std::string to_string(const CanonicalForm& form) {
  if (form.empty()) return "0";
  std::string s;
  for (const auto& [m, w] : form) {
    if (!s.empty()) s += " + ";
    s += format_number(w);
    if (m.z_power > 0) s += " z^" + std::to_string(m.z_power);
    for (const auto& [k, c] : m.phis) s += " phi" + std::to_string(k) + "(" + format_number(c) + "z)";
  }
  return s;
}

bool canonically_equal(const CoefficientExpr& a, const CoefficientExpr& b, double tol) {
  CanonicalForm fa = canonical(a);
  CanonicalForm fb = canonical(b);
  for (const auto& [m, w] : fa) {
    auto it = fb.find(m);
    double other = it == fb.end() ? 0.0 : it->second;
    if (std::abs(w - other) > tol) return false;
  }
  for (const auto& [m, w] : fb)
    if (!fa.count(m) && std::abs(w) > tol) return false;
  return true;
}

}  // namespace pexprk
