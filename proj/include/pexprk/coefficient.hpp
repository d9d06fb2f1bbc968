#pragma once

// Symbolic coefficient functions of an exponential Runge-Kutta method: trees
// over phi_k(c z), constants, scalar scaling, sums, products and z-multiplication.
// All coefficients of one method are functions of the same z = hL, so they commute;
// products nevertheless keep their operand order, and evaluation applies the right
// operand first.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pexprk/operators.hpp"

namespace pexprk {

class CoefficientExpr {
 public:
  enum class Kind { phi, constant, scale, sum, product, zmul };

  /// phi_k(c z); requires k >= 0 and c in (0, 1].
  static CoefficientExpr phi(int k, double c = 1.0);
  static CoefficientExpr constant(double r);
  static CoefficientExpr scale(double r, CoefficientExpr child);
  static CoefficientExpr sum(std::vector<CoefficientExpr> terms);
  static CoefficientExpr product(CoefficientExpr left, CoefficientExpr right);
  static CoefficientExpr zmul(CoefficientExpr child);

  CoefficientExpr() : CoefficientExpr(constant(0.0)) {}

  Kind kind() const { return node_->kind; }
  int phi_index() const { return node_->k; }
  double abscissa() const { return node_->c; }
  /// Constant value or scale factor.
  double value() const { return node_->r; }
  const std::vector<CoefficientExpr>& children() const { return node_->children; }
  const void* identity() const { return node_.get(); }

  bool is_zero() const;

  /// Flattens nested sums, folds constant scales and drops zero terms. No phi identities.
  CoefficientExpr simplified() const;

  /// Stable prefix notation, e.g. (+ (phi 1 1) (* -1 (z (. (phi 2 1) (phi 1 1))))).
  const std::string& prefix() const { return node_->text; }

  double eval(double z) const;
  /// Dense value at the matrix argument z; phi_k(c z) via phi_core.
  Matrix eval(const Matrix& z) const;
  Matrix eval(const Matrix& z, std::map<std::pair<int, double>, Matrix>& phi_cache) const;

  bool structurally_equal(const CoefficientExpr& other) const { return prefix() == other.prefix(); }

 private:
  struct Node {
    Kind kind = Kind::constant;
    int k = 0;
    double c = 1.0;
    double r = 0.0;
    std::vector<CoefficientExpr> children;
    std::string text;
  };
  explicit CoefficientExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static CoefficientExpr make(Node node);

  std::shared_ptr<const Node> node_;
};

CoefficientExpr operator+(const CoefficientExpr& a, const CoefficientExpr& b);
CoefficientExpr operator-(const CoefficientExpr& a, const CoefficientExpr& b);
CoefficientExpr operator*(double r, const CoefficientExpr& a);
/// Composition; the right operand acts first.
CoefficientExpr operator*(const CoefficientExpr& a, const CoefficientExpr& b);

/// Expanded normal form: a sum of monomials coeff * z^p * prod phi_k(c z), factors
/// sorted (the coefficients commute), like terms merged. Used for golden comparisons.
struct Monomial {
  int z_power = 0;
  std::vector<std::pair<int, double>> phis;  // sorted (k, c)
  auto operator<=>(const Monomial&) const = default;
};
using CanonicalForm = std::map<Monomial, double>;

CanonicalForm canonical(const CoefficientExpr& e);
std::string to_string(const CanonicalForm& form);
/// Same monomials with coefficients equal to within tol (absolute).
bool canonically_equal(const CoefficientExpr& a, const CoefficientExpr& b, double tol = 1e-14);

/// Shortest round-trip decimal form used in prefix text and CSV output.
std::string format_number(double x);

}  // namespace pexprk
