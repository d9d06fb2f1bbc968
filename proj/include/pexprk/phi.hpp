#pragma once

// Scalar and small dense evaluation of the exponential-integrator phi functions
//   phi_0(z) = exp(z),  phi_k(z) = sum_i z^i / (k+i)!,  phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.
// Everything here works on dense Eigen matrices and is templated on the scalar type.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pexprk/errors.hpp"

namespace pexprk {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <typename Scalar>
Scalar factorial(int k) {
  Scalar f(1);
  for (int i = 2; i <= k; ++i) f *= Scalar(i);
  return f;
}

template <typename Derived>
typename Derived::Scalar one_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Diagonal Pade approximant r_m(A) = q_m(A)^{-1} p_m(A) for m in {3,5,7,9,13}.
template <typename Scalar>
DenseMatrix<Scalar> pade(const DenseMatrix<Scalar>& a, int m) {
  using Mat = DenseMatrix<Scalar>;
  const auto n = a.rows();
  const Mat ident = Mat::Identity(n, n);
  const Mat a2 = a * a;
  Mat u, v;
  if (m == 13) {
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    const Mat a4 = a2 * a2;
    const Mat a6 = a4 * a2;
    const Mat w1 = Scalar(b[13]) * a6 + Scalar(b[11]) * a4 + Scalar(b[9]) * a2;
    const Mat w2 = Scalar(b[7]) * a6 + Scalar(b[5]) * a4 + Scalar(b[3]) * a2 + Scalar(b[1]) * ident;
    u = a * (a6 * w1 + w2);
    const Mat z1 = Scalar(b[12]) * a6 + Scalar(b[10]) * a4 + Scalar(b[8]) * a2;
    v = a6 * z1 + Scalar(b[6]) * a6 + Scalar(b[4]) * a4 + Scalar(b[2]) * a2 + Scalar(b[0]) * ident;
  } else {
    std::vector<double> b;
    switch (m) {
      case 3: b = {120.0, 60.0, 12.0, 1.0}; break;
      case 5: b = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0}; break;
      case 7: b = {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0}; break;
      default:
        b = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
             2162160.0,     110880.0,     3960.0,       90.0,        1.0};
    }
    Mat power = ident;
    Mat uu = Scalar(b[1]) * ident;
    v = Scalar(b[0]) * ident;
    for (int j = 1; 2 * j <= m; ++j) {
      power = power * a2;
      v += Scalar(b[2 * j]) * power;
      uu += Scalar(b[2 * j + 1]) * power;
    }
    u = a * uu;
  }
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a diagonal Pade approximant
/// (degree chosen from the 1-norm, up to 13). Throws EvaluationFailure if the
/// result is not finite.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> expm_dense(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  using Mat = DenseMatrix<Scalar>;
  if (input.rows() != input.cols()) throw ContractViolation("expm_dense: matrix must be square");
  if (!input.allFinite()) throw DomainError("expm_dense: non-finite entries");
  const auto n = input.rows();
  if (n == 0) return Mat(0, 0);

  const Mat a = input;
  const Scalar norm = detail::one_norm(a);
  static constexpr std::array<double, 4> theta = {1.495585217958292e-2, 2.539398330063230e-1,
                                                  9.504178996162932e-1, 2.097847961257068e0};
  static constexpr std::array<int, 4> degree = {3, 5, 7, 9};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (norm <= Scalar(theta[i])) return detail::pade<Scalar>(a, degree[i]);
  }
  constexpr double theta13 = 5.371920351148152;
  int squarings = 0;
  if (norm > Scalar(theta13)) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(static_cast<double>(norm) / theta13))));
  }
  Mat r = detail::pade<Scalar>(a / std::ldexp(Scalar(1), squarings), 13);
  for (int i = 0; i < squarings; ++i) r = r * r;
  if (!r.allFinite()) throw EvaluationFailure("expm_dense: overflow (1-norm " + std::to_string(static_cast<double>(norm)) + ")");
  return r;
}

/// Columns phi_0(A) e_1, phi_1(A) e_1, ..., phi_p(A) e_1 from one exponential of
///   [ A  e_1 0 ]
///   [ 0   J_p  ]   with J_p the p x p upper shift.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> phi_columns(const Eigen::MatrixBase<Derived>& a, int p) {
  using Scalar = typename Derived::Scalar;
  using Mat = DenseMatrix<Scalar>;
  if (a.rows() != a.cols()) throw ContractViolation("phi_columns: matrix must be square");
  if (p < 0) throw ContractViolation("phi_columns: negative phi index");
  const auto n = a.rows();
  Mat aug = Mat::Zero(n + p, n + p);
  aug.topLeftCorner(n, n) = a;
  if (p > 0) {
    aug(0, n) = Scalar(1);
    for (int j = 0; j + 1 < p; ++j) aug(n + j, n + j + 1) = Scalar(1);
  }
  const Mat e = expm_dense(aug);
  Mat out(n, p + 1);
  out.col(0) = e.topLeftCorner(n, n).col(0);
  if (p > 0) out.rightCols(p) = e.block(0, n, n, p);
  return out;
}

/// w_k = phi_k(A) e_1 for k = 1..p.
template <typename Derived>
std::vector<DenseVector<typename Derived::Scalar>> phi_dense_times_e1(int p, const Eigen::MatrixBase<Derived>& a) {
  const auto cols = phi_columns(a, p);
  std::vector<DenseVector<typename Derived::Scalar>> out;
  out.reserve(static_cast<std::size_t>(p));
  for (int k = 1; k <= p; ++k) out.emplace_back(cols.col(k));
  return out;
}

/// Full matrix phi_k(A), via the block augmentation [[A, I, 0..], [0, 0, I, ..], ...].
template <typename Derived>
DenseMatrix<typename Derived::Scalar> phi_matrix(int k, const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Mat = DenseMatrix<Scalar>;
  if (a.rows() != a.cols()) throw ContractViolation("phi_matrix: matrix must be square");
  if (k < 0) throw ContractViolation("phi_matrix: negative phi index");
  const auto n = a.rows();
  if (k == 0) return expm_dense(a);
  Mat aug = Mat::Zero(n * (k + 1), n * (k + 1));
  aug.topLeftCorner(n, n) = a;
  for (int j = 0; j < k; ++j) aug.block(n * j, n * (j + 1), n, n).setIdentity();
  return expm_dense(aug).block(0, n * k, n, n);
}

inline constexpr double kPhiSeriesSwitch = 0.5;
inline constexpr int kPhiSeriesTerms = 25;

/// phi_k(z) for real z. Series below |z| < 0.5, augmented 1x1 exponential above.
template <typename Scalar>
Scalar phi_scalar(int k, Scalar z) {
  using std::abs;
  if (k < 0) throw ContractViolation("phi_scalar: negative phi index");
  if (!std::isfinite(static_cast<double>(z))) throw DomainError("phi_scalar: non-finite argument");
  if (k == 0) return std::exp(z);
  if (abs(z) < Scalar(kPhiSeriesSwitch)) {
    // Horner on sum_i z^i/(k+i)! = 1/k! (1 + z/(k+1) (1 + z/(k+2) (...)))
    Scalar acc(1);
    for (int i = kPhiSeriesTerms - 1; i >= 1; --i) acc = Scalar(1) + z * acc / Scalar(k + i);
    return acc / detail::factorial<Scalar>(k);
  }
  DenseMatrix<Scalar> one(1, 1);
  one(0, 0) = z;
  return phi_columns(one, k)(0, k);
}

}  // namespace pexprk
