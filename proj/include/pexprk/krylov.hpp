#pragma once

// Adaptive Arnoldi approximation of phi_k(tau L) v ~ ||v|| V_M phi_k(tau H_M) e_1.

#include <cstdint>
#include <span>
#include <vector>

#include "pexprk/operators.hpp"

namespace pexprk {

struct KrylovConfig {
  double tol = 1e-12;  ///< relative stopping tolerance on the phi_1 error estimate
  int m_max = 100;
  std::vector<int> check_schedule;  ///< empty means default_check_schedule(m_max)

  /// Throws ContractViolation if tol <= 0, m_max < 1, or the schedule is malformed.
  void validate() const;
  std::vector<int> schedule() const;
};

/// m_1 = 1, m_{j+1} = smallest m > m_j with m^3 >= sum_{i<=j} m_i^3, ending at m_max.
std::vector<int> default_check_schedule(int m_max);

struct KrylovResult {
  Vector approximation;
  int dim_used = 0;
  std::uint64_t matvecs = 0;
  double est_error = 0.0;  ///< relative
  bool converged = true;
  Matrix basis;       ///< N x M, orthonormal columns
  Matrix hessenberg;  ///< M x M
  double next_subdiagonal = 0.0;  ///< h_{M+1,M}
  Vector next_basis;              ///< v_{M+1} (empty after a lucky breakdown)
};

/// One Arnoldi decomposition of (L, v), grown until the phi_1 estimate at
/// tau_check drops below the tolerance, and then reused for any (k, tau) with
/// tau <= tau_check.
class KrylovProjection {
 public:
  KrylovProjection(const LinearOperator& op, const Eigen::Ref<const Vector>& v, double tau_check, const KrylovConfig& cfg);

  struct Request {
    int k;
    double tau;
  };
  /// phi_k(tau L) v for every request, one augmented exponential per distinct tau.
  std::vector<Vector> evaluate(std::span<const Request> requests) const;
  Vector evaluate(int k, double tau) const;

  int dim() const { return m_; }
  bool converged() const { return converged_; }
  double est_error() const { return est_error_; }
  std::uint64_t matvecs() const { return matvecs_; }
  bool lucky_breakdown() const { return breakdown_; }
  double norm() const { return beta_; }

  Matrix basis() const { return v_.leftCols(m_); }
  Matrix hessenberg() const { return h_.topLeftCorner(m_, m_); }
  double next_subdiagonal() const { return breakdown_ ? 0.0 : h_(m_, m_ - 1); }
  Vector next_basis() const { return breakdown_ ? Vector() : Vector(v_.col(m_)); }

 private:
  void extend(const LinearOperator& op);
  double estimate(double tau) const;

  Index n_ = 0;
  double beta_ = 0.0;
  int m_ = 0;
  bool converged_ = true;
  bool breakdown_ = false;
  double est_error_ = 0.0;
  std::uint64_t matvecs_ = 0;
  Matrix v_;
  Matrix h_;
};

/// w ~ phi_k(tau L) v with relative error estimate <= cfg.tol, or converged = false
/// with the best iterate at m_max. v = 0 returns w = 0 with M = 0.
KrylovResult phi_times_vector(const LinearOperator& op, int k, double tau, const Eigen::Ref<const Vector>& v,
                              const KrylovConfig& cfg = {});

}  // namespace pexprk
