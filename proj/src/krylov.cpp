#include "pexprk/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "pexprk/errors.hpp"
#include "pexprk/phi.hpp"

namespace pexprk {

namespace {

constexpr double kReorthogonalizeAbove = 1e-8;
constexpr double kBreakdownRelative = 1e-13;

}  // namespace

void KrylovConfig::validate() const {
  if (!(tol > 0.0)) throw ContractViolation("KrylovConfig: tol must be positive");
  if (m_max < 1) throw ContractViolation("KrylovConfig: m_max must be at least 1");
  if (!check_schedule.empty()) {
    for (std::size_t i = 0; i < check_schedule.size(); ++i) {
      if (check_schedule[i] < 1 || (i > 0 && check_schedule[i] <= check_schedule[i - 1])) {
        throw ContractViolation("KrylovConfig: check schedule must be strictly increasing and positive");
      }
    }
    if (check_schedule.back() != m_max) throw ContractViolation("KrylovConfig: check schedule must end at m_max");
  }
}

std::vector<int> KrylovConfig::schedule() const {
  return check_schedule.empty() ? default_check_schedule(m_max) : check_schedule;
}

std::vector<int> default_check_schedule(int m_max) {
  if (m_max < 1) throw ContractViolation("default_check_schedule: m_max must be at least 1");
  std::vector<int> out{1};
  double cost = 1.0;
  while (out.back() < m_max) {
    int m = out.back() + 1;
    while (static_cast<double>(m) * m * m < cost) ++m;
    m = std::min(m, m_max);
    out.push_back(m);
    cost += static_cast<double>(m) * m * m;
  }
  return out;
}

KrylovProjection::KrylovProjection(const LinearOperator& op, const Eigen::Ref<const Vector>& v, double tau_check,
                                   const KrylovConfig& cfg) {
  if (v.size() != op.dim()) throw ContractViolation("phi_times_vector: vector length does not match operator dimension");
  cfg.validate();
  n_ = op.dim();
  beta_ = v.norm();
  if (!std::isfinite(beta_)) throw KrylovFailure("phi_times_vector: non-finite input vector");
  if (beta_ == 0.0) return;

  const int n = static_cast<int>(op.dim());
  const int m_cap = std::min(cfg.m_max, n);
  std::vector<int> checks;
  for (int m : cfg.schedule())
    if (m < m_cap) checks.push_back(m);
  checks.push_back(m_cap);

  const int initial = std::min(m_cap, 32) + 1;
  v_.resize(n, initial);
  h_ = Matrix::Zero(initial, initial - 1);
  v_.col(0) = v / beta_;

  std::size_t next_check = 0;
  while (true) {
    extend(op);
    if (breakdown_) {
      est_error_ = 0.0;
      converged_ = true;
      return;
    }
    if (m_ == checks[next_check]) {
      est_error_ = estimate(tau_check);
      if (!std::isfinite(est_error_)) throw KrylovFailure("phi_times_vector: non-finite error estimate");
      if (est_error_ <= cfg.tol) {
        converged_ = true;
        return;
      }
      if (m_ == m_cap) {
        converged_ = false;
        return;
      }
      ++next_check;
    }
  }
}

void KrylovProjection::extend(const LinearOperator& op) {
  const int j = m_;
  if (v_.cols() < j + 2) {
    const Index cols = std::max<Index>(j + 2, 2 * v_.cols());
    v_.conservativeResize(Eigen::NoChange, cols);
    Matrix h = Matrix::Zero(cols, cols - 1);
    h.topLeftCorner(h_.rows(), h_.cols()) = h_;
    h_ = std::move(h);
  }
  auto w = v_.col(j + 1);
  op.apply(v_.col(j), w);
  ++matvecs_;
  if (!w.allFinite()) throw KrylovFailure("phi_times_vector: non-finite entries in the Krylov basis");

  // Modified Gram-Schmidt.
  for (int i = 0; i <= j; ++i) {
    const double hij = v_.col(i).dot(w);
    h_(i, j) = hij;
    w -= hij * v_.col(i);
  }
  double hnext = w.norm();
  double scale = h_.col(j).head(j + 1).cwiseAbs().maxCoeff();
  scale = std::max(scale, hnext);
  if (hnext <= kBreakdownRelative * scale || hnext == 0.0) {
    m_ = j + 1;
    breakdown_ = true;
    return;
  }
  // One reorthogonalization pass when the new direction has lost orthogonality.
  const Vector overlap = v_.leftCols(j + 1).transpose() * (w / hnext);
  if (overlap.cwiseAbs().maxCoeff() > kReorthogonalizeAbove) {
    const Vector correction = hnext * overlap;
    w.noalias() -= v_.leftCols(j + 1) * correction;
    h_.col(j).head(j + 1) += correction;
    hnext = w.norm();
    if (hnext <= kBreakdownRelative * scale || hnext == 0.0) {
      m_ = j + 1;
      breakdown_ = true;
      return;
    }
  }
  h_(j + 1, j) = hnext;
  w /= hnext;
  if (!w.allFinite()) throw KrylovFailure("phi_times_vector: non-finite entries in the Krylov basis");
  m_ = j + 1;
}

double KrylovProjection::estimate(double tau) const {
  const Matrix hm = tau * h_.topLeftCorner(m_, m_);
  const Matrix cols = phi_columns(hm, 1);
  const auto y = cols.col(1);
  const double ynorm = y.norm();
  if (ynorm == 0.0) return 0.0;
  return std::abs(tau) * h_(m_, m_ - 1) * std::abs(y(m_ - 1)) / ynorm;
}

std::vector<Vector> KrylovProjection::evaluate(std::span<const Request> requests) const {
  std::vector<Vector> out(requests.size());
  if (beta_ == 0.0) {
    for (auto& o : out) o = Vector::Zero(n_);
    return out;
  }
  std::map<double, int> max_k;
  for (const auto& r : requests) {
    if (r.k < 0) throw ContractViolation("KrylovProjection: negative phi index");
    auto [it, inserted] = max_k.emplace(r.tau, r.k);
    if (!inserted) it->second = std::max(it->second, r.k);
  }
  const Matrix hm = h_.topLeftCorner(m_, m_);
  std::map<double, Matrix> reduced;
  for (const auto& [tau, k] : max_k) reduced.emplace(tau, phi_columns(Matrix(tau * hm), k));
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& cols = reduced.at(requests[i].tau);
    out[i].noalias() = beta_ * (v_.leftCols(m_) * cols.col(requests[i].k));
  }
  return out;
}

Vector KrylovProjection::evaluate(int k, double tau) const {
  const Request r{k, tau};
  return evaluate(std::span<const Request>(&r, 1)).front();
}

KrylovResult phi_times_vector(const LinearOperator& op, int k, double tau, const Eigen::Ref<const Vector>& v,
                              const KrylovConfig& cfg) {
  if (k < 1) throw ContractViolation("phi_times_vector: phi index must be at least 1");
  KrylovProjection proj(op, v, tau, cfg);
  KrylovResult r;
  r.dim_used = proj.dim();
  r.matvecs = proj.matvecs();
  r.est_error = proj.est_error();
  r.converged = proj.converged();
  if (proj.dim() == 0) {
    r.approximation = Vector::Zero(v.size());
    r.basis = Matrix(v.size(), 0);
    r.hessenberg = Matrix(0, 0);
    return r;
  }
  r.approximation = proj.evaluate(k, tau);
  r.basis = proj.basis();
  r.hessenberg = proj.hessenberg();
  r.next_subdiagonal = proj.next_subdiagonal();
  r.next_basis = proj.next_basis();
  return r;
}

}  // namespace pexprk
