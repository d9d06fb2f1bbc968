#include <cmath>
#include <numeric>

#include "pexprk/errors.hpp"
#include "pexprk/problems.hpp"

namespace pexprk {

void GrayScottModel::validate() const {
  if (n < 3) throw ConfigError("Gray-Scott grid side must be at least 3");
  if (!(d_a > 0 && d_b > 0 && feed > 0 && kill > 0)) throw ConfigError("Gray-Scott parameters must be positive");
}

GrayScottModel gs_default(Index n) {
  GrayScottModel m;
  m.n = n;
  m.validate();
  return m;
}

namespace {

void check_length(const GrayScottModel& m, const Vector& u) {
  if (u.size() != m.dim())
    throw ContractViolation("Gray-Scott state must have length " + std::to_string(m.dim()) + ", got " +
                            std::to_string(u.size()));
}

/// out = d * (discrete periodic Laplacian of the field x).
void add_laplacian(Index n, double d, const double* x, double* out) {
  const double w = d * static_cast<double>(n) * static_cast<double>(n);
  for (Index iy = 0; iy < n; ++iy) {
    const Index up = ((iy + 1) % n) * n;
    const Index down = ((iy + n - 1) % n) * n;
    const Index row = iy * n;
    for (Index ix = 0; ix < n; ++ix) {
      const Index right = (ix + 1) % n;
      const Index left = (ix + n - 1) % n;
      out[row + ix] +=
          w * (x[row + left] + x[row + right] + x[down + ix] + x[up + ix] - 4.0 * x[row + ix]);
    }
  }
}

SparseRowMatrix diagonal_matrix(const Vector& d) {
  SparseRowMatrix m(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Species-diagonal Jacobian blocks: d_a Lap - diag(b^2) - f I and d_b Lap + diag(2ab) - (f+k) I.
SparseRowMatrix block_aa(const GrayScottModel& m, const Vector& u) {
  const Index q = m.nodes();
  Vector b = u.segment(q, q);
  SparseRowMatrix lap = laplacian_2d_periodic_matrix(m.n, m.d_a);
  Vector d = -(b.array().square() + m.feed).matrix();
  return SparseRowMatrix(lap + diagonal_matrix(d));
}

SparseRowMatrix block_bb(const GrayScottModel& m, const Vector& u) {
  const Index q = m.nodes();
  Vector a = u.head(q), b = u.segment(q, q);
  SparseRowMatrix lap = laplacian_2d_periodic_matrix(m.n, m.d_b);
  Vector d = (2.0 * a.array() * b.array() - (m.feed + m.kill)).matrix();
  return SparseRowMatrix(lap + diagonal_matrix(d));
}

}  // namespace

Vector gs_initial(const GrayScottModel& m) {
  m.validate();
  const Index n = m.n, q = m.nodes();
  Vector u(m.dim());
  for (Index iy = 0; iy < n; ++iy) {
    const double y = (static_cast<double>(iy) + 0.5) / static_cast<double>(n);
    for (Index ix = 0; ix < n; ++ix) {
      const double x = (static_cast<double>(ix) + 0.5) / static_cast<double>(n);
      const double base = 0.4 + 0.1 * (x + y);
      u[iy * n + ix] = base + 0.1 * std::sin(10.0 * x) * std::sin(20.0 * y);
      u[q + iy * n + ix] = base + 0.1 * std::cos(10.0 * x) * std::cos(20.0 * y);
    }
  }
  return u;
}

Vector gs_diffusion(const GrayScottModel& m, const Vector& u) {
  check_length(m, u);
  const Index q = m.nodes();
  Vector out = Vector::Zero(m.dim());
  add_laplacian(m.n, m.d_a, u.data(), out.data());
  add_laplacian(m.n, m.d_b, u.data() + q, out.data() + q);
  return out;
}

Vector gs_reaction(const GrayScottModel& m, const Vector& u) {
  check_length(m, u);
  const Index q = m.nodes();
  Vector out(m.dim());
  for (Index i = 0; i < q; ++i) {
    const double a = u[i], b = u[q + i];
    const double abb = a * b * b;
    out[i] = -abb + m.feed * (1.0 - a);
    out[q + i] = abb - (m.feed + m.kill) * b;
  }
  return out;
}

Vector gs_rhs(const GrayScottModel& m, const Vector& u) { return gs_diffusion(m, u) + gs_reaction(m, u); }

SparseRowMatrix gs_reaction_jacobian_matrix(const GrayScottModel& m, const Vector& u) {
  check_length(m, u);
  const Index q = m.nodes();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * q);
  for (Index i = 0; i < q; ++i) {
    const double a = u[i], b = u[q + i];
    t.emplace_back(i, i, -b * b - m.feed);
    t.emplace_back(i, q + i, -2.0 * a * b);
    t.emplace_back(q + i, i, b * b);
    t.emplace_back(q + i, q + i, 2.0 * a * b - (m.feed + m.kill));
  }
  SparseRowMatrix j(m.dim(), m.dim());
  j.setFromTriplets(t.begin(), t.end());
  return j;
}

SparseRowMatrix gs_jacobian_matrix(const GrayScottModel& m, const Vector& u) {
  check_length(m, u);
  const Index q = m.nodes();
  SparseRowMatrix la = laplacian_2d_periodic_matrix(m.n, m.d_a);
  SparseRowMatrix lb = laplacian_2d_periodic_matrix(m.n, m.d_b);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * la.nonZeros());
  for (Index r = 0; r < q; ++r) {
    for (SparseRowMatrix::InnerIterator it(la, r); it; ++it) t.emplace_back(r, it.col(), it.value());
    for (SparseRowMatrix::InnerIterator it(lb, r); it; ++it) t.emplace_back(q + r, q + it.col(), it.value());
  }
  SparseRowMatrix lap(m.dim(), m.dim());
  lap.setFromTriplets(t.begin(), t.end());
  return SparseRowMatrix(lap + gs_reaction_jacobian_matrix(m, u));
}

OperatorPtr gs_jacobian(const GrayScottModel& m, const Vector& u) { return sparse(gs_jacobian_matrix(m, u)); }

OperatorPtr gs_block_jacobian(const GrayScottModel& m, const Vector& u) {
  check_length(m, u);
  return block_diagonal({sparse(block_aa(m, u)), sparse(block_bb(m, u))});
}

SplitProblem gs_partition_species(const GrayScottModel& m) {
  m.validate();
  const Index q = m.nodes();
  SplitProblem p;
  p.dim = m.dim();
  p.parts = {[m, q](const Vector& u) {
               Vector r = gs_rhs(m, u);
               r.tail(q).setZero();
               return r;
             },
             [m, q](const Vector& u) {
               Vector r = gs_rhs(m, u);
               r.head(q).setZero();
               return r;
             }};
  p.linear = {[m, q](const Vector& u) {
                check_length(m, u);
                return block_diagonal({sparse(block_aa(m, u)), zero(q)});
              },
              [m, q](const Vector& u) {
                check_length(m, u);
                return block_diagonal({zero(q), sparse(block_bb(m, u))});
              }};
  p.full = [m](const Vector& u) { return gs_rhs(m, u); };
  return p;
}

std::vector<Index> gs_space_permutation(const GrayScottModel& m) {
  const Index q = m.nodes(), half = q / 2;
  std::vector<Index> perm;
  perm.reserve(m.dim());
  for (Index i = 0; i < half; ++i) perm.push_back(i);
  for (Index i = 0; i < half; ++i) perm.push_back(q + i);
  for (Index i = half; i < q; ++i) perm.push_back(i);
  for (Index i = half; i < q; ++i) perm.push_back(q + i);
  return perm;
}

SplitProblem gs_partition_space(const GrayScottModel& m) {
  m.validate();
  if (m.n % 2 != 0) throw ConfigError("the spatial split needs an even grid side, got " + std::to_string(m.n));
  const Index dim = m.dim(), half = dim / 2;
  auto perm = std::make_shared<const std::vector<Index>>(gs_space_permutation(m));
  SplitProblem p;
  p.dim = dim;
  for (int side = 0; side < 2; ++side) {
    const Index first = side == 0 ? 0 : half;
    const Index last = side == 0 ? half : dim;
    auto rows = std::make_shared<const std::vector<Index>>(perm->begin() + first, perm->begin() + last);
    p.parts.push_back([m, rows](const Vector& u) {
      Vector r = gs_rhs(m, u);
      Vector out = Vector::Zero(r.size());
      for (Index i : *rows) out[i] = r[i];
      return out;
    });
    p.linear.push_back([m, perm, rows, first, last, dim](const Vector& u) {
      OperatorPtr sub = permuted_subblock(gs_jacobian(m, u), *perm, first, last);
      return embedded(sub, *rows, dim);
    });
  }
  p.full = [m](const Vector& u) { return gs_rhs(m, u); };
  return p;
}

SplitProblem gs_partition_physics(const GrayScottModel& m) {
  m.validate();
  OperatorPtr diffusion = block_diagonal(
      {sparse(laplacian_2d_periodic_matrix(m.n, m.d_a)), sparse(laplacian_2d_periodic_matrix(m.n, m.d_b))});
  SplitProblem p;
  p.dim = m.dim();
  p.parts = {[m](const Vector& u) { return gs_diffusion(m, u); }, [m](const Vector& u) { return gs_reaction(m, u); }};
  p.linear = {[m, diffusion](const Vector& u) {
                check_length(m, u);
                return diffusion;
              },
              [m](const Vector& u) { return sparse(gs_reaction_jacobian_matrix(m, u)); }};
  p.full = [m](const Vector& u) { return gs_rhs(m, u); };
  return p;
}

SplitProblem gs_partition_imex(const GrayScottModel& m) {
  SplitProblem p = gs_partition_physics(m);
  const Index dim = m.dim();
  p.linear[1] = [m, dim](const Vector& u) {
    check_length(m, u);
    return zero(dim);
  };
  return p;
}

}  // namespace pexprk
