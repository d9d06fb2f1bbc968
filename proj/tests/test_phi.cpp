#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "pexprk/phi.hpp"

using pexprk::phi_scalar;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

MatrixXd random_matrix(int n, unsigned seed, double scale) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = scale * dist(gen);
  return a;
}

// Truncated power series sum_{i<=terms} A^i e_1 / (k+i)!
VectorXd series_phi_e1(const MatrixXd& a, int k, int terms) {
  VectorXd term = VectorXd::Unit(a.rows(), 0);
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  VectorXd sum = term / fact;
  for (int i = 1; i <= terms; ++i) {
    term = a * term;
    fact *= (k + i);
    sum += term / fact;
  }
  return sum;
}

}  // namespace

TEST_CASE("phi_scalar hits the tabulated values") {
  CHECK(phi_scalar(0, 0.0) == 1.0);
  CHECK(phi_scalar(3, 0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  // truncated-series oracle sum_{i=0}^{30} 1/(1+i)!
  double oracle = 0.0, fact = 1.0;
  for (int i = 0; i <= 30; ++i) {
    fact *= (1 + i);
    oracle += 1.0 / fact;
  }
  CHECK(rel(phi_scalar(1, 1.0), oracle) <= 1e-14);

  // 40-digit quadrature of the integral representation.
  struct Ref { int k; double z; double value; };
  const Ref refs[] = {
      {1, -20.0, 0.049999999896942318878}, {2, -20.0, 0.047500000005152884056},
      {4, -20.0, 0.0072020833333462155435}, {3, 0.7, 0.20044521128418810722},
      {6, -3.5, 0.00091132067312396805226}, {1, 0.49, 1.2904412652150591165},
      {2, 5.0, 5.6965263641030641368},     {8, -0.6, 0.000023242201831748610727},
      {4, -300.0, 0.00055003691358024691358}};
  for (const auto& r : refs) {
    CAPTURE(r.k);
    CAPTURE(r.z);
    CHECK(rel(phi_scalar(r.k, r.z), r.value) <= 1e-14);
  }
}

TEST_CASE("phi_scalar rejects non-finite arguments") {
  CHECK_THROWS_AS(phi_scalar(1, std::nan("")), pexprk::DomainError);
  CHECK_THROWS_AS(phi_scalar(2, INFINITY), pexprk::DomainError);
}

TEST_CASE("phi recurrence holds away from zero") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> dist(-20.0, 20.0);
  for (int trial = 0; trial < 400; ++trial) {
    double z = dist(gen);
    if (std::abs(z) < 1e-3) continue;
    for (int k = 1; k <= 6; ++k) {
      double kfact = 1.0;
      for (int i = 2; i <= k; ++i) kfact *= i;
      const double next = phi_scalar(k + 1, z);
      const double rec = (phi_scalar(k, z) - 1.0 / kfact) / z;
      CHECK(std::abs(next - rec) <= 1e-12 * std::max(1.0, std::abs(next)));
    }
  }
  // The z -> 0 limit goes through the series branch.
  for (int k = 1; k <= 8; ++k) {
    double kfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    CHECK(phi_scalar(k, 1e-12) == doctest::Approx(1.0 / kfact).epsilon(1e-11));
  }
}

TEST_CASE("expm_dense closed forms") {
  CHECK(pexprk::expm_dense(MatrixXd::Zero(2, 2)).isApprox(MatrixXd::Identity(2, 2), 1e-15));

  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -2.0;
  const MatrixXd ed = pexprk::expm_dense(d);
  CHECK(rel(ed(0, 0), std::exp(1.0)) <= 1e-15);
  CHECK(rel(ed(1, 1), std::exp(-2.0)) <= 1e-15);
  CHECK(ed(0, 1) == 0.0);

  MatrixXd nil(2, 2);
  nil << 0, 1, 0, 0;
  MatrixXd want(2, 2);
  want << 1, 1, 0, 1;
  CHECK((pexprk::expm_dense(nil) - want).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("expm_dense agrees with an independent implementation") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const double scale = 0.5 * seed;  // 1-norms up to ~50 at n=10
    const MatrixXd a = random_matrix(10, seed, scale);
    const MatrixXd mine = pexprk::expm_dense(a);
    const MatrixXd theirs = a.exp();
    CAPTURE(seed);
    CHECK((mine - theirs).norm() / theirs.norm() <= 1e-13);
  }
}

TEST_CASE("expm(A) expm(-A) is the identity") {
  for (unsigned seed = 20; seed < 30; ++seed) {
    MatrixXd a = random_matrix(6, seed, 1.0);
    a *= 5.0 / a.cwiseAbs().colwise().sum().maxCoeff();
    const MatrixXd prod = pexprk::expm_dense(a) * pexprk::expm_dense(MatrixXd(-a));
    CHECK((prod - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("expm_dense reports overflow and bad shapes") {
  MatrixXd big = MatrixXd::Identity(2, 2) * 1e4;
  CHECK_THROWS_AS(pexprk::expm_dense(big), pexprk::EvaluationFailure);
  CHECK_THROWS_AS(pexprk::expm_dense(MatrixXd::Zero(2, 3)), pexprk::ContractViolation);
}

TEST_CASE("phi_dense_times_e1") {
  SUBCASE("zero matrix gives 1/k! e_1") {
    const auto w = pexprk::phi_dense_times_e1(2, MatrixXd::Zero(3, 3));
    REQUIRE(w.size() == 2);
    CHECK(w[0].isApprox(VectorXd::Unit(3, 0)));
    CHECK(w[1].isApprox(0.5 * VectorXd::Unit(3, 0)));
  }
  SUBCASE("scalar case") {
    const auto w = pexprk::phi_dense_times_e1(1, MatrixXd::Constant(1, 1, 1.0));
    CHECK(rel(w[0](0), std::exp(1.0) - 1.0) <= 1e-14);
  }
  SUBCASE("random 5x5 against the power series") {
    const MatrixXd a = random_matrix(5, 7, 1.0);
    const auto w = pexprk::phi_dense_times_e1(4, a);
    for (int k = 1; k <= 4; ++k) {
      CAPTURE(k);
      CHECK((w[k - 1] - series_phi_e1(a, k, 40)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("phi_matrix obeys the matrix recurrence") {
  for (unsigned seed = 40; seed < 45; ++seed) {
    const MatrixXd a = random_matrix(6, seed, 1.0) - 2.0 * MatrixXd::Identity(6, 6);
    const MatrixXd inv = a.inverse();
    double fact = 1.0;
    MatrixXd prev = pexprk::phi_matrix(0, a);
    for (int k = 1; k <= 4; ++k) {
      const MatrixXd next = (prev - MatrixXd::Identity(6, 6) / fact) * inv;
      const auto cols = pexprk::phi_dense_times_e1(k, a);
      CHECK((cols[k - 1] - next.col(0)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((pexprk::phi_matrix(k, a) - next).cwiseAbs().maxCoeff() <= 1e-10);
      prev = next;
      fact *= k;
    }
  }
}
