// Acceptance checks. Each check prints one line "[PASS] ..." or "[FAIL] ...".
//   acceptance            run every check except the Gray-Scott convergence cells
//   acceptance <id>       run one check (1-4, 6-9)
//   acceptance reference <cache-dir>
//   acceptance 5 <partition> <order> <cache-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pexprk/errors.hpp"
#include "pexprk/krylov.hpp"
#include "pexprk/order_conditions.hpp"
#include "pexprk/phi.hpp"
#include "pexprk/problems.hpp"
#include "pexprk/study.hpp"

using namespace pexprk;

namespace {

// Tolerances and budgets.
constexpr double kEquivalenceTol = 1e-10;
constexpr double kEquivalenceBudget = 10.0;
constexpr double kOrderConditionTol = 1e-10;
constexpr double kNonVacuityFloor = 1e-3;
constexpr double kOrderConditionBudget = 10.0;
constexpr double kLinearKrylovTol = 1e-10;
constexpr double kLinearBudget = 10.0;
constexpr double kKrylovFactor = 10.0;
constexpr double kKrylovBudget = 5.0;
constexpr double kOrderBand = 0.4;
constexpr double kSpeciesTol = 1e-12;
constexpr double kSpeciesBudget = 60.0;
constexpr double kExplicitTol = 1e-13;
constexpr double kExplicitBudget = 5.0;
constexpr double kResidualTol = 1e-9;
constexpr double kResidualBudget = 30.0;
constexpr double kStabilityTol = 1e-12;
constexpr double kStabilityBudget = 1.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool report(const std::string& name, const Outcome& o, double elapsed, double budget) {
  const bool in_time = budget <= 0.0 || elapsed < budget;
  const bool pass = o.pass && in_time;
  std::printf("[%s] %s: %s; %.2f s", pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), elapsed);
  if (budget > 0.0) std::printf(" (budget %.0f s%s)", budget, in_time ? "" : ", exceeded");
  std::printf("\n");
  std::fflush(stdout);
  return pass;
}

double rel_diff(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

KrylovConfig krylov(double tol, int m_max = 100) {
  KrylovConfig k;
  k.tol = tol;
  k.m_max = m_max;
  return k;
}

// Hand-evaluated z = 0 coefficients of the three methods.
struct Butcher {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
};

Butcher classical(int order) {
  if (order == 2) return {{{}, {1.0}}, {0.5, 0.5}};
  if (order == 3) return {{{}, {2.0 / 3.0}, {1.0 / 3.0, 1.0 / 3.0}}, {0.25, 0.0, 0.75}};
  return {{{}, {0.5}, {0.0, 0.5}, {0.0, 0.5, 0.5}, {0.25, 0.125, 0.125, 0.0}}, {1.0 / 6.0, 0.0, 0.0, 1.0 / 6.0, 2.0 / 3.0}};
}

Vector explicit_rk(const Butcher& t, const Rhs& f, const Vector& y, double h) {
  std::vector<Vector> k(t.b.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    Vector stage = y;
    for (std::size_t j = 0; j < i; ++j) stage += h * t.a[i][j] * k[j];
    k[i] = f(stage);
  }
  Vector out = y;
  for (std::size_t i = 0; i < k.size(); ++i) out += h * t.b[i] * k[i];
  return out;
}

Outcome theorem_equivalence() {
  Outcome o;
  double worst = 0.0;
  const double h = 0.05;
  const KrylovConfig cfg = krylov(1e-13);
  for (int order = 2; order <= 4; ++order) {
    OriginalStepper orig(exprk_tableau(order));
    TransformedStepper tran(transform(exprk_tableau(order)));
    for (unsigned seed = 0; seed < 20; ++seed) {
      SemilinearOracle p = oracle_semilinear(12, seed);
      OperatorPtr l = p.linear();
      Rhs f = [&p](const Vector& u) { return p.rhs(u); };
      const Vector a = orig.step(f, *l, p.u0, h, cfg);
      const Vector b = tran.step(f, *l, p.u0, h, cfg);
      worst = std::max(worst, rel_diff(b, a));
    }
  }
  o.pass = worst <= kEquivalenceTol;
  o.detail = "max relative difference " + fmt("%.3e", worst) + " over 20 seeds x orders 2-4 (tol " +
             fmt("%.0e", kEquivalenceTol) + ")";
  return o;
}

Outcome order_conditions() {
  Outcome o;
  std::string worst_label;
  double worst = 0.0, worst_weak = 0.0, vacuity = std::numeric_limits<double>::infinity();
  for (int order = 2; order <= 4; ++order) {
    ExprkTableau tab = exprk_tableau(order);
    for (unsigned seed = 0; seed < 10; ++seed) {
      for (const auto& r : check_order_conditions(tab, order, 6, seed)) {
        if (r.strong > worst) {
          worst = r.strong;
          worst_label = "order " + std::to_string(order) + " condition " + r.label;
        }
        worst_weak = std::max(worst_weak, r.weak);
      }
      if (order == 2) {
        for (const auto& r : check_order_conditions(tab, 3, 6, seed))
          if (r.label == "3a") vacuity = std::min(vacuity, r.strong);
      }
    }
  }
  o.pass = worst <= kOrderConditionTol && vacuity >= kNonVacuityFloor;
  o.detail = "max residual " + fmt("%.3e", worst) + (worst_label.empty() ? "" : " at " + worst_label) + " (tol " +
             fmt("%.0e", kOrderConditionTol) + "); with b_j(0) in place of b_j(Z) max " + fmt("%.3e", worst_weak) +
             "; order-2 condition 3a min " + fmt("%.3e", vacuity) + " (floor " + fmt("%.0e", kNonVacuityFloor) + ")";
  return o;
}

Outcome linear_exactness() {
  Outcome o;
  SemilinearOracle p = oracle_semilinear(50, 2024, 0.0);
  const double t = 1.0;
  const Vector exact = expm_dense(Matrix(t * p.l)) * p.u0;
  OperatorPtr l = p.linear();
  Rhs f = [&p](const Vector& u) { return p.rhs(u); };
  LinearBuilder lb = [l](const Vector&) { return l; };
  const KrylovConfig cfg = krylov(kLinearKrylovTol);

  SplitProblem one;
  one.dim = p.dim();
  one.parts = {f};
  one.linear = {lb};
  SplitProblem two = one;
  const Index n = p.dim();
  two.parts.push_back([n](const Vector&) -> Vector { return Vector::Zero(n); });
  two.linear.push_back([n](const Vector&) { return zero(n); });

  std::vector<std::pair<std::string, StepFunction>> forms;
  for (int order = 2; order <= 4; ++order) {
    const std::string s = std::to_string(order);
    forms.emplace_back("orig" + s, make_original_stepper(order, f, lb, cfg));
    forms.emplace_back("tran" + s, make_transformed_stepper(order, f, lb, cfg));
    forms.emplace_back("tran-recursive" + s, make_transformed_stepper(order, f, lb, cfg, CoefficientEvaluation::recursive));
    forms.emplace_back("part" + s, make_partitioned_stepper(order, two, cfg));
    forms.emplace_back("part-recursive" + s, make_partitioned_stepper(order, two, cfg, CoefficientEvaluation::recursive));
  }
  forms.emplace_back("residual2", make_residual_stepper(two, cfg));

  double worst = 0.0;
  std::string where;
  for (const auto& [name, step] : forms) {
    for (int steps : {1, 4, 16}) {
      const double e = rel_diff(integrate_fixed(step, p.u0, 0.0, t, steps).state, exact);
      if (e > worst) {
        worst = e;
        where = name + " with " + std::to_string(steps) + " steps";
      }
    }
  }
  o.pass = worst <= kKrylovFactor * kLinearKrylovTol;
  o.detail = std::to_string(forms.size()) + " stepper forms x {1,4,16} steps, max relative error " + fmt("%.3e", worst) +
             " (" + where + "; tol " + fmt("%.0e", kKrylovFactor * kLinearKrylovTol) + ")";
  return o;
}

Outcome krylov_fidelity() {
  Outcome o;
  double worst_ratio = 0.0;
  for (unsigned seed = 0; seed < 3; ++seed) {
    std::mt19937_64 gen(seed + 100);
    std::normal_distribution<double> nd;
    Matrix a(40, 40);
    for (Index j = 0; j < 40; ++j)
      for (Index i = 0; i < 40; ++i) a(i, j) = nd(gen);
    a = 2.0 * a / std::sqrt(40.0) - 3.0 * Matrix::Identity(40, 40);
    Vector v(40);
    for (Index i = 0; i < 40; ++i) v[i] = nd(gen);
    OperatorPtr op = dense(a);
    for (double tau : {0.5, 1.0}) {
      for (int k = 1; k <= 4; ++k) {
        const Vector want = phi_matrix(k, Matrix(tau * a)) * v;
        for (double tol : {1e-8, 1e-12}) {
          KrylovResult r = phi_times_vector(*op, k, tau, v, krylov(tol));
          const double err = rel_diff(r.approximation, want);
          worst_ratio = std::max(worst_ratio, err / tol);
          if (!r.converged) o.pass = false;
        }
      }
    }
  }
  bool identity_ok = true;
  OperatorPtr id = diagonal(Vector::Ones(40));
  Vector v = Vector::LinSpaced(40, -1.0, 2.0);
  for (int k = 1; k <= 4; ++k) {
    KrylovResult r = phi_times_vector(*id, k, 0.7, v, krylov(1e-12));
    identity_ok = identity_ok && r.dim_used == 1 && rel_diff(r.approximation, phi_scalar(k, 0.7) * v) <= 1e-14;
  }
  o.pass = o.pass && worst_ratio <= kKrylovFactor && identity_ok;
  o.detail = "max error/tol " + fmt("%.3f", worst_ratio) + " (limit " + fmt("%.0f", kKrylovFactor) +
             ") over k=1..4, tol {1e-8,1e-12}; identity operator " + (identity_ok ? "converges at M = 1" : "does not converge at M = 1");
  return o;
}

Outcome species_identity() {
  Outcome o;
  GrayScottModel m = gs_default(32);
  const Vector u0 = gs_initial(m);
  const KrylovConfig cfg = krylov(1e-12, 300);
  const int steps = 8;  // h = T / 2^3
  Rhs f = [m](const Vector& u) { return gs_rhs(m, u); };
  LinearBuilder block = [m](const Vector& u) { return gs_block_jacobian(m, u); };
  double worst = 0.0;
  for (auto mode : {CoefficientEvaluation::expanded, CoefficientEvaluation::recursive}) {
    const Vector a = integrate_fixed(make_transformed_stepper(2, f, block, cfg, mode), u0, 0.0, kGrayScottFinalTime, steps).state;
    const Vector b = integrate_fixed(make_partitioned_stepper(2, gs_partition_species(m), cfg, mode), u0, 0.0,
                                     kGrayScottFinalTime, steps).state;
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  o.pass = worst <= kSpeciesTol;
  o.detail = "max |difference| " + fmt("%.3e", worst) + " at 32x32, order 2, h = T/8 (tol " + fmt("%.0e", kSpeciesTol) + ")";
  return o;
}

Outcome explicit_degeneration() {
  Outcome o;
  double worst = 0.0;
  for (unsigned seed = 0; seed < 5; ++seed) {
    SemilinearOracle p = oracle_semilinear(12, seed);
    const Index n = p.dim();
    const Matrix l = p.l;
    const double eps = p.eps;
    SplitProblem sp;
    sp.dim = n;
    sp.parts = {[l](const Vector& u) -> Vector { return l * u; },
                [eps](const Vector& u) -> Vector { return eps * u.array().sin().matrix(); }};
    sp.linear = {[n](const Vector&) { return zero(n); }, [n](const Vector&) { return zero(n); }};
    Rhs f = [&p](const Vector& u) { return p.rhs(u); };
    for (int order = 2; order <= 4; ++order) {
      for (auto mode : {CoefficientEvaluation::expanded, CoefficientEvaluation::recursive}) {
        TransformedStepper st(exprk_tableau(order), mode);
        Vector a = p.u0, b = p.u0;
        for (int k = 0; k < 4; ++k) {
          a = st.step(sp, a, 0.1, krylov(1e-12));
          b = explicit_rk(classical(order), f, b, 0.1);
        }
        worst = std::max(worst, rel_diff(a, b));
      }
    }
  }
  o.pass = worst <= kExplicitTol;
  o.detail = "max relative difference " + fmt("%.3e", worst) + " vs hand-coded explicit RK, orders 2-4 (tol " +
             fmt("%.0e", kExplicitTol) + ")";
  return o;
}

Outcome residual_equivalence() {
  Outcome o;
  GrayScottModel m = gs_default(16);
  SplitProblem sp = gs_partition_physics(m);
  const KrylovConfig cfg = krylov(1e-12, 300);
  const double h = 1e-3;
  TransformedStepper direct(transform(exprk_tableau(2)));
  Vector a = gs_initial(m), b = a;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    a = direct.step(sp, a, h, cfg);
    b = step_pexprk2_residual(sp, b, h, cfg);
    worst = std::max(worst, rel_diff(b, a));
  }
  o.pass = worst <= kResidualTol;
  o.detail = "max relative difference " + fmt("%.3e", worst) + " over 10 steps of h = 1e-3 on the 16x16 physics split (tol " +
             fmt("%.0e", kResidualTol) + ")";
  return o;
}

Outcome stability_closed_forms() {
  Outcome o;
  double worst = 0.0;
  auto diag_case = [&](const std::vector<double>& d1, const std::vector<double>& d2, double h) {
    const Index n = static_cast<Index>(d1.size());
    Matrix l1 = Matrix::Zero(n, n), l2 = Matrix::Zero(n, n);
    double want = 0.0;
    for (Index i = 0; i < n; ++i) {
      l1(i, i) = d1[i];
      l2(i, i) = d2[i];
      want = std::max(want, std::abs(std::exp(h * d1[i]) + std::exp(h * d2[i]) - 1.0));
    }
    const double got = stability_matrix_spectral_radius(l1, l2, h);
    worst = std::max(worst, std::abs(got - want));
    return got;
  };
  const double r0 = diag_case({0.0, 0.0}, {0.0, 0.0}, 1.0);
  const double r1 = diag_case({-1.0, -5.0, -0.2}, {-2.0, -0.3, -7.0}, 0.5);
  const double r2 = diag_case({-10.0}, {1.0}, 1.0);
  diag_case({-3.0, 0.5}, {-0.25, -4.0}, 2.0);
  const double unstable = std::exp(-10.0) + std::exp(1.0) - 1.0;
  o.pass = worst <= kStabilityTol && std::abs(r0 - 1.0) <= kStabilityTol && r1 < 1.0 && r2 > 1.0 &&
           std::abs(r2 - unstable) <= kStabilityTol;
  o.detail = "max deviation from scalar arithmetic " + fmt("%.3e", worst) + "; e^-10 + e - 1 case gives " +
             fmt("%.12f", r2) + " (tol " + fmt("%.0e", kStabilityTol) + ")";
  return o;
}

RunConfig gray_scott_config(const std::string& cache) {
  RunConfig c;
  c.grid = kGrayScottDeskGrid;
  c.krylov_tol = 1e-12;
  c.pow2_first = 1;
  c.pow2_last = 6;
  c.timing = false;
  c.reference_cache = cache;
  return c;
}

int reference(const std::string& cache) {
  Timer t;
  RunConfig c = gray_scott_config(cache);
  ReferenceSolution r = reference_solution(c);
  std::printf("reference: h_ref = %.6g, self-consistency %.3e, %s; %.1f s\n", r.h_ref, r.self_consistency,
              r.from_cache ? "from cache" : "computed", t.seconds());
  return 0;
}

int convergence_cell(const std::string& partition, int order, const std::string& cache) {
  Timer t;
  RunConfig c = gray_scott_config(cache);
  c.form = Form::part;
  c.partition = parse_partition(partition);
  c.order = order;
  const std::string name = "criterion 5 (" + partition + ", order " + std::to_string(order) + ")";
  Outcome o;
  try {
    StudyResult res = run_convergence_study(c);
    std::string orders;
    double mean = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& r = res.rows[i];
      std::printf("  h = %-9.6g error %.6e order %s%s\n", r.h, r.error_l2,
                  r.observed_order ? fmt("%.4f", *r.observed_order).c_str() : "-",
                  r.failure.empty() ? "" : ("  [" + r.failure + "]").c_str());
      if (i + 3 >= res.rows.size()) {
        orders += (orders.empty() ? "" : ", ") + (r.observed_order ? fmt("%.3f", *r.observed_order) : std::string("n/a"));
        if (r.observed_order) {
          mean += *r.observed_order;
          ++count;
        }
      }
    }
    if (count == 3) {
      mean /= 3.0;
      o.pass = std::abs(mean - order) <= kOrderBand;
      o.detail = "last three observed orders " + orders + ", mean " + fmt("%.3f", mean) + " (required " +
                 std::to_string(order) + " +- " + fmt("%.1f", kOrderBand) + "); reference gate ratio " +
                 fmt("%.2e", res.gate_ratio);
    } else {
      o.pass = false;
      o.detail = "last three observed orders " + orders + " incomplete";
    }
  } catch (const Error& e) {
    o.pass = false;
    o.detail = std::string("study failed: ") + e.what();
  }
  return report(name, o, t.seconds(), 0.0) ? 0 : 1;
}

struct Check {
  const char* id;
  const char* name;
  std::function<Outcome()> run;
  double budget;
};

const std::vector<Check>& checks() {
  static const std::vector<Check> list = {
      {"1", "criterion 1 (original/transformed equivalence)", theorem_equivalence, kEquivalenceBudget},
      {"2", "criterion 2 (stiff order conditions)", order_conditions, kOrderConditionBudget},
      {"3", "criterion 3 (linear exactness)", linear_exactness, kLinearBudget},
      {"4", "criterion 4 (Krylov fidelity)", krylov_fidelity, kKrylovBudget},
      {"6", "criterion 6 (species split identity)", species_identity, kSpeciesBudget},
      {"7", "criterion 7 (explicit degeneration)", explicit_degeneration, kExplicitBudget},
      {"8", "criterion 8 (residual form equivalence)", residual_equivalence, kResidualBudget},
      {"9", "criterion 9 (stability closed forms)", stability_closed_forms, kStabilityBudget},
  };
  return list;
}

bool run_check(const Check& c) {
  Timer t;
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("threw: ") + e.what();
  }
  return report(c.name, o, t.seconds(), c.budget);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty() && args[0] == "reference") return reference(args.size() > 1 ? args[1] : "");
    if (!args.empty() && args[0] == "5") {
      if (args.size() < 3) {
        std::fprintf(stderr, "usage: acceptance 5 <partition> <order> [cache-dir]\n");
        return 2;
      }
      return convergence_cell(args[1], std::stoi(args[2]), args.size() > 3 ? args[3] : "");
    }
    bool all = true;
    bool matched = false;
    for (const auto& c : checks()) {
      if (!args.empty() && args[0] != c.id) continue;
      matched = true;
      all = run_check(c) && all;
    }
    if (!matched) {
      std::fprintf(stderr, "unknown check '%s'\n", args[0].c_str());
      return 2;
    }
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
