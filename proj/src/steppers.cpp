#include "pexprk/steppers.hpp"

#include <Eigen/Eigenvalues>

#include "pexprk/errors.hpp"
#include "pexprk/phi.hpp"

namespace pexprk {

StepStats& StepStats::operator+=(const StepStats& o) {
  matvecs += o.matvecs;
  krylov_dims += o.krylov_dims;
  krylov_calls += o.krylov_calls;
  rhs_evals += o.rhs_evals;
  return *this;
}

StepStats& StepStats::operator+=(const EvalStats& o) {
  matvecs += o.matvecs;
  krylov_dims += o.krylov_dims;
  krylov_calls += o.krylov_calls;
  return *this;
}

Vector SplitProblem::rhs(const Vector& u) const {
  if (full) return full(u);
  Vector out = Vector::Zero(u.size());
  for (const auto& f : parts) out += f(u);
  return out;
}

void SplitProblem::validate() const {
  if (parts.empty()) throw ContractViolation("split problem has no partitions");
  if (parts.size() != linear.size()) throw ContractViolation("one linear operator per partition required");
  for (std::size_t p = 0; p < parts.size(); ++p)
    if (!parts[p] || !linear[p]) throw ContractViolation("split problem has an empty partition");
  if (dim < 1) throw ContractViolation("split problem dimension must be positive");
}

namespace {

void check_state(const Vector& y, Index dim, const char* who) {
  if (y.size() != dim) throw ContractViolation(std::string(who) + ": state length does not match the operator");
}

void check_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("step size must be positive and finite");
}

std::string stage_context(const char* form, int stage, int part = -1) {
  std::string s = std::string(form) + " stage " + std::to_string(stage + 1);
  if (part >= 0) s += ", partition " + std::to_string(part + 1);
  return s;
}

/// Batches for the stage-wise evaluation: one on f(y_n) (or its substitute) and one
/// per stage j >= 2 on that stage's difference vector.
void build_batches(const std::vector<std::vector<CoefficientExpr>>& a, const std::vector<CoefficientExpr>& first,
                   const std::vector<CoefficientExpr>& b, const char* aname, const char* bname,
                   std::unique_ptr<CoefficientBatch>& on_f, std::vector<std::unique_ptr<CoefficientBatch>>& on_stage) {
  const int s = static_cast<int>(b.size());
  std::vector<CoefficientExpr> exprs;
  std::vector<std::string> labels;
  for (int i = 1; i < s; ++i) {
    exprs.push_back(first[i]);
    labels.push_back(std::string(aname) + "[" + std::to_string(i + 1) + "][1]");
  }
  exprs.push_back(first[0]);
  labels.push_back(std::string(bname) + "[1]");
  on_f = std::make_unique<CoefficientBatch>(exprs, labels);

  on_stage.clear();
  on_stage.resize(s);
  for (int j = 1; j < s; ++j) {
    exprs.clear();
    labels.clear();
    for (int i = j + 1; i < s; ++i) {
      exprs.push_back(a[i][j]);
      labels.push_back(std::string(aname) + "[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]");
    }
    exprs.push_back(b[j]);
    labels.push_back(std::string(bname) + "[" + std::to_string(j + 1) + "]");
    on_stage[j] = std::make_unique<CoefficientBatch>(exprs, labels);
  }
}

bool all_zero(const CoefficientBatch& batch) {
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (!batch.expr(i).is_zero()) return false;
  return true;
}

}  // namespace

OriginalStepper::OriginalStepper(ExprkTableau tab) : tab_(std::move(tab)) {
  tab_.validate();
  std::vector<CoefficientExpr> first(tab_.stages);
  first[0] = CoefficientExpr::phi(1);
  for (int i = 1; i < tab_.stages; ++i) first[i] = tab_.c[i] * CoefficientExpr::phi(1, tab_.c[i]);
  build_batches(tab_.a, first, tab_.b, "a", "b", on_f_, on_stage_);
}

Vector OriginalStepper::step(const Rhs& f, const LinearOperator& op, const Vector& y, double h,
                             const KrylovConfig& cfg, StepRecord* rec) const {
  check_state(y, op.dim(), "original stepper");
  check_step(h);
  const int s = tab_.stages;
  StepStats st;
  EvalStats ev;

  Vector fy = f(y);
  ++st.rhs_evals;
  Vector gy = fy - op.apply(y);
  ++st.matvecs;
  auto head = on_f_->apply(op, h, fy, cfg, &ev, "original form, f(y_n)");

  std::vector<Vector> acc(s, Vector::Zero(y.size()));
  Vector upd = Vector::Zero(y.size());
  if (rec && rec->trace) {
    rec->stages.assign(1, y);
    rec->part_evals.assign(1, std::vector<Vector>{fy});
  }
  for (int i = 1; i < s; ++i) {
    Vector ui = y + h * (head[i - 1] + acc[i]);
    Vector fu = f(ui);
    ++st.rhs_evals;
    Vector d = fu - op.apply(ui) - gy;
    ++st.matvecs;
    if (rec && rec->trace) {
      rec->stages.push_back(ui);
      rec->part_evals[0].push_back(fu);
    }
    if (all_zero(*on_stage_[i])) continue;
    auto out = on_stage_[i]->apply(op, h, d, cfg, &ev, stage_context("original form", i));
    for (int k = i + 1; k < s; ++k) acc[k] += out[k - i - 1];
    upd += out.back();
  }
  st += ev;
  if (rec) rec->stats = st;
  return y + h * (head.back() + upd);
}

std::string_view to_string(CoefficientEvaluation e) {
  return e == CoefficientEvaluation::expanded ? "expanded" : "recursive";
}

CoefficientEvaluation parse_coefficient_evaluation(std::string_view s) {
  if (s == "expanded") return CoefficientEvaluation::expanded;
  if (s == "recursive") return CoefficientEvaluation::recursive;
  throw ConfigError("unknown coefficient evaluation '" + std::string(s) + "' (expanded, recursive)");
}

TransformedStepper::TransformedStepper(const ExprkTableau& tab, CoefficientEvaluation mode)
    : tab_(transform(tab)), mode_(mode) {
  if (mode_ == CoefficientEvaluation::expanded) {
    init_expanded();
    return;
  }
  std::vector<CoefficientExpr> first(tab.stages);
  first[0] = CoefficientExpr::phi(1);
  for (int i = 1; i < tab.stages; ++i) first[i] = tab.c[i] * CoefficientExpr::phi(1, tab.c[i]);
  build_batches(tab.a, first, tab.b, "a", "b", on_f_, on_stage_);
}

TransformedStepper::TransformedStepper(TransformedTableau tab) : tab_(std::move(tab)) { init_expanded(); }

void TransformedStepper::init_expanded() {
  tab_.validate();
  std::vector<CoefficientExpr> first(tab_.stages);
  first[0] = tab_.beta[0];
  for (int i = 1; i < tab_.stages; ++i) first[i] = tab_.alpha[i][0];
  std::vector<CoefficientExpr> weights = tab_.beta;
  build_batches(tab_.alpha, first, weights, "alpha", "beta", on_f_, on_stage_);
}

Vector TransformedStepper::step(const Rhs& f, const LinearOperator& op, const Vector& y, double h,
                                const KrylovConfig& cfg, StepRecord* rec) const {
  check_state(y, op.dim(), "transformed stepper");
  // Non-owning pointer; the operator outlives this call.
  OperatorPtr alias(std::shared_ptr<const LinearOperator>(), &op);
  return run({f}, {alias}, y, h, cfg, rec);
}

Vector TransformedStepper::step(const SplitProblem& prob, const Vector& u, double h, const KrylovConfig& cfg,
                                StepRecord* rec) const {
  prob.validate();
  std::vector<OperatorPtr> ops;
  for (const auto& build : prob.linear) {
    ops.push_back(build(u));
    check_state(u, ops.back()->dim(), "partitioned stepper");
  }
  return run(prob.parts, ops, u, h, cfg, rec);
}

Vector TransformedStepper::run(const std::vector<Rhs>& f, const std::vector<OperatorPtr>& ops, const Vector& u,
                               double h, const KrylovConfig& cfg, StepRecord* rec) const {
  check_step(h);
  const int s = tab_.stages;
  const int np = static_cast<int>(f.size());
  const bool single = np == 1;
  const char* form = single ? "transformed form" : "partitioned form";
  StepStats st;
  EvalStats ev;

  std::vector<Vector> fu0(np);
  std::vector<std::vector<Vector>> head(np);
  for (int p = 0; p < np; ++p) {
    fu0[p] = f[p](u);
    ++st.rhs_evals;
    head[p] = on_f_->apply(*ops[p], h, fu0[p], cfg, &ev,
                           std::string(form) + (single ? "" : ", partition " + std::to_string(p + 1)) + ", f(u_n)");
  }
  if (rec && rec->trace) {
    rec->stages.assign(1, u);
    rec->part_evals.assign(np, {});
    for (int p = 0; p < np; ++p) rec->part_evals[p].push_back(fu0[p]);
  }

  const bool recursive = mode_ == CoefficientEvaluation::recursive;
  // acc[p][i]: stage-i increment of partition p accumulated from earlier stages.
  std::vector<std::vector<Vector>> acc(np, std::vector<Vector>(s, Vector::Zero(u.size())));
  Vector upd = Vector::Zero(u.size());
  for (int p = 0; p < np; ++p) upd += head[p].back();
  for (int i = 1; i < s; ++i) {
    std::vector<Vector> incr(np);
    Vector ui = Vector::Zero(u.size());
    for (int p = 0; p < np; ++p) {
      incr[p] = head[p][i - 1] + acc[p][i];
      ui += incr[p];
    }
    ui = u + h * ui;
    if (rec && rec->trace) rec->stages.push_back(ui);
    for (int p = 0; p < np; ++p) {
      Vector fp = f[p](ui);
      ++st.rhs_evals;
      if (rec && rec->trace) rec->part_evals[p].push_back(fp);
      if (all_zero(*on_stage_[i])) continue;
      Vector d = fp - fu0[p];
      if (recursive && !is_zero(*ops[p])) {
        d -= h * ops[p]->apply(incr[p]);
        ++st.matvecs;
      }
      auto out = on_stage_[i]->apply(*ops[p], h, d, cfg, &ev, stage_context(form, i, single ? -1 : p));
      for (int k = i + 1; k < s; ++k) acc[p][k] += out[k - i - 1];
      upd += out.back();
    }
  }
  st += ev;
  if (rec) rec->stats = st;
  return u + h * upd;
}

Vector step_pexprk2_residual(const SplitProblem& prob, const Vector& u, double h, const KrylovConfig& cfg,
                             StepRecord* rec) {
  prob.validate();
  check_step(h);
  if (prob.partitions() != 2) throw ContractViolation("residual form requires exactly two partitions");
  static const CoefficientBatch phi1({CoefficientExpr::phi(1)}, {"phi1"});
  static const CoefficientBatch phi2({CoefficientExpr::phi(2)}, {"phi2"});
  StepStats st;
  EvalStats ev;

  OperatorPtr ops[2] = {prob.linear[0](u), prob.linear[1](u)};
  check_state(u, ops[0]->dim(), "residual stepper");
  check_state(u, ops[1]->dim(), "residual stepper");
  Vector fu[2], w[2];
  for (int p = 0; p < 2; ++p) {
    fu[p] = prob.parts[p](u);
    ++st.rhs_evals;
    w[p] = phi1.apply(*ops[p], h, fu[p], cfg, &ev, "residual form, first stage")[0];
  }
  Vector u2 = u + h * (w[0] + w[1]);
  Vector next = u;
  Vector du = u2 - u;
  if (rec && rec->trace) {
    rec->stages = {u, u2};
    rec->part_evals.assign(2, {});
  }
  for (int p = 0; p < 2; ++p) {
    next += h * phi1.apply(*ops[1 - p], h, w[p], cfg, &ev, "residual form, cross term")[0];
    Vector f2 = prob.parts[p](u2);
    ++st.rhs_evals;
    if (rec && rec->trace) rec->part_evals[p] = {fu[p], f2};
    Vector r = f2 - fu[p] - ops[p]->apply(du);
    ++st.matvecs;
    next += h * phi2.apply(*ops[p], h, r, cfg, &ev, "residual form, update")[0];
  }
  st += ev;
  if (rec) rec->stats = st;
  return next;
}

StepFunction make_original_stepper(int order, Rhs f, LinearBuilder linear, KrylovConfig cfg) {
  auto st = std::make_shared<const OriginalStepper>(exprk_tableau(order));
  return [st, f = std::move(f), linear = std::move(linear), cfg](const Vector& u, double h, StepStats& stats) {
    StepRecord rec;
    rec.trace = false;
    OperatorPtr op = linear(u);
    Vector out = st->step(f, *op, u, h, cfg, &rec);
    stats += rec.stats;
    return out;
  };
}

StepFunction make_transformed_stepper(int order, Rhs f, LinearBuilder linear, KrylovConfig cfg,
                                      CoefficientEvaluation mode) {
  auto st = std::make_shared<const TransformedStepper>(exprk_tableau(order), mode);
  return [st, f = std::move(f), linear = std::move(linear), cfg](const Vector& u, double h, StepStats& stats) {
    StepRecord rec;
    rec.trace = false;
    OperatorPtr op = linear(u);
    Vector out = st->step(f, *op, u, h, cfg, &rec);
    stats += rec.stats;
    return out;
  };
}

StepFunction make_partitioned_stepper(int order, SplitProblem prob, KrylovConfig cfg, CoefficientEvaluation mode) {
  prob.validate();
  auto st = std::make_shared<const TransformedStepper>(exprk_tableau(order), mode);
  return [st, prob = std::move(prob), cfg](const Vector& u, double h, StepStats& stats) {
    StepRecord rec;
    rec.trace = false;
    Vector out = st->step(prob, u, h, cfg, &rec);
    stats += rec.stats;
    return out;
  };
}

StepFunction make_residual_stepper(SplitProblem prob, KrylovConfig cfg) {
  prob.validate();
  return [prob = std::move(prob), cfg](const Vector& u, double h, StepStats& stats) {
    StepRecord rec;
    rec.trace = false;
    Vector out = step_pexprk2_residual(prob, u, h, cfg, &rec);
    stats += rec.stats;
    return out;
  };
}

IntegrationResult integrate_fixed(const StepFunction& step, const Vector& u0, double t0, double tf, int n_steps) {
  if (n_steps < 1) throw ContractViolation("at least one step required");
  if (!(tf > t0)) throw DomainError("final time must exceed initial time");
  const double h = (tf - t0) / n_steps;
  IntegrationResult res{u0, {}, 0};
  for (int n = 0; n < n_steps; ++n) {
    res.state = step(res.state, h, res.stats);
    ++res.steps;
    if (!res.state.allFinite())
      throw EvaluationFailure("state became non-finite at step " + std::to_string(n + 1) + " of " +
                              std::to_string(n_steps));
  }
  return res;
}

double stability_matrix_spectral_radius(const Matrix& l1, const Matrix& l2, double h) {
  if (l1.rows() != l1.cols() || l2.rows() != l2.cols() || l1.rows() != l2.rows())
    throw ContractViolation("stability matrix: operators must be square and of equal size");
  const Index n = l1.rows();
  Matrix m = expm_dense(Matrix(h * l1)) + expm_dense(Matrix(h * l2)) - Matrix::Identity(n, n);
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw EvaluationFailure("eigenvalue computation did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace pexprk
