#include "pexprk/coefficient_eval.hpp"

#include <algorithm>
#include <memory>

#include "pexprk/errors.hpp"
#include "pexprk/phi.hpp"

namespace pexprk {

CoefficientBatch::CoefficientBatch(std::vector<CoefficientExpr> exprs, std::vector<std::string> labels)
    : exprs_(std::move(exprs)), labels_(std::move(labels)) {
  if (labels_.empty()) {
    for (std::size_t i = 0; i < exprs_.size(); ++i) labels_.push_back("#" + std::to_string(i));
  }
  if (labels_.size() != exprs_.size()) throw ContractViolation("one label per coefficient required");
  steps_.push_back(Step{});
  std::map<std::pair<std::string, int>, int> memo;
  for (const auto& e : exprs_) outputs_.push_back(plan(e.simplified(), 0, memo));
}

int CoefficientBatch::plan(const CoefficientExpr& e, int input, std::map<std::pair<std::string, int>, int>& memo) {
  using Kind = CoefficientExpr::Kind;
  auto key = std::make_pair(e.prefix(), input);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  Step s;
  s.type = Step::Type::combine;
  switch (e.kind()) {
    case Kind::constant:
      s.terms = {{e.value(), input}};
      break;
    case Kind::scale:
      s.terms = {{e.value(), plan(e.children()[0], input, memo)}};
      break;
    case Kind::sum:
      for (const auto& ch : e.children()) s.terms.emplace_back(1.0, plan(ch, input, memo));
      break;
    case Kind::product: {
      int mid = plan(e.children()[1], input, memo);
      int out = plan(e.children()[0], mid, memo);
      memo.emplace(key, out);
      return out;
    }
    case Kind::zmul:
      s.type = Step::Type::matvec;
      s.src = plan(e.children()[0], input, memo);
      break;
    case Kind::phi:
      s.type = Step::Type::phi;
      s.src = input;
      s.k = e.phi_index();
      s.c = e.abscissa();
      break;
  }
  steps_.push_back(std::move(s));
  int id = static_cast<int>(steps_.size()) - 1;
  memo.emplace(key, id);
  return id;
}

std::vector<Vector> CoefficientBatch::apply(const LinearOperator& op, double h, const Eigen::Ref<const Vector>& v,
                                            const KrylovConfig& cfg, EvalStats* stats, std::string_view context) const {
  if (v.size() != op.dim()) throw ContractViolation("coefficient batch: vector length does not match operator");
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("step size must be positive and finite");
  EvalStats local;
  std::vector<Vector> out = run(op, h, Vector(v), cfg, local, context);
  if (stats) *stats += local;
  return out;
}

std::vector<Vector> CoefficientBatch::run_zero(const Vector& v) const {
  std::vector<Vector> vals(steps_.size());
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const Step& s = steps_[i];
    switch (s.type) {
      case Step::Type::input:
        vals[i] = v;
        break;
      case Step::Type::combine:
        vals[i] = Vector::Zero(v.size());
        for (const auto& [w, id] : s.terms) vals[i] += w * vals[id];
        break;
      case Step::Type::matvec:
        vals[i] = Vector::Zero(v.size());
        break;
      case Step::Type::phi:
        vals[i] = vals[s.src] / detail::factorial<double>(s.k);
        break;
    }
  }
  std::vector<Vector> out;
  for (int id : outputs_) out.push_back(vals[id]);
  return out;
}

std::vector<Vector> CoefficientBatch::run(const LinearOperator& op, double h, const Vector& v, const KrylovConfig& cfg,
                                          EvalStats& stats, std::string_view context) const {
  if (is_zero(op)) return run_zero(v);

  if (op.kind() == OperatorKind::block_diagonal) {
    const auto& bd = static_cast<const BlockDiagOp&>(op);
    std::vector<Vector> out(outputs_.size(), Vector(v.size()));
    for (std::size_t b = 0; b < bd.blocks().size(); ++b) {
      Index off = bd.offsets()[b];
      Index len = bd.blocks()[b]->dim();
      auto part = run(*bd.blocks()[b], h, v.segment(off, len), cfg, stats, context);
      for (std::size_t i = 0; i < out.size(); ++i) out[i].segment(off, len) = part[i];
    }
    return out;
  }

  if (op.kind() == OperatorKind::embedded) {
    const auto& em = static_cast<const EmbeddedOperator&>(op);
    auto idx = em.indices();
    std::vector<char> inside(v.size(), 0);
    Vector sub(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      sub[i] = v[idx[i]];
      inside[idx[i]] = 1;
    }
    Vector rest = v;
    for (Index i : idx) rest[i] = 0.0;
    auto inner = run(*em.inner(), h, sub, cfg, stats, context);
    auto outer = run_zero(rest);
    for (std::size_t i = 0; i < outer.size(); ++i) {
      for (std::size_t j = 0; j < idx.size(); ++j) outer[i][idx[j]] = inner[i][j];
    }
    return outer;
  }

  std::vector<Vector> vals(steps_.size());
  std::map<int, std::unique_ptr<KrylovProjection>> projections;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const Step& s = steps_[i];
    switch (s.type) {
      case Step::Type::input:
        vals[i] = v;
        break;
      case Step::Type::combine:
        vals[i] = Vector::Zero(v.size());
        for (const auto& [w, id] : s.terms) vals[i] += w * vals[id];
        break;
      case Step::Type::matvec:
        vals[i] = h * op.apply(vals[s.src]);
        ++stats.matvecs;
        break;
      case Step::Type::phi: {
        if (vals[i].size() != 0) break;
        // Gather every phi request on this source and serve them from one projection.
        std::vector<std::size_t> ids;
        std::vector<KrylovProjection::Request> reqs;
        double tau_max = 0.0;
        for (std::size_t j = i; j < steps_.size(); ++j) {
          if (steps_[j].type == Step::Type::phi && steps_[j].src == s.src) {
            ids.push_back(j);
            reqs.push_back({steps_[j].k, h * steps_[j].c});
            tau_max = std::max(tau_max, h * steps_[j].c);
          }
        }
        KrylovProjection proj(op, vals[s.src], tau_max, cfg);
        stats.matvecs += proj.matvecs();
        stats.krylov_dims += static_cast<std::uint64_t>(proj.dim());
        ++stats.krylov_calls;
        if (!proj.converged()) {
          std::string names;
          for (const auto& l : labels_) names += (names.empty() ? "" : ", ") + l;
          throw KrylovFailure(std::string(context.empty() ? "coefficient evaluation" : context) +
                              ": Krylov projection did not converge (M = " + std::to_string(proj.dim()) +
                              ", estimate " + format_number(proj.est_error()) + ", tol " + format_number(cfg.tol) +
                              ") while applying " + names);
        }
        auto res = proj.evaluate(reqs);
        for (std::size_t j = 0; j < ids.size(); ++j) vals[ids[j]] = std::move(res[j]);
        break;
      }
    }
  }
  std::vector<Vector> out;
  for (int id : outputs_) out.push_back(vals[id]);
  return out;
}

Vector eval_coeff(const CoefficientExpr& expr, const LinearOperator& op, double h, const Eigen::Ref<const Vector>& v,
                  const KrylovConfig& cfg, EvalStats* stats) {
  CoefficientBatch batch({expr});
  return batch.apply(op, h, v, cfg, stats)[0];
}

}  // namespace pexprk
