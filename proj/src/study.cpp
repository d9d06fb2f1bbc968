#include "pexprk/study.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <map>
#include <sstream>

#include "pexprk/errors.hpp"

namespace pexprk {

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::none:
      return "none";
    case Partition::species:
      return "species";
    case Partition::space:
      return "space";
    case Partition::physics:
      return "physics";
    case Partition::imex:
      return "imex";
  }
  return "?";
}

std::string_view to_string(Form f) {
  switch (f) {
    case Form::orig:
      return "orig";
    case Form::tran:
      return "tran";
    case Form::part:
      return "part";
  }
  return "?";
}

std::string_view to_string(JacobianKind j) { return j == JacobianKind::full ? "full" : "block"; }

Partition parse_partition(std::string_view s) {
  for (auto p : {Partition::none, Partition::species, Partition::space, Partition::physics, Partition::imex})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown partition '" + std::string(s) + "' (none, species, space, physics, imex)");
}

Form parse_form(std::string_view s) {
  for (auto f : {Form::orig, Form::tran, Form::part})
    if (s == to_string(f)) return f;
  throw ConfigError("unknown form '" + std::string(s) + "' (orig, tran, part)");
}

JacobianKind parse_jacobian(std::string_view s) {
  if (s == "full") return JacobianKind::full;
  if (s == "block") return JacobianKind::block;
  throw ConfigError("unknown jacobian '" + std::string(s) + "' (full, block)");
}

Index RunConfig::effective_grid() const {
  return paper_scale && problem == "gray-scott" ? kGrayScottPaperGrid : grid;
}

void RunConfig::validate() const {
  if (problem != "gray-scott" && problem != "semilinear" && problem != "linear")
    throw ConfigError("unknown problem '" + problem + "' (gray-scott, semilinear, linear)");
  if (order < 2 || order > 4) throw ConfigError("order must be 2, 3 or 4");
  if (form == Form::part && partition == Partition::none)
    throw ConfigError("form 'part' needs a partition other than 'none'");
  if (form != Form::part && partition != Partition::none)
    throw ConfigError("forms 'orig' and 'tran' run unpartitioned; use --partition none");
  if (problem != "gray-scott" && (partition != Partition::none || jacobian != JacobianKind::full))
    throw ConfigError("the oracle problems support only unpartitioned runs with the full operator");
  if (problem == "gray-scott") {
    if (effective_grid() < 3) throw ConfigError("grid side must be at least 3");
    if (partition == Partition::space && effective_grid() % 2 != 0)
      throw ConfigError("the space partition needs an even grid side");
  } else if (grid < 1) {
    throw ConfigError("problem dimension must be positive");
  }
  if (!(tf > t0) || !std::isfinite(t0) || !std::isfinite(tf)) throw ConfigError("time span must satisfy t0 < tf");
  if (steps.empty() && (pow2_first < 0 || pow2_last < pow2_first || pow2_last > 40))
    throw ConfigError("power-of-two step range must satisfy 0 <= first <= last <= 40");
  auto hs = step_sizes();
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0) || !std::isfinite(hs[i])) throw ConfigError("step sizes must be positive");
    if (i > 0 && !(hs[i] < hs[i - 1])) throw ConfigError("step sizes must be strictly decreasing");
    double n = (tf - t0) / hs[i];
    if (std::abs(n - std::round(n)) > 1e-9 * n) throw ConfigError("every step size must divide the time span");
  }
  if (!(krylov_tol > 0.0)) throw ConfigError("Krylov tolerance must be positive");
  if (krylov_m_max < 1) throw ConfigError("Krylov dimension limit must be positive");
}

std::vector<double> RunConfig::step_sizes() const {
  if (!steps.empty()) return steps;
  std::vector<double> hs;
  for (int j = pow2_first; j <= pow2_last; ++j) hs.push_back(std::ldexp(tf - t0, -j));
  return hs;
}

std::string RunConfig::label() const {
  std::string s = form == Form::part ? "pexprks" : "exprks";
  if (form != Form::part) s += std::string("_") + std::string(to_string(form));
  s += "_order=" + std::to_string(order);
  if (form == Form::part)
    s += "_" + std::string(to_string(partition));
  else if (form == Form::tran)
    s += "_" + std::string(to_string(jacobian));
  return s;
}

double discrete_l2(const Vector& x) {
  return x.size() == 0 ? 0.0 : x.norm() / std::sqrt(static_cast<double>(x.size()));
}

namespace {

KrylovConfig krylov_config(double tol, int m_max) {
  KrylovConfig k;
  k.tol = tol;
  k.m_max = m_max;
  return k;
}

struct ProblemSetup {
  Vector u0;
  Rhs f;
  LinearBuilder full;
  LinearBuilder block;
  std::function<SplitProblem(Partition)> split;
};

ProblemSetup setup_problem(const RunConfig& cfg) {
  ProblemSetup s;
  if (cfg.problem == "gray-scott") {
    GrayScottModel m = gs_default(cfg.effective_grid());
    s.u0 = gs_initial(m);
    s.f = [m](const Vector& u) { return gs_rhs(m, u); };
    s.full = [m](const Vector& u) { return gs_jacobian(m, u); };
    s.block = [m](const Vector& u) { return gs_block_jacobian(m, u); };
    s.split = [m](Partition p) {
      switch (p) {
        case Partition::species:
          return gs_partition_species(m);
        case Partition::space:
          return gs_partition_space(m);
        case Partition::physics:
          return gs_partition_physics(m);
        case Partition::imex:
          return gs_partition_imex(m);
        case Partition::none:
          break;
      }
      throw ConfigError("no split for partition 'none'");
    };
  } else {
    auto o = std::make_shared<SemilinearOracle>(
        oracle_semilinear(cfg.grid, cfg.seed, cfg.problem == "linear" ? 0.0 : 0.1));
    OperatorPtr op = o->linear();
    s.u0 = o->u0;
    s.f = [o](const Vector& u) { return o->rhs(u); };
    s.full = [op](const Vector&) { return op; };
    s.block = s.full;
  }
  return s;
}

std::string reference_key(const RunConfig& cfg, double h_ref) {
  std::ostringstream os;
  os << "pexprk-reference v1|" << cfg.problem << "|" << cfg.effective_grid() << "|" << cfg.seed << "|"
     << format_number(cfg.t0) << "|" << format_number(cfg.tf) << "|" << format_number(h_ref) << "|"
     << cfg.krylov_m_max;
  return os.str();
}

std::mutex cache_mutex;
std::map<std::string, ReferenceSolution>& memory_cache() {
  static std::map<std::string, ReferenceSolution> cache;
  return cache;
}

std::filesystem::path cache_file(const std::string& dir, const std::string& key) {
  std::ostringstream name;
  name << "reference-" << std::hex << std::hash<std::string>{}(key) << ".bin";
  return std::filesystem::path(dir) / name.str();
}

bool load_cached(const std::filesystem::path& file, const std::string& key, ReferenceSolution& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  std::uint64_t key_len = 0, n = 0;
  in.read(reinterpret_cast<char*>(&key_len), sizeof key_len);
  if (!in || key_len != key.size()) return false;
  std::string stored(key_len, '\0');
  in.read(stored.data(), static_cast<std::streamsize>(key_len));
  if (!in || stored != key) return false;
  in.read(reinterpret_cast<char*>(&out.h_ref), sizeof out.h_ref);
  in.read(reinterpret_cast<char*>(&out.self_consistency), sizeof out.self_consistency);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in) return false;
  out.state.resize(static_cast<Index>(n));
  in.read(reinterpret_cast<char*>(out.state.data()), static_cast<std::streamsize>(n * sizeof(double)));
  return static_cast<bool>(in);
}

void store_cached(const std::filesystem::path& file, const std::string& key, const ReferenceSolution& ref) {
  std::error_code ec;
  std::filesystem::create_directories(file.parent_path(), ec);
  auto tmp = file;
  tmp += ".tmp" + std::to_string(std::hash<std::string>{}(key + std::to_string(
                      std::chrono::steady_clock::now().time_since_epoch().count())));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;
    std::uint64_t key_len = key.size(), n = static_cast<std::uint64_t>(ref.state.size());
    out.write(reinterpret_cast<const char*>(&key_len), sizeof key_len);
    out.write(key.data(), static_cast<std::streamsize>(key_len));
    out.write(reinterpret_cast<const char*>(&ref.h_ref), sizeof ref.h_ref);
    out.write(reinterpret_cast<const char*>(&ref.self_consistency), sizeof ref.self_consistency);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(ref.state.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) return;
  }
  std::filesystem::rename(tmp, file, ec);
}

int steps_for(double span, double h) { return static_cast<int>(std::llround(span / h)); }

}  // namespace

ReferenceSolution reference_solution(const RunConfig& cfg) {
  cfg.validate();
  auto hs = cfg.step_sizes();
  const double h_ref = hs.back() / 32.0;
  const std::string key = reference_key(cfg, h_ref);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = memory_cache().find(key);
    if (it != memory_cache().end()) {
      ReferenceSolution r = it->second;
      r.from_cache = true;
      return r;
    }
  }
  ReferenceSolution ref;
  if (!cfg.reference_cache.empty() && load_cached(cache_file(cfg.reference_cache, key), key, ref)) {
    ref.from_cache = true;
  } else {
    ProblemSetup s = setup_problem(cfg);
    StepFunction step = make_transformed_stepper(4, s.f, s.full, krylov_config(1e-13, cfg.krylov_m_max),
                                                 CoefficientEvaluation::recursive);
    const double span = cfg.tf - cfg.t0;
    Vector fine = integrate_fixed(step, s.u0, cfg.t0, cfg.tf, steps_for(span, h_ref)).state;
    Vector coarse = integrate_fixed(step, s.u0, cfg.t0, cfg.tf, steps_for(span, 2.0 * h_ref)).state;
    ref.state = fine;
    ref.h_ref = h_ref;
    ref.self_consistency = discrete_l2(fine - coarse);
    if (!cfg.reference_cache.empty()) store_cached(cache_file(cfg.reference_cache, key), key, ref);
  }
  std::lock_guard<std::mutex> lock(cache_mutex);
  memory_cache()[key] = ref;
  return ref;
}

ConfiguredRun configure_run(const RunConfig& cfg) {
  cfg.validate();
  ProblemSetup s = setup_problem(cfg);
  KrylovConfig k = krylov_config(cfg.krylov_tol, cfg.krylov_m_max);
  LinearBuilder linear = cfg.jacobian == JacobianKind::full ? s.full : s.block;
  switch (cfg.form) {
    case Form::orig:
      return {make_original_stepper(cfg.order, s.f, linear, k), s.u0};
    case Form::tran:
      return {make_transformed_stepper(cfg.order, s.f, linear, k, cfg.coefficients), s.u0};
    case Form::part:
      return {make_partitioned_stepper(cfg.order, s.split(cfg.partition), k, cfg.coefficients), s.u0};
  }
  throw ConfigError("unknown form");
}

std::vector<std::optional<double>> estimate_order(const std::vector<double>& h, const std::vector<double>& errors) {
  if (h.size() != errors.size()) throw ContractViolation("estimate_order: step and error lists differ in length");
  if (h.size() < 2) throw ContractViolation("estimate_order needs at least two rows");
  std::vector<std::optional<double>> out(h.size());
  auto usable = [](double e) { return e > 0.0 && std::isfinite(e); };
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (usable(errors[i - 1]) && usable(errors[i]) && h[i - 1] != h[i]) {
      double ratio = h[i - 1] / h[i];
      out[i] = ratio == 2.0 ? std::log2(errors[i - 1] / errors[i]) : std::log(errors[i - 1] / errors[i]) / std::log(ratio);
    }
  }
  return out;
}

StudyResult run_convergence_study(const RunConfig& cfg) {
  cfg.validate();
  StudyResult res;
  res.config = cfg;
  res.reference = reference_solution(cfg);
  ConfiguredRun run = configure_run(cfg);
  const double span = cfg.tf - cfg.t0;

  for (double h : cfg.step_sizes()) {
    ConvergenceRow row;
    row.h = h;
    auto start = std::chrono::steady_clock::now();
    try {
      IntegrationResult r = integrate_fixed(run.step, run.u0, cfg.t0, cfg.tf, steps_for(span, h));
      row.error_l2 = discrete_l2(r.state - res.reference.state);
      row.matvecs = r.stats.matvecs;
      row.krylov_dims = r.stats.krylov_dims;
    } catch (const Error& e) {
      row.error_l2 = std::numeric_limits<double>::quiet_NaN();
      row.failure = e.what();
    }
    if (cfg.timing)
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    res.rows.push_back(std::move(row));
  }

  if (res.rows.size() >= 2) {
    std::vector<double> hs, es;
    for (const auto& r : res.rows) {
      hs.push_back(r.h);
      es.push_back(r.error_l2);
    }
    auto orders = estimate_order(hs, es);
    for (std::size_t i = 0; i < res.rows.size(); ++i) res.rows[i].observed_order = orders[i];
  }

  double smallest = std::numeric_limits<double>::infinity();
  bool any_ok = false;
  for (const auto& r : res.rows) {
    if (r.failure.empty()) any_ok = true;
    if (r.failure.empty() && std::isfinite(r.error_l2) && r.error_l2 > 0.0) smallest = std::min(smallest, r.error_l2);
  }
  if (!any_ok) throw EvaluationFailure("every step size failed for " + cfg.label());
  res.gate_ratio = std::isfinite(smallest) ? res.reference.self_consistency / smallest : 0.0;
  if (!(res.gate_ratio < 1e-2))
    throw ReferenceGateFailure("reference self-consistency gate failed for " + cfg.label() + ": |ref(h) - ref(2h)| = " +
                               format_number(res.reference.self_consistency) + " but the smallest study error is " +
                               format_number(smallest) + " (ratio " + format_number(res.gate_ratio) +
                               ", required < 0.01)");
  return res;
}

Metadata study_metadata(const StudyResult& res) {
  const RunConfig& c = res.config;
  Metadata m = {
      {"method", c.label()},
      {"problem", c.problem},
      {"grid", std::to_string(c.effective_grid())},
      {"partition", std::string(to_string(c.partition))},
      {"order", std::to_string(c.order)},
      {"form", std::string(to_string(c.form))},
      {"jacobian", std::string(to_string(c.jacobian))},
      {"tspan", format_number(c.t0) + ":" + format_number(c.tf)},
      {"coefficients", std::string(to_string(c.coefficients))},
      {"krylov_tol", format_number(c.krylov_tol)},
      {"krylov_mmax", std::to_string(c.krylov_m_max)},
      {"seed", std::to_string(c.seed)},
      {"reference_h", format_number(res.reference.h_ref)},
      {"reference_self_consistency", format_number(res.reference.self_consistency)},
      {"reference_gate_ratio", format_number(res.gate_ratio)},
  };
  if (c.steps.empty())
    m.emplace_back("steps_pow2", std::to_string(c.pow2_first) + ":" + std::to_string(c.pow2_last));
  return m;
}

std::string format_csv(const std::vector<ConvergenceRow>& rows, const Metadata& meta) {
  std::ostringstream os;
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
  os << kCsvHeader << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << format_number(r.h) << "," << format_number(r.error_l2) << ","
       << (r.observed_order ? format_number(*r.observed_order) : "") << "," << r.matvecs << "," << r.krylov_dims
       << "," << format_number(r.wall_ms) << "\n";
    if (!r.failure.empty()) {
      std::string msg = r.failure;
      for (char& ch : msg)
        if (ch == '\n') ch = ' ';
      os << "# failure=" << msg << "\n";
    }
  }
  return os.str();
}

void emit_csv(const std::vector<ConvergenceRow>& rows, const Metadata& meta, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing: " + std::strerror(errno));
  out << format_csv(rows, meta);
  out.flush();
  if (!out) throw Error("cannot write '" + path + "': " + std::strerror(errno));
}

std::vector<ConvergenceRow> parse_csv(const std::string& text) {
  std::vector<ConvergenceRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  auto number = [](const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ContractViolation("malformed number '" + s + "' in CSV");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# failure=";
      if (!rows.empty() && line.compare(0, tag.size(), tag) == 0) rows.back().failure = line.substr(tag.size());
      continue;
    }
    if (!header_seen) {
      if (line != kCsvHeader) throw ContractViolation("unexpected CSV header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) throw ContractViolation("CSV row must have 6 fields: '" + line + "'");
    ConvergenceRow r;
    r.h = number(cells[0]);
    r.error_l2 = number(cells[1]);
    if (!cells[2].empty()) r.observed_order = number(cells[2]);
    r.matvecs = std::stoull(cells[3]);
    r.krylov_dims = std::stoull(cells[4]);
    r.wall_ms = number(cells[5]);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw ContractViolation("CSV has no column header");
  return rows;
}

}  // namespace pexprk
