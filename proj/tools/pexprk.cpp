// Command-line driver: convergence studies, order-condition checks, tableau dumps.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "pexprk/errors.hpp"
#include "pexprk/order_conditions.hpp"
#include "pexprk/study.hpp"
#include "pexprk/tableau.hpp"

using namespace pexprk;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::pair<double, double> parse_range(const std::string& s, const char* what) {
  auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError(std::string(what) + " must look like A:B, got '" + s + "'");
  try {
    std::size_t used = 0;
    double a = std::stod(s.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(s);
    std::string rest = s.substr(colon + 1);
    double b = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError(std::string(what) + " must look like A:B, got '" + s + "'");
  }
}

void apply_pow2(RunConfig& cfg, const std::string& s) {
  auto [a, b] = parse_range(s, "--steps-pow2");
  if (a != std::floor(a) || b != std::floor(b)) throw ConfigError("--steps-pow2 bounds must be integers");
  cfg.pow2_first = static_cast<int>(a);
  cfg.pow2_last = static_cast<int>(b);
}

void apply_tspan(RunConfig& cfg, const std::string& s) {
  auto [a, b] = parse_range(s, "--tspan");
  cfg.t0 = a;
  cfg.tf = b;
}

/// Keys mirror the long flag names; '_' and '-' are interchangeable.
void apply_json(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (auto& [raw, v] : j.items()) {
      std::string key = raw;
      for (char& c : key)
        if (c == '_') c = '-';
      if (key == "problem") cfg.problem = v.get<std::string>();
      else if (key == "grid") cfg.grid = v.get<Index>();
      else if (key == "paper-scale") cfg.paper_scale = v.get<bool>();
      else if (key == "partition") cfg.partition = parse_partition(v.get<std::string>());
      else if (key == "order") cfg.order = v.get<int>();
      else if (key == "form") cfg.form = parse_form(v.get<std::string>());
      else if (key == "jacobian") cfg.jacobian = parse_jacobian(v.get<std::string>());
      else if (key == "tspan") apply_tspan(cfg, v.get<std::string>());
      else if (key == "steps-pow2") apply_pow2(cfg, v.get<std::string>());
      else if (key == "steps") cfg.steps = v.get<std::vector<double>>();
      else if (key == "coefficients") cfg.coefficients = parse_coefficient_evaluation(v.get<std::string>());
      else if (key == "krylov-tol") cfg.krylov_tol = v.get<double>();
      else if (key == "krylov-mmax") cfg.krylov_m_max = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "no-timing") cfg.timing = !v.get<bool>();
      else if (key == "reference-cache") cfg.reference_cache = v.get<std::string>();
      else throw ConfigError("unknown config key '" + raw + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

struct RunFlags {
  std::string config, problem, partition, form, jacobian, coefficients, tspan, steps_pow2, out, reference_cache;
  Index grid = 0;
  int order = 0, mmax = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  bool paper_scale = false, no_timing = false;
};

int run_study(const RunFlags& f, const CLI::App& sub) {
  RunConfig cfg;
  if (!f.config.empty()) apply_json(cfg, f.config);
  auto given = [&sub](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--problem")) cfg.problem = f.problem;
  if (given("--grid")) cfg.grid = f.grid;
  if (given("--paper-scale")) cfg.paper_scale = f.paper_scale;
  if (given("--partition")) cfg.partition = parse_partition(f.partition);
  if (given("--order")) cfg.order = f.order;
  if (given("--form")) cfg.form = parse_form(f.form);
  if (given("--jacobian")) cfg.jacobian = parse_jacobian(f.jacobian);
  if (given("--coefficients")) cfg.coefficients = parse_coefficient_evaluation(f.coefficients);
  if (given("--tspan")) apply_tspan(cfg, f.tspan);
  if (given("--steps-pow2")) apply_pow2(cfg, f.steps_pow2);
  if (given("--krylov-tol")) cfg.krylov_tol = f.tol;
  if (given("--krylov-mmax")) cfg.krylov_m_max = f.mmax;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--out")) cfg.out = f.out;
  if (given("--no-timing")) cfg.timing = !f.no_timing;
  if (given("--reference-cache")) cfg.reference_cache = f.reference_cache;
  cfg.validate();

  StudyResult res = run_convergence_study(cfg);
  Metadata meta = study_metadata(res);
  if (cfg.timing) {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta.emplace_back("generated", buf);
  }
  if (cfg.out.empty()) {
    std::cout << format_csv(res.rows, meta);
  } else {
    emit_csv(res.rows, meta, cfg.out);
    std::cerr << cfg.label() << ": wrote " << res.rows.size() << " rows to " << cfg.out << "\n";
  }
  for (const auto& r : res.rows)
    if (!r.failure.empty()) std::cerr << "h=" << format_number(r.h) << " failed: " << r.failure << "\n";
  return 0;
}

int check_order(int order, int size, std::uint64_t seed, int up_to) {
  ExprkTableau tab = exprk_tableau(order);
  if (up_to == 0) up_to = order;
  auto res = check_order_conditions(tab, up_to, size, seed);
  std::printf("# %s, %dx%d, seed %llu\n", tab.name.c_str(), size, size, static_cast<unsigned long long>(seed));
  std::printf("%-6s %-22s %-22s\n", "cond", "strong", "weak");
  for (const auto& r : res) std::printf("%-6s %-22.6e %-22.6e\n", r.label.c_str(), r.strong, r.weak);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partitioned exponential Runge-Kutta integrators"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "convergence study, CSV output");
  run->add_option("--config", rf.config, "JSON file with defaults for any flag");
  run->add_option("--problem", rf.problem, "gray-scott | semilinear | linear");
  run->add_option("--grid", rf.grid, "grid side (or oracle dimension)");
  run->add_flag("--paper-scale", rf.paper_scale, "use the 300 x 300 grid");
  run->add_option("--partition", rf.partition, "none | species | space | physics | imex");
  run->add_option("--order", rf.order, "2 | 3 | 4");
  run->add_option("--form", rf.form, "orig | tran | part");
  run->add_option("--jacobian", rf.jacobian, "full | block");
  run->add_option("--coefficients", rf.coefficients, "recursive | expanded evaluation of transformed coefficients");
  run->add_option("--tspan", rf.tspan, "t0:tf");
  run->add_option("--steps-pow2", rf.steps_pow2, "j0:j1, steps (tf - t0) 2^-j");
  run->add_option("--krylov-tol", rf.tol, "Krylov tolerance");
  run->add_option("--krylov-mmax", rf.mmax, "Krylov dimension limit");
  run->add_option("--seed", rf.seed, "seed for the oracle problems");
  run->add_option("--out", rf.out, "CSV path (stdout when omitted)");
  run->add_flag("--no-timing", rf.no_timing, "write wall_ms = 0 and no timestamp");
  run->add_option("--reference-cache", rf.reference_cache, "directory for cached reference solutions");

  int co_order = 2, co_size = 6, co_up_to = 0;
  std::uint64_t co_seed = 0;
  auto* co = app.add_subcommand("check-order", "stiff order condition residuals");
  co->add_option("--order", co_order, "2 | 3 | 4");
  co->add_option("--size", co_size, "matrix size");
  co->add_option("--seed", co_seed, "random seed");
  co->add_option("--up-to", co_up_to, "highest condition order (default: design order)");

  int dt_order = 2;
  bool dt_transformed = false;
  auto* dt = app.add_subcommand("dump-tableau", "print a tableau in prefix notation");
  dt->add_option("--order", dt_order, "2 | 3 | 4");
  dt->add_flag("--transformed", dt_transformed, "print the transformed coefficients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) return run_study(rf, *run);
    if (co->parsed()) return check_order(co_order, co_size, co_seed, co_up_to);
    if (dt->parsed()) {
      ExprkTableau tab = exprk_tableau(dt_order);
      std::cout << (dt_transformed ? dump(transform(tab)) : dump(tab));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EvaluationFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
