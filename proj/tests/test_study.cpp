#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "pexprk/errors.hpp"
#include "pexprk/phi.hpp"
#include "pexprk/study.hpp"

using namespace pexprk;

namespace {

RunConfig small_gray_scott(Form form, Partition part, int order) {
  RunConfig c;
  c.grid = 16;
  c.form = form;
  c.partition = part;
  c.order = order;
  c.pow2_first = 2;
  c.pow2_last = 4;
  c.timing = false;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("estimate_order") {
  auto o = estimate_order({1.0, 0.5}, {4.0, 1.0});
  CHECK_FALSE(o[0].has_value());
  CHECK(*o[1] == 2.0);
  CHECK(*estimate_order({1.0, 0.5}, {8.0, 1.0})[1] == 3.0);
  auto gap = estimate_order({1.0, 0.5, 0.25}, {std::numeric_limits<double>::quiet_NaN(), 2.0, 0.5});
  CHECK_FALSE(gap[1].has_value());
  CHECK(*gap[2] == 2.0);
  CHECK(*estimate_order({0.3, 0.1}, {27.0, 1.0})[1] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(estimate_order({1.0}, {1.0}), ContractViolation);
  CHECK_THROWS_AS(estimate_order({1.0, 0.5}, {1.0}), ContractViolation);
}

TEST_CASE("step sizes and labels") {
  RunConfig c;
  auto hs = c.step_sizes();
  REQUIRE(hs.size() == 6);
  CHECK(hs.front() == 0.131072);
  CHECK(hs.back() == 0.004096);
  for (std::size_t i = 1; i < hs.size(); ++i) CHECK(hs[i - 1] == 2.0 * hs[i]);
  CHECK(c.effective_grid() == 64);
  c.paper_scale = true;
  CHECK(c.effective_grid() == 300);
}

TEST_CASE("configuration validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  RunConfig bad = c;
  bad.order = 5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.form = Form::part;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.partition = Partition::species;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.problem = "brusselator";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.grid = 33;
  bad.form = Form::part;
  bad.partition = Partition::space;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.steps = {0.1, 0.2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.krylov_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(parse_partition("rows"), ConfigError);
  CHECK(parse_form("part") == Form::part);
  CHECK(parse_jacobian("block") == JacobianKind::block);
}

TEST_CASE("CSV format") {
  Metadata meta = {{"method", "x"}, {"grid", "8"}};
  SUBCASE("empty rows give a header-only file") {
    CHECK(format_csv({}, meta) == "# method=x\n# grid=8\n" + std::string(kCsvHeader) + "\n");
    CHECK(parse_csv(format_csv({}, meta)).empty());
  }
  SUBCASE("round trip is bit-exact") {
    std::vector<ConvergenceRow> rows(3);
    rows[0] = {0.1, 1.0 / 3.0, std::nullopt, 10, 9, 1.25, ""};
    rows[1] = {0.05, 0.1 / 7.0, std::log2(7.0 / 0.3), 20, 17, 0.0, ""};
    rows[2] = {0.025, std::numeric_limits<double>::quiet_NaN(), std::nullopt, 0, 0, 3.5, "state became non-finite"};
    const std::string text = format_csv(rows, meta);
    CHECK(text.find(std::string(kCsvHeader)) != std::string::npos);
    auto back = parse_csv(text);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 2; ++i) {
      CHECK(back[i].h == rows[i].h);
      CHECK(back[i].error_l2 == rows[i].error_l2);
      CHECK(back[i].observed_order == rows[i].observed_order);
      CHECK(back[i].matvecs == rows[i].matvecs);
      CHECK(back[i].krylov_dims == rows[i].krylov_dims);
      CHECK(back[i].wall_ms == rows[i].wall_ms);
    }
    CHECK(std::isnan(back[2].error_l2));
    CHECK(back[2].failure == rows[2].failure);
    CHECK(format_csv(back, meta) == text);
  }
  SUBCASE("I/O errors are reported") {
    CHECK_THROWS_AS(emit_csv({}, meta, "/nonexistent-dir/out.csv"), Error);
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(parse_csv("a,b\n"), ContractViolation);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\n1,2,3\n"), ContractViolation);
  }
}

TEST_CASE("linear oracle reference is the exponential") {
  RunConfig c;
  c.problem = "linear";
  c.grid = 20;
  c.seed = 4;
  c.tf = 1.0;
  c.pow2_first = 1;
  c.pow2_last = 3;
  ReferenceSolution ref = reference_solution(c);
  SemilinearOracle o = oracle_semilinear(20, 4, 0.0);
  const Vector exact = expm_dense(o.l) * o.u0;
  CHECK((ref.state - exact).norm() <= 1e-11 * exact.norm());
  CHECK(ref.h_ref == doctest::Approx(0.125 / 32.0).epsilon(1e-15));
}

TEST_CASE("semilinear oracle study") {
  RunConfig c;
  c.problem = "semilinear";
  c.grid = 10;
  c.seed = 1;
  c.tf = 1.0;
  c.order = 3;
  c.pow2_first = 2;
  c.pow2_last = 5;
  c.timing = false;
  StudyResult res = run_convergence_study(c);
  REQUIRE(res.rows.size() == 4);
  double mean = 0.0;
  for (int i = 1; i < 4; ++i) mean += *res.rows[i].observed_order / 3.0;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.4 / 3.0));
  CHECK(res.gate_ratio < 1e-2);
  for (const auto& r : res.rows) CHECK(r.matvecs > 0);
}

TEST_CASE("Gray-Scott studies") {
  SUBCASE("transformed and original forms give the same errors") {
    StudyResult orig = run_convergence_study(small_gray_scott(Form::orig, Partition::none, 3));
    for (auto mode : {CoefficientEvaluation::expanded, CoefficientEvaluation::recursive}) {
      RunConfig c = small_gray_scott(Form::tran, Partition::none, 3);
      c.coefficients = mode;
      StudyResult tran = run_convergence_study(c);
      REQUIRE(tran.rows.size() == orig.rows.size());
      for (std::size_t i = 0; i < orig.rows.size(); ++i)
        CHECK(std::abs(tran.rows[i].error_l2 - orig.rows[i].error_l2) <= 1e-10 * orig.rows[i].error_l2);
    }
  }
  SUBCASE("identical configurations write identical files") {
    RunConfig c = small_gray_scott(Form::part, Partition::physics, 2);
    const auto dir = std::filesystem::temp_directory_path();
    const std::string a = (dir / "pexprk-study-a.csv").string(), b = (dir / "pexprk-study-b.csv").string();
    StudyResult r1 = run_convergence_study(c);
    emit_csv(r1.rows, study_metadata(r1), a);
    StudyResult r2 = run_convergence_study(c);
    emit_csv(r2.rows, study_metadata(r2), b);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a).find("# reference_self_consistency=") != std::string::npos);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
  }
  SUBCASE("counters are positive with a nonzero operator") {
    RunConfig c = small_gray_scott(Form::tran, Partition::none, 2);
    c.pow2_first = 9;
    c.pow2_last = 10;
    StudyResult res = run_convergence_study(c);
    for (const auto& r : res.rows) {
      CHECK(r.krylov_dims > 0);
      CHECK(r.matvecs > 0);
    }
  }
  SUBCASE("reference cache on disk") {
    RunConfig c = small_gray_scott(Form::part, Partition::species, 2);
    const auto dir = std::filesystem::temp_directory_path() / "pexprk-refcache-test";
    std::filesystem::remove_all(dir);
    c.reference_cache = dir.string();
    c.seed = 77;  // key differs from the other cases, so the first call computes
    ReferenceSolution first = reference_solution(c);
    CHECK(std::filesystem::exists(dir));
    CHECK_FALSE(std::filesystem::is_empty(dir));
    ReferenceSolution again = reference_solution(c);
    CHECK(again.state == first.state);
    CHECK(again.from_cache);
    std::filesystem::remove_all(dir);
  }
}
