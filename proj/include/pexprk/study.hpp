#pragma once

// Convergence studies: run one configuration over a list of step sizes,
// compare against a fine-step reference, and write the table as CSV.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pexprk/errors.hpp"
#include "pexprk/problems.hpp"
#include "pexprk/steppers.hpp"

namespace pexprk {

enum class Partition { none, species, space, physics, imex };
enum class Form { orig, tran, part };
enum class JacobianKind { full, block };

std::string_view to_string(Partition p);
std::string_view to_string(Form f);
std::string_view to_string(JacobianKind j);
/// Throw ConfigError on unknown names.
Partition parse_partition(std::string_view s);
Form parse_form(std::string_view s);
JacobianKind parse_jacobian(std::string_view s);

struct RunConfig {
  std::string problem = "gray-scott";  ///< gray-scott | semilinear | linear
  Index grid = kGrayScottDeskGrid;      ///< grid side, or the dimension for the oracle problems
  bool paper_scale = false;             ///< grid side 300 for gray-scott
  Partition partition = Partition::none;
  int order = 2;
  Form form = Form::tran;
  JacobianKind jacobian = JacobianKind::full;
  double t0 = 0.0;
  double tf = kGrayScottFinalTime;
  std::vector<double> steps;  ///< explicit step sizes; when empty, (tf - t0) 2^-j for j in [pow2_first, pow2_last]
  int pow2_first = 1;
  int pow2_last = 6;
  CoefficientEvaluation coefficients = CoefficientEvaluation::recursive;
  double krylov_tol = 1e-12;
  int krylov_m_max = 300;
  std::uint64_t seed = 0;
  std::string out;
  bool timing = true;           ///< false writes wall_ms = 0 for byte-reproducible files
  std::string reference_cache;  ///< directory for cached reference states; empty disables

  /// Throws ConfigError.
  void validate() const;
  Index effective_grid() const;
  std::vector<double> step_sizes() const;
  std::string label() const;
};

struct ConvergenceRow {
  double h = 0.0;
  double error_l2 = 0.0;
  std::optional<double> observed_order;
  std::uint64_t matvecs = 0;
  std::uint64_t krylov_dims = 0;
  double wall_ms = 0.0;
  std::string failure;  ///< empty on success
};

struct ReferenceSolution {
  Vector state;
  double h_ref = 0.0;
  /// Discrete L2 distance between the h_ref and 2 h_ref solutions.
  double self_consistency = 0.0;
  bool from_cache = false;
};

struct StudyResult {
  RunConfig config;
  ReferenceSolution reference;
  std::vector<ConvergenceRow> rows;
  /// self_consistency / smallest study error; the gate requires < 1e-2.
  double gate_ratio = 0.0;
};

/// Thrown when the reference fails its self-consistency gate.
class ReferenceGateFailure : public EvaluationFailure {
 public:
  using EvaluationFailure::EvaluationFailure;
};

/// ||x||_2 / sqrt(N).
double discrete_l2(const Vector& x);

/// Order-4 transformed method (recursive coefficient evaluation), unpartitioned with the full Jacobian, at
/// h_ref = (smallest study step) / 32 and Krylov tolerance 1e-13; also
/// integrates with 2 h_ref to measure self-consistency.
ReferenceSolution reference_solution(const RunConfig& cfg);

/// The step function and initial state a configuration describes.
struct ConfiguredRun {
  StepFunction step;
  Vector u0;
};
ConfiguredRun configure_run(const RunConfig& cfg);

/// Throws ReferenceGateFailure if the reference is not at least 100x more
/// self-consistent than the smallest finite study error, and EvaluationFailure
/// if every row failed.
StudyResult run_convergence_study(const RunConfig& cfg);

/// p_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i) (log2 of the ratio for halving);
/// empty for the first row or where an error is not positive and finite.
/// Throws ContractViolation for fewer than two rows or mismatched lengths.
std::vector<std::optional<double>> estimate_order(const std::vector<double>& h, const std::vector<double>& errors);

using Metadata = std::vector<std::pair<std::string, std::string>>;
Metadata study_metadata(const StudyResult& res);

inline constexpr std::string_view kCsvHeader = "h,error_l2,observed_order,matvecs,krylov_dims,wall_ms";

std::string format_csv(const std::vector<ConvergenceRow>& rows, const Metadata& meta);
/// Throws Error carrying the system message on I/O failure.
void emit_csv(const std::vector<ConvergenceRow>& rows, const Metadata& meta, const std::string& path);
std::vector<ConvergenceRow> parse_csv(const std::string& text);

}  // namespace pexprk
