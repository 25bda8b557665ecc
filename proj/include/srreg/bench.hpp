#pragma once

#include "srreg/admm.hpp"
#include "srreg/data.hpp"
#include "srreg/metrics.hpp"
#include "srreg/pmm.hpp"
#include "srreg/regularizer.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srreg::bench {

enum class Solver { Pmm, Padmm, Dadmm, AdmmNc };
enum class Format { Csv, Json };

std::string_view to_string(Solver s);
/// Accepts pmm, padmm, dadmm, admm-nc (case-sensitive).
Solver parse_solver(std::string_view s);

/// Solver-independent knobs; everything else uses library defaults.
struct SolverOptions {
  double tol = 1e-6;
  int admm_maxit = 10000;
  int pmm_maxit = 200;
};

/// Throws Error when the solver cannot handle the penalty (pADMM and dADMM
/// are convex-only).
void check_compatible(Solver s, PenaltyKind kind);

/// Default configuration used by the CLI and the bench for each solver.
pmm::PmmConfig pmm_config(const SolverOptions& opt);
admm::AdmmConfig admm_config(Solver s, const SolverOptions& opt);

SolveResult run_solver(Solver s, const ProblemData& data, const RegularizerSpec& spec, const SolverOptions& opt);

/// The η reported for a result: η̃ for nonconvex penalties, η_kkt otherwise.
double reported_eta(const SolveResult& r, PenaltyKind kind);

struct BenchPlan {
  // Dataset: synthetic when data_path is empty.
  int example = 1;
  long m = 800;
  long n = 0;  // 0 keeps the example's dimension
  std::string data_path;
  int cv_folds = 10;
  bool scale = false;  // unit-norm columns (file datasets)

  std::vector<Solver> solvers{Solver::Pmm};
  std::vector<double> lambda_c{0.5};
  std::vector<std::uint64_t> seeds{1};
  PenaltyKind reg = PenaltyKind::L1;
  double a = 3.7;
  SolverOptions options;
  int threads = 1;
  std::string out;  // empty: standard output
  Format format = Format::Csv;

  /// Throws Error on an empty grid or solver list, incompatible solvers, or
  /// a missing data file.
  void validate() const;
};

struct ReportRow {
  std::string kind = "run";  // "run" or "best"
  std::string probname;
  std::uint64_t seed = 0;
  long m = 0;
  long n = 0;
  std::string reg;
  double lambda_c = 0.0;
  double lambda = 0.0;
  std::string solver;
  std::string status = "ok";  // ok | not_converged | error: <message>
  int nnz = 0;
  double eta = 0.0;
  double pobj = 0.0;
  double val_error = 0.0;   // validation MSE, or mean CV MSE for file data
  double test_error = 0.0;  // NaN without a test set
  int iters = 0;
  double wall_time = 0.0;

  bool operator==(const ReportRow&) const = default;
};

/// One row per (solver, λ_c, seed) in that nesting order (solvers outermost),
/// followed by one "best" row per solver: the λ_c with the smallest mean
/// validation error over seeds (earliest in the grid on ties), with metrics
/// averaged over those seeds. Failed tasks keep their row with status
/// "error: ..." and NaN metrics.
std::vector<ReportRow> run_bench(const BenchPlan& plan);

Format parse_format(std::string_view s);

inline constexpr int kReportVersion = 1;
/// Header line of the CSV report (after the "# srreg-report v1" line).
std::string_view csv_header();

void write_report(std::ostream& out, const std::vector<ReportRow>& rows, Format f);
/// Reads either format (detected from the first non-blank character).
std::vector<ReportRow> read_report(std::istream& in);

/// Flat "key = value" config file; '#' starts a comment. Keys are the long
/// CLI flag names without dashes (solver, lambda-c, seed, ...).
std::map<std::string, std::string> parse_config(std::istream& in, const std::string& source = "<config>");

/// Applies recognised keys to a plan; unknown keys throw Error.
/// List values are comma separated.
void apply_options(BenchPlan& plan, const std::map<std::string, std::string>& kv);

}  // namespace srreg::bench
