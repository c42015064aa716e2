#pragma once

#include "falkon/metrics.hpp"
#include "falkon/preconditioner.hpp"
#include "falkon/solver.hpp"
#include "falkon/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace falkon::cli {

enum class Task { regression, binary, multiclass };
enum class SolverKind { falkon, falkon_basic_gd, krr, nystrom_direct, gd, cg };

std::string to_string(Task t);
std::string to_string(SolverKind s);

/// Everything one experiment needs. Every field has a config-file key of the
/// same name with '_' written as '-' (see setting_keys()).
struct RunConfig {
  /// Path to a data file, or "synthetic:<kind>" for a generated problem.
  std::string data;
  std::string format = "csv";  // csv | sparse
  Task task = Task::regression;
  SolverKind solver = SolverKind::falkon;
  std::string kernel = "gaussian";
  double sigma = 1.0;
  std::vector<double> sigma_per_dim;
  double lambda = 1e-6;
  Index centers = 100;
  int iters = 20;
  std::string sampling = "uniform";  // uniform | leverage
  std::string scores_file;
  /// Regularization for exact leverage scores when no scores file is given;
  /// 0 means use `lambda`.
  double leverage_lambda = 0.0;
  double q_factor = 1.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  Index block_rows = 0;
  int threads = 0;
  bool cache_kernel = false;
  std::string backend = "qr";
  /// Gradient step size for falkon_basic_gd and gd; 0 means automatic.
  double step = 0.0;
  bool normalize = true;
  bool diagnostics = false;
  double delta = 0.1;
  std::string out = "falkon_out";
  bool no_timestamp = false;
  Index synthetic_n = 2000;
  Index synthetic_d = 5;
  double noise = 0.1;
  /// Dense cap for krr / nystrom_direct / diagnostics.
  Index dense_cap = 4000;

  /// Cross-field checks; throws ArgumentError naming the offending field.
  void validate() const;
  /// The solver configuration these settings describe.
  FalkonConfig falkon_config() const;
};

/// Defaults, with `threads` taken from FALKON_THREADS when set.
RunConfig default_run_config();

/// Every accepted key, in report order.
const std::vector<std::string>& setting_keys();

/// Sets one field. Throws ArgumentError("<key>: ...") on unknown keys or
/// unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat "key = value" text; '#' starts a comment, blank lines are ignored.
/// Errors carry the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text);
RunConfig load_config_file(const std::filesystem::path& path,
                           RunConfig base = default_run_config());

/// Config as "key = value" lines in setting_keys() order.
void write_config(std::ostream& out, const RunConfig& cfg);

struct Split {
  Dataset train;
  Dataset test;
  std::optional<NormStats> norm_stats;
};

/// Load or generate, split, and z-score (dense data with `normalize`).
Split prepare_data(const RunConfig& cfg);

struct RunOutcome {
  std::string summary;
  std::string metric_name;
  double metric_value = 0.0;
  EvalReport eval;
  std::optional<IterTrace> trace;
  FalkonModel model;
  double seconds = 0.0;
};

/// Runs one experiment and writes into cfg.out:
///   report.txt  config, data sizes, solver facts, metrics, diagnostics
///   metrics.csv one header row and one value row
///   trace.csv   per-iteration history (iterative solvers)
///   theory.txt  diagnostics block (with --diagnostics)
///   model.bin   trained model
RunOutcome run(const RunConfig& cfg);

/// Runs every config and writes a merged CSV with one column of test metrics
/// per config: "iteration,<label_1>,...". Iterations a config did not reach
/// are empty cells; direct solvers appear at iteration 0. Each run writes its
/// reports to <out>/<label>. Throws ArgumentError when the configs differ in
/// data, format, task, test fraction, seed or normalization.
void compare(const std::vector<RunConfig>& configs, const std::filesystem::path& out_csv);

/// Text appended to --help: file formats and report layout.
std::string format_help();

}  // namespace falkon::cli
