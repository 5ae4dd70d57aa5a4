#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "awm/fem_adaptive.hpp"

namespace awm {

enum class ExperimentKind { ApproxRates, SolveWavelet, SolveFem, Compare };

std::string to_string(ExperimentKind kind);
/// Accepts approx_rates, solve_wavelet, solve_fem, compare (or with dashes).
ExperimentKind parse_experiment_kind(const std::string& text);

/// One experiment. Every field has an explicit default and all of them are
/// echoed into metadata.csv.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Compare;
  std::string problem = "singular07";
  /// N values for best N-term curves; empty means the problem's default.
  std::vector<std::int64_t> n_list;
  /// Levels J of the uniform (linear) curves; empty means the problem's default.
  std::vector<int> linear_levels;
  int max_level = 62;
  double eps_initial = 1.0;
  double eps_final = 1.0 / 1024.0;
  bool coarsening = true;
  double c_coarse = 2.0;
  /// FEM strategies: uniform, threshold, fixed_fraction, bulk.
  std::vector<std::string> strategies{"uniform", "threshold"};
  double threshold_theta = 0.5;
  double fixed_fraction = 0.2;
  double bulk_theta = 0.5;
  std::size_t max_elements = 2048;
  /// Leaves wall-clock columns out of every CSV.
  bool deterministic = true;
  /// Output directory; nothing is written when empty.
  std::filesystem::path out;
};

/// Parses the JSON configuration. Unknown keys, wrong types and violated
/// invariants raise ConfigError; absent keys keep their defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fills empty lists with the problem's defaults: N = 1..20 and J = 4..12
/// for jump13, N = 12..192 and J = 4..18 for the singular problems,
/// N = 4..1024 and J = 2..10 for smooth.
ExperimentConfig with_defaults(ExperimentConfig config);
/// Throws ConfigError (or LookupError for an unknown problem). Expects
/// defaults to be filled in.
void validate(const ExperimentConfig& config);
/// JSON with every field, defaults included.
std::string to_json(const ExperimentConfig& config);

RefinementStrategy strategy_from_name(const std::string& name, const ExperimentConfig& config);

/// One line of rates.csv.
struct RateRow {
  std::string method;
  std::int64_t n_or_n = 0;  // N for approximation curves, step or round otherwise
  std::int64_t size = 0;    // active set, elements or N; the fit abscissa
  std::optional<double> eps;
  std::optional<double> residual;  // solver residual or FEM estimator
  double error = 0.0;
  bool in_slope_window = false;
};

struct MethodSummary {
  std::string method;
  std::size_t points = 0;
  double slope = 0.0;
  std::optional<bool> super_polynomial;
};

struct RateTable {
  std::vector<RateRow> rows;
  std::vector<MethodSummary> methods;
  std::vector<std::pair<std::string, std::string>> metadata;

  /// Rows of one method in table order.
  std::vector<RateRow> rows_of(const std::string& method) const;
  const MethodSummary& summary(const std::string& method) const;
};

/// Columns method, n_or_N, size, eps, residual, error, slope_window_flag.
std::string rates_csv(const std::vector<RateRow>& rows);
/// Columns method, points, slope, super_polynomial.
std::string summary_csv(const std::vector<MethodSummary>& methods);
/// Aligned text table for the terminal.
std::string format_table(const RateTable& table);

/// Least-squares slope of log(error) against log(size) over the trailing half
/// of the rows, the same fit the table reports.
double slope_of(const std::vector<RateRow>& rows);

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Runs the pipeline. With config.out set it writes rates.csv,
/// rate_table.csv, metadata.csv and one trace file per method, each through
/// a temporary file and a rename; if anything fails the files of this run
/// are removed. Module errors are rethrown with the experiment attached.
RateTable run_experiment(const ExperimentConfig& config);

}  // namespace awm
