#pragma once

// Experiment grid over (target, method, tuning, replicate), CSV result tables
// and the generated plot script.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crumbs/diagnostics.hpp"
#include "crumbs/samplers.hpp"

namespace crumbs {

/// 12 points log-uniformly spaced on [10^-1.5, 10^3.5].
std::vector<double> default_tunings();

struct ExperimentSpec {
  std::vector<std::string> targets;
  std::vector<std::string> methods;
  std::vector<double> tunings = default_tunings();
  std::size_t chain_length = 150000;
  std::uint64_t master_seed = 20100308;
  std::size_t replicate_count = 1;
  std::size_t parallelism = 1;
  // When false, seconds_per_indep is left empty so the CSV is a pure
  // function of the ExperimentSpec.
  bool record_timing = true;

  /// Throws ConfigError (unknown names, empty lists, bad numbers).
  void validate() const;
};

/// Flat `key = value` text; lists comma-separated; `#` starts a comment.
ExperimentSpec parse_experiment_spec(std::string_view text);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct ResultRow {
  std::string target;
  std::string method;
  double tuning = 0.0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::optional<double> tau;
  std::optional<double> ess;
  std::optional<double> evals_per_indep;
  std::optional<double> seconds_per_indep;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::optional<bool> reliable;
  bool error_flag = false;

  bool operator==(const ResultRow&) const = default;
};

struct Cell {
  std::size_t index = 0;
  std::string target;
  Method method = Method::covariance_matching;
  double tuning = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
};

/// Cells in target-major, then method, tuning, replicate order; each seed is
/// derive_seed(master_seed, index).
std::vector<Cell> enumerate_cells(const ExperimentSpec& spec);

/// Row for one finished chain; failures (tuning, crumb limit, degenerate
/// series) give error_flag = true with empty diagnostics.
ResultRow make_row(const Cell& cell, const ChainResult& chain,
                   bool record_timing);

/// Runs one chain per cell, in parallel when spec.parallelism > 1. `base`
/// supplies the non-tuning sampler knobs. Rows come back in cell order.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      const SamplerConfig& base = {});

inline constexpr std::string_view kCsvHeader =
    "target,method,tuning,seed,n,tau,ess,evals_per_indep,seconds_per_indep,"
    "ci_low,ci_high,reliable,error_flag";

std::string format_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(std::string_view text);
void write_csv(const std::vector<ResultRow>& rows,
               const std::filesystem::path& path);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

/// Self-contained Python/matplotlib program drawing a (target rows x method
/// columns) grid of log-log panes, with `?` markers for unreliable chains.
/// Running it writes `image_path` (or its first argument).
std::string plot_script(const std::vector<ResultRow>& rows,
                        std::string_view image_path);
void emit_plot_script(const std::vector<ResultRow>& rows,
                      const std::filesystem::path& path);

}  // namespace crumbs
