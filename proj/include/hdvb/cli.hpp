#pragma once

#include "hdvb/dgp.hpp"
#include "hdvb/error.hpp"
#include "hdvb/mc_harness.hpp"
#include "hdvb/types.hpp"
#include "hdvb/var_fit.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hdvb::cli {

/// Options shared by all subcommands plus the subcommand-specific ones.
/// Defaults: K_max = 4, selector = bic, eps = 0.01, B = 999, alpha = {0.05},
/// mode = abs_max.
struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::optional<Index> lags;
  Index lags_max = 4;
  SelectorConfig selector;
  double eps = 0.01;
  std::size_t b_reps = 999;
  std::vector<double> alphas{0.05};
  StatisticMode mode = StatisticMode::abs_max;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // simulate (and the DGP of mc)
  Index dgp_lags = 1;
  Index n = 10;
  Index t = 200;
  double rho = 0.5;
  SparsePattern pattern;
  ErrorSpec errors;
  bool white_noise = false;
  std::optional<Index> burn_in;

  // fit
  Index diag_lags = 5;

  // mc
  std::string experiment = "size";
  std::vector<GridCell> grid;
  std::size_t mc_reps = 200;
  Scenario scenario = Scenario::subgaussian;
  std::string csv_output;
  std::string trace_output;
  std::optional<Index> shift_series;
  double shift = 0.5;
  std::size_t oracle_draws = 20000;
  bool zero_model = false;
  bool inject_truth = false;

  /// Lag order used by test and fit: lags when given, K_max otherwise.
  Index fit_lags() const { return lags.value_or(lags_max); }
};

/// Reads a numeric CSV (rows = time, oldest first; columns = series). A first
/// row that does not parse as numbers is a header. The first k rows become
/// the presample.
TimeSeriesPanel ingest_csv(const std::string& path, Index k);
TimeSeriesPanel parse_csv(std::istream& in, Index k, const std::string& source = "<stream>");

/// Shortest round-trip text for a double.
std::string format_double(double v);

void write_csv(std::ostream& out, const Eigen::Ref<const Matrix>& data, const std::vector<std::string>& labels);

/// Exit code of an error class: 2 input/config/shape, 3 estimation-side
/// (non_convergence, not_psd, singular, non_stationary, estimation),
/// 4 bootstrap. Anything that is not an hdvb::Error maps to 5.
int exit_code_for(ErrorKind kind) noexcept;

inline constexpr int kExitInternal = 5;

/// Full command-line entry point. Reports go to `out` (or --output), errors
/// as one JSON object to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_test(const RunConfig& cfg, std::ostream& out);
int cmd_fit(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_mc(const RunConfig& cfg, std::ostream& out);

/// Flat CSV of an experiment report: one row per cell and alpha.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
void write_trace_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace hdvb::cli
