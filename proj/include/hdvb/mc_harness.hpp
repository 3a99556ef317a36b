#pragma once

#include "hdvb/dgp.hpp"
#include "hdvb/types.hpp"
#include "hdvb/var_fit.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hdvb {

enum class Scenario { subgaussian, heavy_tail, corollary1_poly, corollary2_exp };

const char* to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view text);

struct GridCell {
  Index n = 10;
  Index t = 100;
};

struct DgpConfig {
  SparsePattern pattern;
  Index k = 1;
  double target_rho = 0.5;
  ErrorSpec errors;
  /// A = 0: the panel is the innovation sequence itself.
  bool white_noise = false;
};

struct MeanShift {
  Index series = 0;
  double shift = 0.5;
};

struct ExperimentSpec {
  DgpConfig dgp;
  std::vector<GridCell> grid;
  std::size_t b_reps = 499;
  std::size_t mc_reps = 200;
  std::vector<double> alphas{0.05};
  Scenario scenario = Scenario::subgaussian;
  std::uint64_t master_seed = 0;
  /// Seed index of grid[0]; single-cell re-runs set it to the cell's index.
  std::size_t cell_offset = 0;

  /// Lag order of the fitted model; 0 uses dgp.k.
  Index fit_lags = 0;
  FitOptions fit;
  double eps = 0.01;
  StatisticMode mode = StatisticMode::abs_max;
  std::optional<MeanShift> mean_shift;
  /// Skip estimation and use A-hat = 0 with the raw panel as residuals.
  bool zero_model = false;
  /// Skip estimation and use the true model and innovation covariance.
  bool inject_truth = false;
  /// Draws of each Gaussian-max oracle in the KS experiment.
  std::size_t oracle_draws = 20000;
  /// Replications run concurrently; results do not depend on it.
  unsigned threads = 1;
  bool trace = false;
};

/// Overwrites the error law and grid growth of `spec` with the preset of
/// spec.scenario. corollary1_poly and corollary2_exp keep every T in the grid
/// and replace N by ceil(T^0.5) and ceil(exp(T^0.25)) respectively.
ExperimentSpec apply_scenario(ExperimentSpec spec);

struct AlphaRow {
  double alpha = 0.05;
  double rejection_rate = 0.0;
  double rejection_se = 0.0;
  /// Share of replications with at least one stepdown rejection among
  /// series whose mean is zero.
  double fwer = 0.0;
  double fwer_se = 0.0;
  /// Share of replications in which the shifted series was rejected.
  std::optional<double> power;
  std::optional<double> power_se;
};

struct CellReport {
  GridCell cell;
  std::uint64_t cell_seed = 0;
  std::size_t reps_ok = 0;
  std::size_t reps_failed = 0;
  bool incomplete = false;
  std::vector<std::string> failures;

  std::vector<AlphaRow> alpha_rows;
  double mean_rho_hat = 0.0;
  double correction_rate = 0.0;

  // KS experiment.
  std::optional<double> ks_stat_oracle;
  std::optional<double> ks_boot_oracle;
  std::optional<double> ks_boot_stat;
  std::optional<double> ks_oracle_hat_oracle;

  // Covariance experiment.
  std::optional<double> cov_error_mean;
  std::optional<double> cov_error_p90;

  double seconds = 0.0;
};

struct TraceRow {
  std::size_t cell = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double value = 0.0;
  bool ok = true;
};

struct ExperimentReport {
  std::string experiment;
  ExperimentSpec spec;
  std::vector<CellReport> cells;
  /// Per-replication values: q_obs (size), statistic (ks), max error (cov).
  std::vector<TraceRow> trace;
  std::string software;
};

/// Seeds: grid cell c uses stream_key(master, cell_offset + c); replication r of that cell uses
/// stream_key(stream_key(cell, 1), r); its simulation, bootstrap and oracle
/// streams are stream_key(rep, 1..3).
std::uint64_t cell_seed(std::uint64_t master, std::size_t cell);
std::uint64_t replication_seed(std::uint64_t cell, std::size_t rep);

ExperimentReport run_size_experiment(const ExperimentSpec& spec);
ExperimentReport run_ks_convergence(const ExperimentSpec& spec);
ExperimentReport run_covariance_closeness(const ExperimentSpec& spec);

/// Re-runs cell `index` of `spec` alone; its numbers match the full run.
ExperimentSpec single_cell_spec(const ExperimentSpec& spec, std::size_t index);

std::string software_fingerprint();

}  // namespace hdvb
