#pragma once

#include "hdvb/lasso.hpp"
#include "hdvb/types.hpp"

#include <string>
#include <vector>

namespace hdvb {

struct LagDesign {
  /// Row t = (x'_{t-1}, ..., x'_{t-K}).
  Matrix design;
  /// The T estimation rows.
  Matrix responses;
};

LagDesign build_lag_design(const TimeSeriesPanel& panel, Index k);

enum class SelectorKind { bic, tscv, fixed };

const char* to_string(SelectorKind kind) noexcept;
SelectorKind parse_selector_kind(std::string_view text);

struct SelectorConfig {
  SelectorKind kind = SelectorKind::bic;
  /// Used by SelectorKind::fixed.
  double fixed_lambda = 0.0;
  int grid_points = 30;
  double grid_ratio = 0.01;
  int cv_folds = 5;
  /// 0 selects T / 2.
  Index cv_min_train = 0;
};

struct EquationFit {
  double lambda = 0.0;
  Index df = 0;
  double kkt_violation = 0.0;
  bool converged = false;
  bool failed = false;
  std::string failure;
};

struct FitReport {
  VarModel model;
  /// T x N residuals x_t - sum_k A_k x_{t-k}.
  Matrix residuals;
  std::vector<EquationFit> per_equation;
  std::string lag_design_spec;
};

struct FitOptions {
  SelectorConfig selector;
  LassoOptions lasso;
  unsigned threads = 1;
};

/// Lasso equation by equation with independently selected penalties. Throws
/// ErrorKind::estimation only if every equation fails.
FitReport fit_sparse_var(const TimeSeriesPanel& panel, Index k, const FitOptions& opts = {});

/// Trigger for stationarity correction: rho >= 1 - margin.
inline constexpr double kStationarityMargin = 1e-8;

/// Divides every coefficient by (rho + eps), repeating (at most 10 times)
/// until the companion radius is below 1 - kStationarityMargin. Models that
/// already satisfy that are returned unchanged.
VarModel stationarity_correct(const VarModel& model, double eps = 0.01);

struct AutocorrCell {
  Index series = 0;
  Index lag = 0;
  double autocorr = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

struct AutocorrDiagnostic {
  std::vector<AutocorrCell> cells;
  std::vector<Index> degenerate_series;
  double alpha = 0.05;
  Index family_size = 0;
  bool white = true;
};

/// Holm step-down decisions for the given p-values at level alpha.
std::vector<bool> holm_reject(const std::vector<double>& p_values, double alpha);

/// Per-series, per-lag sqrt(T) r_{j,h} tests against N(0,1), Holm-adjusted
/// across all non-degenerate cells.
AutocorrDiagnostic residual_autocorr_diagnostic(const Eigen::Ref<const Matrix>& residuals, Index max_lag,
                                                double alpha);

double normal_cdf(double x);

}  // namespace hdvb
