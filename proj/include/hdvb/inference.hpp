#pragma once

#include "hdvb/bootstrap.hpp"
#include "hdvb/types.hpp"

#include <optional>
#include <vector>

namespace hdvb {

struct GlobalTestResult {
  bool reject = false;
  double q_obs = 0.0;
  double q_crit = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  StatisticMode mode = StatisticMode::abs_max;
};

/// Bootstrap test of H0: all means zero. For abs_max and max the rejection
/// region is q_obs > Q*^(ceil(B(1-alpha))) with p = (1 + #{Q* >= q_obs}) / (B + 1);
/// min mirrors it in the lower tail. A `requested` mode that differs from the
/// run's mode is a config error.
GlobalTestResult global_test(const TimeSeriesPanel& panel, const BootstrapRun& run, double alpha,
                             std::optional<StatisticMode> requested = std::nullopt);

struct StepdownResult {
  /// |sqrt(T) mean_j| per series.
  std::vector<double> observed;
  /// Iteration (1-based) at which each series was rejected, if it was.
  std::vector<std::optional<int>> rejected_at;
  /// Rejected series in rejection order.
  std::vector<Index> rejected;
  std::vector<Index> retained;
  /// Critical value of every iteration, including the last.
  std::vector<double> critical_values;
  double alpha = 0.05;
  int iterations = 0;
};

/// Stepdown over the stored bootstrap means: each iteration recomputes the
/// max over the surviving set from run.boot_means and rejects every survivor
/// whose observed statistic strictly exceeds the restricted critical value.
StepdownResult stepdown(const TimeSeriesPanel& panel, const BootstrapRun& run, double alpha);

}  // namespace hdvb
