#include "hdvb/inference.hpp"

#include "hdvb/error.hpp"
#include "hdvb/linproc.hpp"

#include <algorithm>
#include <cmath>

namespace hdvb {

namespace {

void check_run(const TimeSeriesPanel& panel, const BootstrapRun& run, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::config, "alpha must lie in (0, 1)");
  if (panel.t_obs() < 1 || panel.n_series() < 1) throw Error(ErrorKind::input, "empty panel");
  if (run.q_stats.empty()) throw Error(ErrorKind::config, "bootstrap run has no replicates");
  if (run.t_obs != panel.t_obs() || run.boot_means.cols() != panel.n_series()) {
    throw Error(ErrorKind::config, "bootstrap run does not match the panel (T or N differ)");
  }
}

}  // namespace

GlobalTestResult global_test(const TimeSeriesPanel& panel, const BootstrapRun& run, double alpha,
                             std::optional<StatisticMode> requested) {
  check_run(panel, run, alpha);
  const StatisticMode mode = run.config.statistic_mode;
  if (requested && *requested != mode) {
    throw Error(ErrorKind::config, std::string("requested statistic '") + to_string(*requested) +
                                       "' but the bootstrap run used '" + to_string(mode) + "'");
  }
  GlobalTestResult out;
  out.alpha = alpha;
  out.mode = mode;
  out.q_obs = max_mean_statistic(panel, mode);

  const std::size_t b = run.q_stats.size();
  std::vector<double> sorted = run.q_stats;
  std::size_t extreme = 0;
  if (mode == StatisticMode::min) {
    // Lower tail: the abs/max rule applied to the negated statistic.
    for (double& v : sorted) v = -v;
    std::sort(sorted.begin(), sorted.end());
    out.q_crit = -sorted[order_statistic_index(b, 1.0 - alpha)];
    out.reject = out.q_obs < out.q_crit;
    for (double q : run.q_stats) extreme += q <= out.q_obs ? 1 : 0;
  } else {
    std::sort(sorted.begin(), sorted.end());
    out.q_crit = sorted[order_statistic_index(b, 1.0 - alpha)];
    out.reject = out.q_obs > out.q_crit;
    for (double q : run.q_stats) extreme += q >= out.q_obs ? 1 : 0;
  }
  out.p_value = static_cast<double>(1 + extreme) / static_cast<double>(b + 1);
  return out;
}

StepdownResult stepdown(const TimeSeriesPanel& panel, const BootstrapRun& run, double alpha) {
  check_run(panel, run, alpha);
  const Index n = panel.n_series();
  const Index b_reps = run.boot_means.rows();
  const double root_t = std::sqrt(static_cast<double>(run.t_obs));

  StepdownResult out;
  out.alpha = alpha;
  const Vector observed = scaled_means(panel).cwiseAbs();
  out.observed.assign(observed.data(), observed.data() + n);
  out.rejected_at.assign(static_cast<std::size_t>(n), std::nullopt);

  std::vector<Index> survivors(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) survivors[static_cast<std::size_t>(j)] = j;
  std::vector<double> restricted(static_cast<std::size_t>(b_reps));

  while (!survivors.empty()) {
    ++out.iterations;
    for (Index b = 0; b < b_reps; ++b) {
      double m = 0.0;
      for (Index j : survivors) m = std::max(m, std::abs(root_t * run.boot_means(b, j)));
      restricted[static_cast<std::size_t>(b)] = m;
    }
    std::sort(restricted.begin(), restricted.end());
    const double crit = restricted[order_statistic_index(restricted.size(), 1.0 - alpha)];
    out.critical_values.push_back(crit);

    std::vector<Index> keep;
    bool any = false;
    for (Index j : survivors) {
      if (out.observed[static_cast<std::size_t>(j)] > crit) {
        out.rejected_at[static_cast<std::size_t>(j)] = out.iterations;
        out.rejected.push_back(j);
        any = true;
      } else {
        keep.push_back(j);
      }
    }
    survivors = std::move(keep);
    if (!any) break;
  }
  out.retained = survivors;
  return out;
}

}  // namespace hdvb
