#pragma once

#include "hdvb/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hdvb {

struct BootstrapConfig {
  std::size_t b_reps = 999;
  StatisticMode statistic_mode = StatisticMode::abs_max;
  std::uint64_t seed = 0;
  /// Replicates per scheduled task.
  std::size_t parallel_chunk = 16;
  unsigned threads = 1;
};

struct BootstrapReplicate {
  double q = 0.0;
  /// Per-series bootstrap means (1/T) sum_t x*_{j,t}.
  Vector means;
};

struct BootstrapRun {
  std::vector<double> q_stats;
  /// B x N, row b holds the bootstrap means of replicate b.
  Matrix boot_means;
  BootstrapConfig config;
  Index t_obs = 0;
  /// FNV-1a hash of the coefficients and residuals the run was built from.
  std::string model_fingerprint;
};

/// Seed of replicate b under the master seed.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t b);

/// One multiplier-bootstrap draw: e*_t = e_t g_t with g_t iid N(0,1) from the
/// counter stream rep_seed, presample rows copied from the data, and
/// x*_t = sum_k A_k x*_{t-k} + e*_t for t = 1..T.
BootstrapReplicate bootstrap_replicate(const VarModel& model, const Eigen::Ref<const Matrix>& residuals,
                                       const TimeSeriesPanel& panel, std::uint64_t rep_seed,
                                       StatisticMode mode = StatisticMode::abs_max);

/// B replicates with seeds replicate_seed(cfg.seed, b), stored in b order.
/// The result does not depend on cfg.threads or cfg.parallel_chunk.
BootstrapRun run_bootstrap(const VarModel& model, const Eigen::Ref<const Matrix>& residuals,
                           const TimeSeriesPanel& panel, const BootstrapConfig& cfg);

/// Order statistic ceil(B * level) of the stored statistics.
double bootstrap_quantile(const BootstrapRun& run, double level);

std::string fingerprint(const VarModel& model, const Eigen::Ref<const Matrix>& residuals);

}  // namespace hdvb
