#include "hdvb/bootstrap.hpp"

#include "hdvb/error.hpp"
#include "hdvb/linproc.hpp"
#include "hdvb/parallel.hpp"
#include "hdvb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hdvb {

std::uint64_t replicate_seed(std::uint64_t master, std::size_t b) { return stream_key(master, b); }

namespace {

void check_inputs(const VarModel& model, const Eigen::Ref<const Matrix>& residuals, const TimeSeriesPanel& panel) {
  if (model.n() != panel.n_series()) throw Error(ErrorKind::shape, "bootstrap: model and panel dimensions differ");
  if (residuals.rows() != panel.t_obs() || residuals.cols() != panel.n_series()) {
    throw Error(ErrorKind::shape, "bootstrap: residuals must be T x N");
  }
  if (panel.k_presample() < model.k()) throw Error(ErrorKind::input, "bootstrap: panel presample shorter than K");
  if (panel.t_obs() < 1) throw Error(ErrorKind::input, "bootstrap: panel has no estimation rows");
}

// Reused across replicates of one run.
struct ReplicateContext {
  const VarRecursion recursion;
  const Eigen::Ref<const Matrix> residuals;
  Matrix initial;
  Index t;
  Index k;

  ReplicateContext(const VarModel& model, const Eigen::Ref<const Matrix>& resid, const TimeSeriesPanel& panel)
      : recursion(model),
        residuals(resid),
        initial(panel.presample_rows().bottomRows(model.k())),
        t(panel.t_obs()),
        k(model.k()) {}

  BootstrapReplicate run(std::uint64_t rep_seed, StatisticMode mode, Matrix& path, Matrix& innov) const {
    CounterRng rng(rep_seed);
    for (Index s = 0; s < t; ++s) innov.row(s) = residuals.row(s) * rng.normal();
    path.topRows(k) = initial;
    recursion.propagate(path, k, innov);
    BootstrapReplicate out;
    out.means = path.bottomRows(t).colwise().sum().transpose() / static_cast<double>(t);
    if (!out.means.allFinite()) throw Error(ErrorKind::bootstrap, "bootstrap replicate produced non-finite values");
    out.q = statistic_from_means(out.means, t, mode);
    return out;
  }
};

}  // namespace

BootstrapReplicate bootstrap_replicate(const VarModel& model, const Eigen::Ref<const Matrix>& residuals,
                                       const TimeSeriesPanel& panel, std::uint64_t rep_seed, StatisticMode mode) {
  check_inputs(model, residuals, panel);
  const ReplicateContext ctx(model, residuals, panel);
  Matrix path(ctx.k + ctx.t, model.n());
  Matrix innov(ctx.t, model.n());
  return ctx.run(rep_seed, mode, path, innov);
}

BootstrapRun run_bootstrap(const VarModel& model, const Eigen::Ref<const Matrix>& residuals,
                           const TimeSeriesPanel& panel, const BootstrapConfig& cfg) {
  if (cfg.b_reps < 1) throw Error(ErrorKind::config, "bootstrap: b_reps must be >= 1");
  check_inputs(model, residuals, panel);
  const double rho = companion_radius(model);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "bootstrap: estimated VAR is not stationary (companion spectral radius " << rho << ")";
    throw Error(ErrorKind::non_stationary, os.str());
  }

  const ReplicateContext ctx(model, residuals, panel);
  const Index n = model.n();
  BootstrapRun run;
  run.config = cfg;
  run.t_obs = ctx.t;
  run.q_stats.assign(cfg.b_reps, 0.0);
  run.boot_means.resize(static_cast<Index>(cfg.b_reps), n);
  run.model_fingerprint = fingerprint(model, residuals);

  const std::size_t chunk = std::max<std::size_t>(cfg.parallel_chunk, 1);
  const std::size_t tasks = (cfg.b_reps + chunk - 1) / chunk;
  parallel_for(tasks, cfg.threads, [&](std::size_t task) {
    Matrix path(ctx.k + ctx.t, n);
    Matrix innov(ctx.t, n);
    const std::size_t end = std::min(cfg.b_reps, (task + 1) * chunk);
    for (std::size_t b = task * chunk; b < end; ++b) {
      const std::uint64_t seed = replicate_seed(cfg.seed, b);
      try {
        BootstrapReplicate rep = ctx.run(seed, cfg.statistic_mode, path, innov);
        run.q_stats[b] = rep.q;
        run.boot_means.row(static_cast<Index>(b)) = rep.means.transpose();
      } catch (const Error& e) {
        std::ostringstream os;
        os << e.what() << " (replicate " << b << ", seed " << seed << ")";
        throw BootstrapError(os.str(), b, seed);
      }
    }
  });
  return run;
}

double bootstrap_quantile(const BootstrapRun& run, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::config, "bootstrap_quantile: level must lie in (0, 1)");
  std::vector<double> sorted = run.q_stats;
  std::sort(sorted.begin(), sorted.end());
  return sorted[order_statistic_index(sorted.size(), level)];
}

std::string fingerprint(const VarModel& model, const Eigen::Ref<const Matrix>& residuals) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto feed_matrix = [&](const Eigen::Ref<const Matrix>& m) {
    const std::int64_t dims[2] = {static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols())};
    feed(dims, sizeof dims);
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) {
        const double v = m(r, c);
        feed(&v, sizeof v);
      }
    }
  };
  for (const auto& a : model.a_mats) feed_matrix(a);
  feed_matrix(residuals);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hdvb
