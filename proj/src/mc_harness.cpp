#include "hdvb/mc_harness.hpp"

#include "hdvb/bootstrap.hpp"
#include "hdvb/error.hpp"
#include "hdvb/inference.hpp"
#include "hdvb/linproc.hpp"
#include "hdvb/parallel.hpp"
#include "hdvb/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace hdvb {

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::subgaussian: return "subgaussian";
    case Scenario::heavy_tail: return "heavy_tail";
    case Scenario::corollary1_poly: return "corollary1_poly";
    case Scenario::corollary2_exp: return "corollary2_exp";
  }
  return "subgaussian";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "subgaussian") return Scenario::subgaussian;
  if (text == "heavy_tail") return Scenario::heavy_tail;
  if (text == "corollary1_poly") return Scenario::corollary1_poly;
  if (text == "corollary2_exp") return Scenario::corollary2_exp;
  throw Error(ErrorKind::config, "unknown scenario '" + std::string(text) + "'");
}

ExperimentSpec apply_scenario(ExperimentSpec spec) {
  ErrorSpec& e = spec.dgp.errors;
  switch (spec.scenario) {
    case Scenario::subgaussian:
      if (e.family == ErrorFamily::scaled_student_t) e.family = ErrorFamily::gaussian;
      break;
    case Scenario::heavy_tail:
      e.family = ErrorFamily::scaled_student_t;
      break;
    case Scenario::corollary1_poly:
      // Polynomial moments only: t with 40 dof has moments of order < 40,
      // enough for the moment condition paired with N ~ T^0.5.
      e.family = ErrorFamily::scaled_student_t;
      e.dof = 40;
      for (GridCell& c : spec.grid) c.n = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(c.t))));
      break;
    case Scenario::corollary2_exp:
      e.family = ErrorFamily::gaussian;
      for (GridCell& c : spec.grid) {
        c.n = static_cast<Index>(std::ceil(std::exp(std::pow(static_cast<double>(c.t), 0.25))));
      }
      break;
  }
  return spec;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t cell) { return stream_key(master, cell); }

std::uint64_t replication_seed(std::uint64_t cell, std::size_t rep) { return stream_key(stream_key(cell, 1), rep); }

ExperimentSpec single_cell_spec(const ExperimentSpec& spec, std::size_t index) {
  if (index >= spec.grid.size()) throw Error(ErrorKind::config, "single_cell_spec: cell index out of range");
  ExperimentSpec out = spec;
  out.grid = {spec.grid[index]};
  out.cell_offset = spec.cell_offset + index;
  return out;
}

std::string software_fingerprint() {
  std::string s = "hdvb 0.1.0; C++ ";
  s += std::to_string(__cplusplus);
#if defined(__clang__)
  s += "; clang " __clang_version__;
#elif defined(__GNUC__)
  s += "; gcc " __VERSION__;
#endif
  s += "; Eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
       std::to_string(EIGEN_MINOR_VERSION);
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

void validate(const ExperimentSpec& spec) {
  if (spec.grid.empty()) throw Error(ErrorKind::config, "experiment grid is empty");
  if (spec.mc_reps < 1) throw Error(ErrorKind::config, "mc_reps must be >= 1");
  if (spec.b_reps < 1) throw Error(ErrorKind::config, "b_reps must be >= 1");
  if (spec.dgp.k < 1) throw Error(ErrorKind::config, "dgp lag order must be >= 1");
  if (spec.zero_model && spec.inject_truth) throw Error(ErrorKind::config, "zero_model and inject_truth exclude each other");
  for (double a : spec.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::config, "alpha levels must lie in (0, 1)");
  }
  for (const GridCell& c : spec.grid) {
    if (c.n < 1 || c.t < 2) throw Error(ErrorKind::config, "grid cells need N >= 1 and T >= 2");
  }
  if (spec.mean_shift && (spec.mean_shift->series < 0)) throw Error(ErrorKind::config, "mean shift series < 0");
}

Index fit_lags(const ExperimentSpec& spec) { return spec.fit_lags > 0 ? spec.fit_lags : spec.dgp.k; }

Matrix sigma_eps(const ErrorSpec& errors, Index n) {
  if (errors.sigma_eps.size() == 0) return Matrix::Identity(n, n);
  require_shape(errors.sigma_eps, n, n, "sigma_eps");
  return errors.sigma_eps;
}

VarModel true_model(const ExperimentSpec& spec, Index n, std::uint64_t cseed) {
  if (spec.dgp.white_noise) return VarModel::zeros(n, spec.dgp.k);
  return generate_var_model(n, spec.dgp.k, spec.dgp.pattern, spec.dgp.target_rho, stream_key(cseed, 0));
}

// What one replication produced after estimation and correction.
struct Estimate {
  VarModel model;
  Matrix residuals;
  double rho_hat = 0.0;
  bool corrected = false;
};

Estimate estimate(const ExperimentSpec& spec, const VarModel& truth, const SimulatedPanel& sim) {
  Estimate out;
  const Index k = fit_lags(spec);
  if (spec.zero_model) {
    out.model = VarModel::zeros(sim.panel.n_series(), k);
    out.residuals = sim.panel.estimation_rows();
    return out;
  }
  if (spec.inject_truth) {
    out.model = truth;
    out.residuals = sim.errors;
    out.rho_hat = companion_radius(truth);
    return out;
  }
  FitReport fit = fit_sparse_var(sim.panel, k, spec.fit);
  out.rho_hat = companion_radius(fit.model);
  out.model = stationarity_correct(fit.model, spec.eps);
  out.corrected = out.model.corrected;
  out.residuals = std::move(fit.residuals);
  return out;
}

SimulatedPanel simulate(const ExperimentSpec& spec, const VarModel& truth, Index t, std::uint64_t rseed) {
  SimulatedPanel sim = simulate_panel(truth, t, spec.dgp.errors, std::nullopt, stream_key(rseed, 1));
  if (spec.mean_shift) sim.panel.shift_series(spec.mean_shift->series, spec.mean_shift->shift);
  return sim;
}

double binomial_se(double p, std::size_t r) { return std::sqrt(p * (1.0 - p) / static_cast<double>(r)); }

// Per-replication slot, filled concurrently and reduced in index order.
struct RepSlot {
  bool ok = false;
  std::string failure;
  double value = 0.0;
  double rho_hat = 0.0;
  bool corrected = false;
  std::vector<char> global_reject;
  std::vector<char> false_reject;
  std::vector<char> shift_reject;
};

template <class Body>
std::vector<RepSlot> run_replications(const ExperimentSpec& spec, std::uint64_t cseed, Body&& body) {
  std::vector<RepSlot> slots(spec.mc_reps);
  parallel_for(spec.mc_reps, spec.threads, [&](std::size_t r) {
    RepSlot& slot = slots[r];
    try {
      body(replication_seed(cseed, r), slot);
      slot.ok = true;
    } catch (const Error& e) {
      slot.ok = false;
      slot.failure = std::string(to_string(e.kind())) + ": " + e.what();
    }
  });
  return slots;
}

// Counts, failure bookkeeping and trace rows shared by all experiments.
void summarize(const ExperimentSpec& spec, std::size_t cell_index, std::uint64_t cseed,
               const std::vector<RepSlot>& slots, CellReport& cell, ExperimentReport& report) {
  double rho_sum = 0.0;
  std::size_t corrected = 0;
  for (std::size_t r = 0; r < slots.size(); ++r) {
    const RepSlot& s = slots[r];
    if (s.ok) {
      ++cell.reps_ok;
      rho_sum += s.rho_hat;
      corrected += s.corrected ? 1 : 0;
    } else {
      ++cell.reps_failed;
      if (cell.failures.size() < 5) cell.failures.push_back("rep " + std::to_string(r) + ": " + s.failure);
    }
    if (spec.trace) report.trace.push_back({cell_index, r, replication_seed(cseed, r), s.value, s.ok});
  }
  cell.incomplete = static_cast<double>(cell.reps_failed) > 0.01 * static_cast<double>(slots.size());
  if (cell.reps_ok > 0) {
    cell.mean_rho_hat = rho_sum / static_cast<double>(cell.reps_ok);
    cell.correction_rate = static_cast<double>(corrected) / static_cast<double>(cell.reps_ok);
  }
}

template <class CellFn>
ExperimentReport run_cells(const ExperimentSpec& raw, const char* name, CellFn&& cell_fn) {
  ExperimentSpec spec = apply_scenario(raw);
  validate(spec);
  ExperimentReport report;
  report.experiment = name;
  report.software = software_fingerprint();
  for (std::size_t c = 0; c < spec.grid.size(); ++c) {
    const auto start = Clock::now();
    CellReport cell;
    cell.cell = spec.grid[c];
    cell.cell_seed = cell_seed(spec.master_seed, spec.cell_offset + c);
    cell_fn(spec, c, cell, report);
    cell.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report.cells.push_back(std::move(cell));
  }
  report.spec = std::move(spec);
  return report;
}

}  // namespace

ExperimentReport run_size_experiment(const ExperimentSpec& raw) {
  return run_cells(raw, "size", [](const ExperimentSpec& spec, std::size_t c, CellReport& cell,
                                   ExperimentReport& report) {
    const Index n = cell.cell.n;
    const std::optional<Index> shifted =
        spec.mean_shift ? std::optional<Index>(spec.mean_shift->series) : std::nullopt;
    if (shifted && *shifted >= n) throw Error(ErrorKind::config, "mean shift series outside the panel");
    const VarModel truth = true_model(spec, n, cell.cell_seed);
    const std::size_t n_alpha = spec.alphas.size();

    auto slots = run_replications(spec, cell.cell_seed, [&](std::uint64_t rseed, RepSlot& slot) {
      const SimulatedPanel sim = simulate(spec, truth, cell.cell.t, rseed);
      const Estimate est = estimate(spec, truth, sim);
      slot.rho_hat = est.rho_hat;
      slot.corrected = est.corrected;
      BootstrapConfig bc;
      bc.b_reps = spec.b_reps;
      bc.statistic_mode = spec.mode;
      bc.seed = stream_key(rseed, 2);
      const BootstrapRun run = run_bootstrap(est.model, est.residuals, sim.panel, bc);
      slot.global_reject.assign(n_alpha, 0);
      slot.false_reject.assign(n_alpha, 0);
      slot.shift_reject.assign(n_alpha, 0);
      for (std::size_t a = 0; a < n_alpha; ++a) {
        const GlobalTestResult g = global_test(sim.panel, run, spec.alphas[a]);
        slot.value = g.q_obs;
        slot.global_reject[a] = g.reject ? 1 : 0;
        const StepdownResult sd = stepdown(sim.panel, run, spec.alphas[a]);
        for (Index j : sd.rejected) {
          if (shifted && j == *shifted) {
            slot.shift_reject[a] = 1;
          } else {
            slot.false_reject[a] = 1;
          }
        }
      }
    });
    summarize(spec, c, cell.cell_seed, slots, cell, report);

    for (std::size_t a = 0; a < n_alpha; ++a) {
      AlphaRow row;
      row.alpha = spec.alphas[a];
      std::size_t rej = 0, fw = 0, pw = 0;
      for (const RepSlot& s : slots) {
        if (!s.ok) continue;
        rej += s.global_reject[a];
        fw += s.false_reject[a];
        pw += s.shift_reject[a];
      }
      if (cell.reps_ok > 0) {
        const double r = static_cast<double>(cell.reps_ok);
        row.rejection_rate = static_cast<double>(rej) / r;
        row.rejection_se = binomial_se(row.rejection_rate, cell.reps_ok);
        row.fwer = static_cast<double>(fw) / r;
        row.fwer_se = binomial_se(row.fwer, cell.reps_ok);
        if (shifted) {
          row.power = static_cast<double>(pw) / r;
          row.power_se = binomial_se(*row.power, cell.reps_ok);
        }
      }
      cell.alpha_rows.push_back(row);
    }
  });
}

ExperimentReport run_ks_convergence(const ExperimentSpec& raw) {
  return run_cells(raw, "ks", [](const ExperimentSpec& spec, std::size_t c, CellReport& cell,
                                 ExperimentReport& report) {
    const Index n = cell.cell.n;
    const VarModel truth = true_model(spec, n, cell.cell_seed);
    const Matrix sigma = long_run_covariance(long_run_matrix(truth), sigma_eps(spec.dgp.errors, n));

    auto slots = run_replications(spec, cell.cell_seed, [&](std::uint64_t rseed, RepSlot& slot) {
      const SimulatedPanel sim = simulate(spec, truth, cell.cell.t, rseed);
      slot.value = max_mean_statistic(sim.panel, StatisticMode::abs_max);
    });
    summarize(spec, c, cell.cell_seed, slots, cell, report);
    if (cell.reps_ok == 0) return;

    std::vector<double> stats;
    for (const RepSlot& s : slots) {
      if (s.ok) stats.push_back(s.value);
    }
    const EmpiricalDistribution stat_dist(std::move(stats));
    const EmpiricalDistribution oracle =
        gaussian_max_sample(sigma, spec.oracle_draws, stream_key(cell.cell_seed, 2), spec.threads);
    cell.ks_stat_oracle = kolmogorov_distance(stat_dist, oracle);

    // One representative fit: the panel of replication 0.
    try {
      const std::uint64_t rseed = replication_seed(cell.cell_seed, 0);
      const SimulatedPanel sim = simulate(spec, truth, cell.cell.t, rseed);
      const Estimate est = estimate(spec, truth, sim);
      BootstrapConfig bc;
      bc.b_reps = spec.b_reps;
      bc.seed = stream_key(rseed, 2);
      bc.threads = spec.threads;
      const BootstrapRun run = run_bootstrap(est.model, est.residuals, sim.panel, bc);
      const EmpiricalDistribution boot(run.q_stats);
      cell.ks_boot_oracle = kolmogorov_distance(boot, oracle);
      cell.ks_boot_stat = kolmogorov_distance(boot, stat_dist);

      const Matrix sig_eps_hat =
          est.residuals.transpose() * est.residuals / static_cast<double>(est.residuals.rows());
      const Matrix sigma_hat = spec.inject_truth
                                   ? sigma
                                   : long_run_covariance(long_run_matrix(est.model), sig_eps_hat);
      const EmpiricalDistribution oracle_hat =
          gaussian_max_sample(sigma_hat, spec.oracle_draws, stream_key(rseed, 3), spec.threads);
      cell.ks_oracle_hat_oracle = kolmogorov_distance(oracle_hat, oracle);
    } catch (const Error& e) {
      cell.failures.push_back(std::string("representative fit: ") + to_string(e.kind()) + ": " + e.what());
    }
  });
}

ExperimentReport run_covariance_closeness(const ExperimentSpec& raw) {
  return run_cells(raw, "covariance", [](const ExperimentSpec& spec, std::size_t c, CellReport& cell,
                                         ExperimentReport& report) {
    const Index n = cell.cell.n;
    const VarModel truth = true_model(spec, n, cell.cell_seed);
    const Matrix sig_eps = sigma_eps(spec.dgp.errors, n);
    const Matrix sigma = long_run_covariance(long_run_matrix(truth), sig_eps);

    auto slots = run_replications(spec, cell.cell_seed, [&](std::uint64_t rseed, RepSlot& slot) {
      const SimulatedPanel sim = simulate(spec, truth, cell.cell.t, rseed);
      const Estimate est = estimate(spec, truth, sim);
      slot.rho_hat = est.rho_hat;
      slot.corrected = est.corrected;
      const Matrix sig_eps_hat =
          spec.inject_truth ? sig_eps
                            : Matrix(est.residuals.transpose() * est.residuals /
                                     static_cast<double>(est.residuals.rows()));
      const Matrix sigma_hat = long_run_covariance(long_run_matrix(est.model), sig_eps_hat);
      slot.value = max_norm(sigma_hat - sigma);
    });
    summarize(spec, c, cell.cell_seed, slots, cell, report);
    if (cell.reps_ok == 0) return;

    std::vector<double> errs;
    for (const RepSlot& s : slots) {
      if (s.ok) errs.push_back(s.value);
    }
    cell.cov_error_mean = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
    cell.cov_error_p90 = EmpiricalDistribution(std::move(errs)).quantile(0.9);
  });
}

}  // namespace hdvb
