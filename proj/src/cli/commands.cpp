#include "hdvb/cli.hpp"

#include "hdvb/bootstrap.hpp"
#include "hdvb/inference.hpp"
#include "hdvb/linproc.hpp"
#include "hdvb/rng.hpp"
#include "report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace hdvb::cli {

using nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape:
    case ErrorKind::config:
    case ErrorKind::input:
      return 2;
    case ErrorKind::non_convergence:
    case ErrorKind::not_psd:
    case ErrorKind::singular:
    case ErrorKind::non_stationary:
    case ErrorKind::estimation:
      return 3;
    case ErrorKind::bootstrap:
      return 4;
  }
  return kExitInternal;
}

namespace {

// Writes to --output when given, otherwise to `out`.
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn&& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::input, "cannot open output file '" + path + "'");
  write(file);
  if (!file) throw Error(ErrorKind::input, "failed writing '" + path + "'");
}

void emit_json(const RunConfig& cfg, std::ostream& out, const json& doc) {
  emit(cfg.output, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

json config_json(const RunConfig& cfg) {
  return {{"command", cfg.command},
          {"input", cfg.input},
          {"lags", cfg.lags ? json(*cfg.lags) : json(nullptr)},
          {"lags_max", cfg.lags_max},
          {"selector", selector_json(cfg.selector)},
          {"eps", cfg.eps},
          {"b_reps", cfg.b_reps},
          {"alphas", cfg.alphas},
          {"mode", to_string(cfg.mode)},
          {"seed", cfg.seed},
          {"threads", cfg.threads}};
}

std::string label_of(const TimeSeriesPanel& panel, Index j) {
  return panel.labels().empty() ? "x" + std::to_string(j + 1) : panel.labels()[static_cast<std::size_t>(j)];
}

json data_json(const TimeSeriesPanel& panel) {
  json labels = json::array();
  for (Index j = 0; j < panel.n_series(); ++j) labels.push_back(label_of(panel, j));
  return {{"t_obs", panel.t_obs()},
          {"n_series", panel.n_series()},
          {"k_presample", panel.k_presample()},
          {"labels", labels},
          {"header", !panel.labels().empty()}};
}

struct Pipeline {
  FitReport fit;
  VarModel corrected;
  double rho_before = 0.0;
  double rho_after = 0.0;
};

FitOptions fit_options(const RunConfig& cfg) {
  FitOptions opts;
  opts.selector = cfg.selector;
  opts.threads = cfg.threads;
  return opts;
}

Pipeline fit_and_correct(const RunConfig& cfg, const TimeSeriesPanel& panel) {
  Pipeline p;
  p.fit = fit_sparse_var(panel, cfg.fit_lags(), fit_options(cfg));
  p.rho_before = companion_radius(p.fit.model);
  p.corrected = stationarity_correct(p.fit.model, cfg.eps);
  p.rho_after = p.corrected.corrected ? companion_radius(p.corrected) : p.rho_before;
  return p;
}

json model_json(const Pipeline& p, const TimeSeriesPanel& panel) {
  json eqs = json::array();
  for (std::size_t j = 0; j < p.fit.per_equation.size(); ++j) {
    const EquationFit& e = p.fit.per_equation[j];
    eqs.push_back({{"series", j},
                   {"label", label_of(panel, static_cast<Index>(j))},
                   {"lambda", e.lambda},
                   {"df", e.df},
                   {"kkt_violation", e.kkt_violation},
                   {"converged", e.converged},
                   {"failed", e.failed},
                   {"failure", e.failure}});
  }
  Index nonzeros = 0;
  for (const Matrix& a : p.corrected.a_mats) nonzeros += (a.array() != 0.0).count();
  return {{"lags", p.corrected.k()},
          {"rho_before", p.rho_before},
          {"rho_after", p.rho_after},
          {"corrected", p.corrected.corrected},
          {"correction_factor", p.corrected.correction_factor},
          {"nonzeros", nonzeros},
          {"lag_design", p.fit.lag_design_spec},
          {"fingerprint", fingerprint(p.corrected, p.fit.residuals)},
          {"equations", eqs}};
}

json optional_ints(const std::vector<std::optional<int>>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x ? json(*x) : json(nullptr));
  return out;
}

std::vector<GridCell> parse_grid(const std::string& text) {
  std::vector<GridCell> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument("missing x");
      const long n = std::stol(item.substr(0, x));
      const long t = std::stol(item.substr(x + 1));
      grid.push_back({static_cast<Index>(n), static_cast<Index>(t)});
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "grid entries look like NxT, got '" + item + "'");
    }
  }
  if (grid.empty()) throw Error(ErrorKind::config, "empty grid");
  return grid;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& message, int code,
                json extra = json::object()) {
  json doc = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  for (auto& [k, v] : extra.items()) doc["error"][k] = v;
  err << doc.dump() << '\n';
}

}  // namespace

int cmd_test(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw Error(ErrorKind::config, "test: --input is required");
  const TimeSeriesPanel panel = ingest_csv(cfg.input, cfg.fit_lags());
  const Pipeline p = fit_and_correct(cfg, panel);

  BootstrapConfig bc;
  bc.b_reps = cfg.b_reps;
  bc.statistic_mode = cfg.mode;
  bc.seed = cfg.seed;
  bc.threads = cfg.threads;
  const BootstrapRun run = run_bootstrap(p.corrected, p.fit.residuals, panel, bc);

  json tests = json::array();
  double q_obs = 0.0;
  for (double alpha : cfg.alphas) {
    const GlobalTestResult g = global_test(panel, run, alpha);
    const StepdownResult sd = stepdown(panel, run, alpha);
    q_obs = g.q_obs;
    json labels = json::array();
    for (Index j : sd.rejected) labels.push_back(label_of(panel, j));
    tests.push_back({{"alpha", alpha},
                     {"q_crit", g.q_crit},
                     {"p_value", g.p_value},
                     {"reject", g.reject},
                     {"stepdown",
                      {{"rejected", sd.rejected},
                       {"rejected_labels", labels},
                       {"retained", sd.retained},
                       {"rejected_at", optional_ints(sd.rejected_at)},
                       {"critical_values", sd.critical_values},
                       {"iterations", sd.iterations},
                       {"observed", sd.observed}}}});
  }
  const json doc = {{"command", "test"},
                    {"software", software_fingerprint()},
                    {"config", config_json(cfg)},
                    {"data", data_json(panel)},
                    {"model", model_json(p, panel)},
                    {"bootstrap", {{"b_reps", cfg.b_reps}, {"seed", cfg.seed}, {"mode", to_string(cfg.mode)}}},
                    {"q_obs", q_obs},
                    {"tests", tests}};
  emit_json(cfg, out, doc);
  return 0;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw Error(ErrorKind::config, "fit: --input is required");
  const TimeSeriesPanel panel = ingest_csv(cfg.input, cfg.fit_lags());
  const Pipeline p = fit_and_correct(cfg, panel);
  const double alpha = cfg.alphas.empty() ? 0.05 : cfg.alphas.front();
  const AutocorrDiagnostic diag = residual_autocorr_diagnostic(p.fit.residuals, cfg.diag_lags, alpha);
  json cells = json::array();
  for (const AutocorrCell& c : diag.cells) {
    cells.push_back({{"series", c.series},
                     {"lag", c.lag},
                     {"autocorr", c.autocorr},
                     {"z", c.z},
                     {"p_value", c.p_value},
                     {"reject", c.reject}});
  }
  json coefs = json::array();
  for (const Matrix& a : p.corrected.a_mats) {
    json rows = json::array();
    for (Index i = 0; i < a.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(a.cols()));
      for (Index j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
      rows.push_back(row);
    }
    coefs.push_back(rows);
  }
  const json doc = {{"command", "fit"},
                    {"software", software_fingerprint()},
                    {"config", config_json(cfg)},
                    {"data", data_json(panel)},
                    {"model", model_json(p, panel)},
                    {"coefficients", coefs},
                    {"diagnostic",
                     {{"max_lag", cfg.diag_lags},
                      {"alpha", diag.alpha},
                      {"family_size", diag.family_size},
                      {"white", diag.white},
                      {"degenerate_series", diag.degenerate_series},
                      {"cells", cells}}}};
  emit_json(cfg, out, doc);
  return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.n < 1 || cfg.t < 1) throw Error(ErrorKind::config, "simulate: need --n >= 1 and --t >= 1");
  const VarModel model = cfg.white_noise ? VarModel::zeros(cfg.n, cfg.dgp_lags)
                                         : generate_var_model(cfg.n, cfg.dgp_lags, cfg.pattern, cfg.rho, cfg.seed);
  const SimulatedPanel sim = simulate_panel(model, cfg.t, cfg.errors, cfg.burn_in, stream_key(cfg.seed, 1));
  std::vector<std::string> labels;
  for (Index j = 0; j < cfg.n; ++j) labels.push_back("x" + std::to_string(j + 1));
  emit(cfg.output, out, [&](std::ostream& os) { write_csv(os, sim.panel.data(), labels); });
  return 0;
}

int cmd_mc(const RunConfig& cfg, std::ostream& out) {
  ExperimentSpec spec;
  spec.dgp.pattern = cfg.pattern;
  spec.dgp.k = cfg.dgp_lags;
  spec.dgp.target_rho = cfg.rho;
  spec.dgp.errors = cfg.errors;
  spec.dgp.white_noise = cfg.white_noise;
  spec.grid = cfg.grid.empty() ? std::vector<GridCell>{{cfg.n, cfg.t}} : cfg.grid;
  spec.b_reps = cfg.b_reps;
  spec.mc_reps = cfg.mc_reps;
  spec.alphas = cfg.alphas;
  spec.scenario = cfg.scenario;
  spec.master_seed = cfg.seed;
  spec.fit_lags = cfg.lags.value_or(0);
  spec.fit = fit_options(cfg);
  spec.fit.threads = 1;
  spec.eps = cfg.eps;
  spec.mode = cfg.mode;
  if (cfg.shift_series) spec.mean_shift = MeanShift{*cfg.shift_series, cfg.shift};
  spec.zero_model = cfg.zero_model;
  spec.inject_truth = cfg.inject_truth;
  spec.oracle_draws = cfg.oracle_draws;
  spec.threads = cfg.threads;
  spec.trace = !cfg.trace_output.empty();

  ExperimentReport report;
  if (cfg.experiment == "size") {
    report = run_size_experiment(spec);
  } else if (cfg.experiment == "ks") {
    report = run_ks_convergence(spec);
  } else if (cfg.experiment == "cov") {
    report = run_covariance_closeness(spec);
  } else {
    throw Error(ErrorKind::config, "unknown experiment '" + cfg.experiment + "' (size, ks, cov)");
  }
  emit_json(cfg, out, report_json(report));
  if (!cfg.csv_output.empty()) {
    emit(cfg.csv_output, out, [&](std::ostream& os) { write_report_csv(os, report); });
  }
  if (!cfg.trace_output.empty()) {
    emit(cfg.trace_output, out, [&](std::ostream& os) { write_trace_csv(os, report); });
  }
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Simultaneous inference on high-dimensional time-series means (sparse VAR + multiplier bootstrap)",
               "hdvb"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value file; command-line flags take precedence");

  std::string selector = "bic", mode = "abs", pattern = "diagonal", family = "gaussian", scenario = "subgaussian";
  std::string grid;
  std::optional<Index> lags, burn_in, shift_series;

  app.add_option("--input", cfg.input, "CSV input (rows = time, oldest first)")->envname("HDVB_INPUT");
  app.add_option("--output", cfg.output, "report path (default: stdout)")->envname("HDVB_OUTPUT");
  app.add_option("--lags", lags, "lag order K (test/fit: overrides --lags-max)")->envname("HDVB_LAGS");
  app.add_option("--lags-max", cfg.lags_max, "K_max, used when --lags is absent")
      ->envname("HDVB_LAGS_MAX")
      ->capture_default_str();
  app.add_option("--selector", selector, "penalty selector: bic, tscv or fixed")
      ->envname("HDVB_SELECTOR")
      ->capture_default_str();
  app.add_option("--lambda", cfg.selector.fixed_lambda, "penalty for --selector fixed")->envname("HDVB_LAMBDA");
  app.add_option("--grid-points", cfg.selector.grid_points, "penalty grid size")->envname("HDVB_GRID_POINTS");
  app.add_option("--grid-ratio", cfg.selector.grid_ratio, "smallest grid penalty / lambda_max")
      ->envname("HDVB_GRID_RATIO");
  app.add_option("--cv-folds", cfg.selector.cv_folds, "folds for tscv")->envname("HDVB_CV_FOLDS");
  app.add_option("--eps", cfg.eps, "stationarity-correction offset")->envname("HDVB_EPS")->capture_default_str();
  app.add_option("--b-reps", cfg.b_reps, "bootstrap replicates")->envname("HDVB_B_REPS")->capture_default_str();
  app.add_option("--alpha", cfg.alphas, "significance level (repeatable)")
      ->envname("HDVB_ALPHA")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--mode", mode, "statistic: abs, max or min")->envname("HDVB_MODE")->capture_default_str();
  app.add_option("--seed", cfg.seed, "master seed")->envname("HDVB_SEED")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads (0 = hardware)")->envname("HDVB_THREADS");

  CLI::App* test = app.add_subcommand("test", "fit, correct, bootstrap, global test and stepdown");
  CLI::App* fit = app.add_subcommand("fit", "fit and correct only, with residual autocorrelation diagnostics");
  fit->add_option("--diag-lags", cfg.diag_lags, "autocorrelation lags per series")->capture_default_str();
  CLI::App* simulate = app.add_subcommand("simulate", "simulate a sparse VAR panel to CSV");
  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo experiment");
  for (CLI::App* sub : {simulate, mc}) {
    sub->add_option("--n", cfg.n, "series")->capture_default_str();
    sub->add_option("--t", cfg.t, "observations after the presample")->capture_default_str();
    sub->add_option("--dgp-lags", cfg.dgp_lags, "lag order of the simulated VAR")->capture_default_str();
    sub->add_option("--rho", cfg.rho, "companion spectral radius of the simulated VAR")->capture_default_str();
    sub->add_option("--pattern", pattern, "diagonal, banded or random")->capture_default_str();
    sub->add_option("--nonzeros", cfg.pattern.per_row_nonzeros, "nonzeros per row (banded/random)");
    sub->add_option("--jitter", cfg.pattern.jitter, "relative spread of coefficient sizes, 0 = equal")->capture_default_str();
    sub->add_option("--errors", family, "gaussian, student_t or rademacher")->capture_default_str();
    sub->add_option("--dof", cfg.errors.dof, "Student-t degrees of freedom")->capture_default_str();
    sub->add_flag("--white-noise", cfg.white_noise, "A = 0");
  }
  simulate->add_option("--burn-in", burn_in, "burn-in steps (default 200 + 10 K)");
  mc->add_option("--experiment", cfg.experiment, "size, ks or cov")->capture_default_str();
  mc->add_option("--grid", grid, "cells as NxT, comma separated (default --n x --t)");
  mc->add_option("--mc-reps", cfg.mc_reps, "replications per cell")->capture_default_str();
  mc->add_option("--scenario", scenario, "subgaussian, heavy_tail, corollary1_poly or corollary2_exp")
      ->capture_default_str();
  mc->add_option("--csv", cfg.csv_output, "flat CSV table path");
  mc->add_option("--trace", cfg.trace_output, "per-replication trace CSV path");
  mc->add_option("--shift-series", shift_series, "series (0-based) whose mean is shifted");
  mc->add_option("--shift", cfg.shift, "size of the mean shift")->capture_default_str();
  mc->add_option("--oracle-draws", cfg.oracle_draws, "Gaussian-max oracle draws (ks)")->capture_default_str();
  mc->add_flag("--zero-model", cfg.zero_model, "skip estimation, A-hat = 0");
  mc->add_flag("--inject-truth", cfg.inject_truth, "skip estimation, use the true model");
  for (CLI::App* sub : {test, fit, simulate, mc}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_json(err, "config", e.what(), 2);
    return 2;
  }

  try {
    cfg.lags = lags;
    cfg.burn_in = burn_in;
    cfg.shift_series = shift_series;
    cfg.selector.kind = parse_selector_kind(selector);
    cfg.mode = parse_statistic_mode(mode);
    cfg.pattern.kind = parse_pattern_kind(pattern);
    cfg.errors.family = parse_error_family(family);
    cfg.scenario = parse_scenario(scenario);
    if (!grid.empty()) cfg.grid = parse_grid(grid);
    if (cfg.lags && *cfg.lags < 1) throw Error(ErrorKind::config, "--lags must be >= 1");
    if (cfg.lags_max < 1) throw Error(ErrorKind::config, "--lags-max must be >= 1");
    if (cfg.alphas.empty()) throw Error(ErrorKind::config, "at least one --alpha is required");
    for (double a : cfg.alphas) {
      if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::config, "--alpha must lie in (0, 1)");
    }

    if (test->parsed()) {
      cfg.command = "test";
      return cmd_test(cfg, out);
    }
    if (fit->parsed()) {
      cfg.command = "fit";
      return cmd_fit(cfg, out);
    }
    if (simulate->parsed()) {
      cfg.command = "simulate";
      return cmd_simulate(cfg, out);
    }
    cfg.command = "mc";
    return cmd_mc(cfg, out);
  } catch (const BootstrapError& e) {
    error_json(err, to_string(e.kind()), e.what(), exit_code_for(e.kind()),
               {{"replicate", e.replicate()}, {"seed", e.seed()}});
    return exit_code_for(e.kind());
  } catch (const Error& e) {
    error_json(err, to_string(e.kind()), e.what(), exit_code_for(e.kind()));
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    error_json(err, "internal", e.what(), kExitInternal);
    return kExitInternal;
  }
}

}  // namespace hdvb::cli
