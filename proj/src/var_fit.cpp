#include "hdvb/var_fit.hpp"

#include "hdvb/error.hpp"
#include "hdvb/linproc.hpp"
#include "hdvb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hdvb {

const char* to_string(SelectorKind kind) noexcept {
  switch (kind) {
    case SelectorKind::bic: return "bic";
    case SelectorKind::tscv: return "tscv";
    case SelectorKind::fixed: return "fixed";
  }
  return "bic";
}

SelectorKind parse_selector_kind(std::string_view text) {
  if (text == "bic") return SelectorKind::bic;
  if (text == "tscv") return SelectorKind::tscv;
  if (text == "fixed") return SelectorKind::fixed;
  throw Error(ErrorKind::config, "unknown lambda selector '" + std::string(text) + "'");
}

LagDesign build_lag_design(const TimeSeriesPanel& panel, Index k) {
  if (k < 1) throw Error(ErrorKind::config, "lag order must be >= 1");
  if (panel.k_presample() < k) {
    std::ostringstream os;
    os << "panel has " << panel.k_presample() << " presample rows but K = " << k << " lags require " << k;
    throw Error(ErrorKind::input, os.str());
  }
  const Index t = panel.t_obs();
  const Index n = panel.n_series();
  const Index base = panel.k_presample();
  const Matrix& data = panel.data();
  LagDesign out{Matrix(t, k * n), panel.estimation_rows()};
  for (Index l = 0; l < k; ++l) {
    out.design.middleCols(l * n, n) = data.middleRows(base - l - 1, t);
  }
  return out;
}

namespace {

LassoFit fit_equation(const Matrix& design, const Eigen::Ref<const Vector>& y, const FitOptions& opts) {
  const SelectorConfig& sel = opts.selector;
  switch (sel.kind) {
    case SelectorKind::fixed:
      return lasso_fit(LassoProblem(design, y, sel.fixed_lambda), opts.lasso);
    case SelectorKind::bic: {
      const LassoProblem problem(design, y);
      const LambdaGrid grid = lambda_grid(problem, sel.grid_points, sel.grid_ratio);
      if (grid.degenerate) return lasso_fit(problem, opts.lasso);
      BicSelection chosen = select_lambda_bic(problem, grid.values, opts.lasso);
      return std::move(chosen.fits[chosen.chosen]);
    }
    case SelectorKind::tscv: {
      const LassoProblem problem(design, y);
      const LambdaGrid grid = lambda_grid(problem, sel.grid_points, sel.grid_ratio);
      if (grid.degenerate) return lasso_fit(problem, opts.lasso);
      const Index min_train = sel.cv_min_train > 0 ? sel.cv_min_train : design.rows() / 2;
      const CvSelection cv = select_lambda_tscv(problem, grid.values, sel.cv_folds, min_train, opts.lasso);
      return lasso_fit(LassoProblem(design, y, cv.lambda), opts.lasso);
    }
  }
  throw Error(ErrorKind::config, "unknown selector");
}

}  // namespace

FitReport fit_sparse_var(const TimeSeriesPanel& panel, Index k, const FitOptions& opts) {
  if (panel.t_obs() < 1) throw Error(ErrorKind::input, "fit_sparse_var: panel has no estimation rows");
  const LagDesign lagged = build_lag_design(panel, k);
  const Index n = panel.n_series();

  Matrix stacked = Matrix::Zero(n, k * n);
  FitReport report;
  report.residuals = lagged.responses;
  report.per_equation.resize(static_cast<std::size_t>(n));

  parallel_for(static_cast<std::size_t>(n), opts.threads, [&](std::size_t j) {
    const Index col = static_cast<Index>(j);
    EquationFit& eq = report.per_equation[j];
    try {
      LassoFit fit = fit_equation(lagged.design, lagged.responses.col(col), opts);
      eq.lambda = fit.penalty;
      eq.df = fit.df();
      eq.kkt_violation = fit.kkt_violation;
      eq.converged = fit.converged;
      stacked.row(col) = fit.beta.transpose();
      report.residuals.col(col) = fit.residuals;
    } catch (const Error& e) {
      eq.failed = true;
      eq.failure = e.what();
    }
  });

  const bool all_failed = std::all_of(report.per_equation.begin(), report.per_equation.end(),
                                      [](const EquationFit& e) { return e.failed; });
  if (all_failed) {
    throw Error(ErrorKind::estimation, "every equation failed: " + report.per_equation.front().failure);
  }
  report.model = VarModel::from_stacked(stacked, k);
  std::ostringstream spec;
  spec << "rows t=1..T (T=" << panel.t_obs() << "); columns ";
  if (k == 1) {
    spec << "(x'_{t-1})";
  } else {
    spec << "(x'_{t-1}, ..., x'_{t-" << k << "})";
  }
  spec << ", N=" << n << " per lag block";
  report.lag_design_spec = spec.str();
  return report;
}

VarModel stationarity_correct(const VarModel& model, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::config, "stationarity_correct: eps must be positive");
  double rho = companion_radius(model);
  if (rho < 1.0 - kStationarityMargin) return model;

  VarModel out = model;
  for (int iter = 0; iter < 10; ++iter) {
    const double divisor = rho + eps;
    for (auto& a : out.a_mats) a /= divisor;
    out.correction_factor /= divisor;
    rho = companion_radius(out);
    if (rho < 1.0 - kStationarityMargin) {
      out.corrected = true;
      return out;
    }
  }
  std::ostringstream os;
  os << "stationarity correction failed: companion spectral radius still " << rho << " after 10 divisions";
  throw Error(ErrorKind::non_stationary, os.str());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<bool> holm_reject(const std::vector<double>& p_values, double alpha) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (p_values[order[i]] > alpha / static_cast<double>(m - i)) break;
    reject[order[i]] = true;
  }
  return reject;
}

AutocorrDiagnostic residual_autocorr_diagnostic(const Eigen::Ref<const Matrix>& residuals, Index max_lag,
                                                double alpha) {
  const Index t = residuals.rows();
  if (max_lag < 1) throw Error(ErrorKind::config, "autocorrelation diagnostic: max_lag must be >= 1");
  if (t <= max_lag + 5) throw Error(ErrorKind::config, "autocorrelation diagnostic: need T > max_lag + 5");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::config, "autocorrelation diagnostic: alpha in (0, 1)");

  AutocorrDiagnostic out;
  out.alpha = alpha;
  const double root_t = std::sqrt(static_cast<double>(t));
  for (Index j = 0; j < residuals.cols(); ++j) {
    const Vector dev = residuals.col(j).array() - residuals.col(j).mean();
    const double denom = dev.squaredNorm();
    if (denom <= 1e-20 * std::max(1.0, residuals.col(j).squaredNorm())) {
      out.degenerate_series.push_back(j);
      continue;
    }
    for (Index h = 1; h <= max_lag; ++h) {
      AutocorrCell cell;
      cell.series = j;
      cell.lag = h;
      cell.autocorr = dev.tail(t - h).dot(dev.head(t - h)) / denom;
      cell.z = root_t * cell.autocorr;
      cell.p_value = std::erfc(std::abs(cell.z) / std::sqrt(2.0));
      out.cells.push_back(cell);
    }
  }
  std::vector<double> p(out.cells.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = out.cells[i].p_value;
  const std::vector<bool> rej = holm_reject(p, alpha);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.cells[i].reject = rej[i];
    if (rej[i]) out.white = false;
  }
  out.family_size = static_cast<Index>(p.size());
  return out;
}

}  // namespace hdvb
