#include "hdvb/lasso.hpp"

#include "hdvb/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace hdvb {

LassoProblem::LassoProblem(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, double lambda)
    : design(x), response(y), penalty(lambda) {
  if (design.rows() != response.size()) {
    throw Error(ErrorKind::shape, "lasso: design and response row counts differ");
  }
  if (!(penalty >= 0.0)) throw Error(ErrorKind::config, "lasso: penalty must be >= 0");
  require_finite(design, "lasso design");
  require_finite(response, "lasso response");
}

double lambda_max(const LassoProblem& p) {
  if (p.cols() == 0 || p.rows() == 0) return 0.0;
  return (p.design.transpose() * p.response).cwiseAbs().maxCoeff() / static_cast<double>(p.rows());
}

double lasso_objective(const LassoProblem& p, const Eigen::Ref<const Vector>& beta) {
  const Vector r = p.response - p.design * beta;
  return r.squaredNorm() / static_cast<double>(p.rows()) + 2.0 * p.penalty * beta.lpNorm<1>();
}

namespace {

double kkt_from_residual(const LassoProblem& p, const Eigen::Ref<const Vector>& beta, const Vector& resid) {
  const Vector grad = -2.0 / static_cast<double>(p.rows()) * (p.design.transpose() * resid);
  const double two_lambda = 2.0 * p.penalty;
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    double v;
    if (beta[j] == 0.0) {
      v = std::max(0.0, std::abs(grad[j]) - two_lambda);
    } else {
      v = std::abs(grad[j] + (beta[j] > 0.0 ? two_lambda : -two_lambda));
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double soft_threshold(double z, double level) {
  if (z > level) return z - level;
  if (z < -level) return z + level;
  return 0.0;
}

}  // namespace

double kkt_violation(const LassoProblem& p, const Eigen::Ref<const Vector>& beta) {
  const Vector resid = p.response - p.design * beta;
  return kkt_from_residual(p, beta, resid);
}

LassoFit lasso_fit(const LassoProblem& p, const LassoOptions& opts, const std::optional<Vector>& warm_start) {
  if (!(opts.tol > 0.0)) throw Error(ErrorKind::config, "lasso: tol must be positive");
  const Index t = p.rows();
  const Index np = p.cols();
  if (t < 1) throw Error(ErrorKind::input, "lasso: no observations");

  LassoFit fit;
  fit.penalty = p.penalty;
  fit.beta = Vector::Zero(np);
  if (warm_start) {
    if (warm_start->size() != np) throw Error(ErrorKind::shape, "lasso: warm start has wrong length");
    fit.beta = *warm_start;
  }
  const Vector col_sq = p.design.colwise().squaredNorm().transpose();
  for (Index j = 0; j < np; ++j) {
    if (col_sq[j] == 0.0) fit.beta[j] = 0.0;
  }
  Vector resid = p.response - p.design * fit.beta;
  const double level = static_cast<double>(t) * p.penalty;
  const double top = lambda_max(p);
  fit.kkt_tol = opts.kkt_tol_rel * std::max(top, 1e-8);
  if (p.penalty >= top) {
    // Zero is optimal; returning it directly avoids a rounding-level nonzero
    // when the penalty sits exactly at lambda_max.
    fit.beta.setZero();
    fit.converged = true;
  }

  auto objective = [&] {
    return resid.squaredNorm() / static_cast<double>(t) + 2.0 * p.penalty * fit.beta.lpNorm<1>();
  };
  auto update = [&](Index j) {
    if (col_sq[j] == 0.0) return 0.0;
    const double old = fit.beta[j];
    const double z = p.design.col(j).dot(resid) + col_sq[j] * old;
    const double next = soft_threshold(z, level) / col_sq[j];
    const double delta = next - old;
    if (delta != 0.0) {
      resid.noalias() -= delta * p.design.col(j);
      fit.beta[j] = next;
    }
    return std::abs(delta);
  };
  auto sweep = [&](const std::vector<Index>& coords) {
    double change = 0.0;
    for (Index j : coords) change = std::max(change, update(j));
    ++fit.iterations;
    if (opts.trace_objective) fit.objective_trace.push_back(objective());
    return change;
  };

  std::vector<Index> all(static_cast<std::size_t>(np));
  for (Index j = 0; j < np; ++j) all[static_cast<std::size_t>(j)] = j;
  std::vector<Index> active;

  while (!fit.converged && fit.iterations < opts.max_iter) {
    if (sweep(all) < opts.tol) {
      resid = p.response - p.design * fit.beta;
      if (kkt_from_residual(p, fit.beta, resid) <= fit.kkt_tol) {
        fit.converged = true;
        break;
      }
      continue;
    }
    active.clear();
    for (Index j = 0; j < np; ++j) {
      if (fit.beta[j] != 0.0) active.push_back(j);
    }
    while (fit.iterations < opts.max_iter && sweep(active) >= opts.tol) {
    }
  }

  fit.residuals = p.response - p.design * fit.beta;
  fit.objective = fit.residuals.squaredNorm() / static_cast<double>(t) + 2.0 * p.penalty * fit.beta.lpNorm<1>();
  fit.kkt_violation = kkt_from_residual(p, fit.beta, fit.residuals);
  return fit;
}

LambdaGrid lambda_grid(const LassoProblem& p, int n_points, double ratio) {
  if (n_points < 2) throw Error(ErrorKind::config, "lambda_grid: need at least two points");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::config, "lambda_grid: ratio must lie in (0, 1)");
  LambdaGrid out;
  const double top = lambda_max(p);
  out.values.resize(static_cast<std::size_t>(n_points), 0.0);
  if (top == 0.0) {
    out.degenerate = true;
    return out;
  }
  for (int i = 0; i < n_points; ++i) {
    out.values[static_cast<std::size_t>(i)] = top * std::pow(ratio, static_cast<double>(i) / (n_points - 1));
  }
  out.values.front() = top;
  out.values.back() = top * ratio;
  return out;
}

namespace {

std::vector<double> descending(std::vector<double> grid) {
  if (grid.empty()) throw Error(ErrorKind::config, "lambda selection: empty grid");
  for (double v : grid) {
    if (!(v >= 0.0)) throw Error(ErrorKind::config, "lambda selection: negative or NaN grid value");
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  return grid;
}

// Warm-started path; repeated grid values reuse the previous fit verbatim.
std::vector<LassoFit> fit_path(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                               const std::vector<double>& grid, const LassoOptions& opts) {
  std::vector<LassoFit> fits;
  fits.reserve(grid.size());
  std::optional<Vector> warm;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] == grid[i - 1]) {
      fits.push_back(fits.back());
      continue;
    }
    fits.push_back(lasso_fit(LassoProblem(x, y, grid[i]), opts, warm));
    warm = fits.back().beta;
  }
  return fits;
}

}  // namespace

BicSelection select_lambda_bic(const LassoProblem& p, std::vector<double> grid, const LassoOptions& opts) {
  BicSelection out;
  out.grid = descending(std::move(grid));
  out.fits = fit_path(p.design, p.response, out.grid, opts);
  const double t = static_cast<double>(p.rows());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.fits.size(); ++i) {
    const double rss = out.fits[i].residuals.squaredNorm();
    const double crit = t * std::log(std::max(rss / t, 1e-300)) + std::log(t) * static_cast<double>(out.fits[i].df());
    out.criteria.push_back(crit);
    if (crit < best) {
      best = crit;
      out.chosen = i;
    }
  }
  out.lambda = out.grid[out.chosen];
  return out;
}

CvSelection select_lambda_tscv(const LassoProblem& p, std::vector<double> grid, int n_folds, Index min_train,
                               const LassoOptions& opts) {
  const std::vector<double> sorted = descending(std::move(grid));
  const Index t = p.rows();
  if (n_folds < 1 || min_train < 1 || min_train + n_folds > t) {
    throw Error(ErrorKind::config, "tscv: need n_folds >= 1, min_train >= 1 and min_train + n_folds <= T");
  }
  const Index h = (t - min_train) / n_folds;

  CvSelection out;
  out.table.resize(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) out.table[i].lambda = sorted[i];
  for (int f = 0; f < n_folds; ++f) {
    const Index train = min_train + f * h;
    const auto fits = fit_path(p.design.topRows(train), p.response.head(train), sorted, opts);
    const auto vx = p.design.middleRows(train, h);
    const auto vy = p.response.segment(train, h);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double mse = (vy - vx * fits[i].beta).squaredNorm() / static_cast<double>(h);
      out.table[i].fold_mse.push_back(mse);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.table.size(); ++i) {
    auto& row = out.table[i];
    double sum = 0.0;
    for (double m : row.fold_mse) sum += m;
    row.mean_mse = sum / static_cast<double>(n_folds);
    if (row.mean_mse < best) {
      best = row.mean_mse;
      out.chosen = i;
    }
  }
  out.lambda = sorted[out.chosen];
  return out;
}

}  // namespace hdvb
