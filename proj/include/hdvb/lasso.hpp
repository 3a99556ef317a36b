#pragma once

#include "hdvb/types.hpp"

#include <optional>
#include <vector>

namespace hdvb {

/// One lasso regression. The objective is
///
///   (1/T) sum_t (y_t - beta' x_t)^2 + 2 * penalty * ||beta||_1
///
/// Note the factor 2 on the penalty: most libraries use penalty * ||beta||_1
/// and their lambda is twice the one here.
struct LassoProblem {
  Eigen::Ref<const Matrix> design;
  Eigen::Ref<const Vector> response;
  double penalty = 0.0;

  LassoProblem(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, double lambda = 0.0);

  Index rows() const noexcept { return design.rows(); }
  Index cols() const noexcept { return design.cols(); }
};

struct LassoOptions {
  /// Stop when no coefficient moves more than this in a full sweep ...
  double tol = 1e-8;
  /// ... and the KKT violation is at most kkt_tol_rel * lambda_max.
  double kkt_tol_rel = 1e-6;
  int max_iter = 100000;
  /// Record the objective after every sweep.
  bool trace_objective = false;
};

struct LassoFit {
  Vector beta;
  double penalty = 0.0;
  Vector residuals;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  double kkt_tol = 0.0;
  std::vector<double> objective_trace;

  Index df() const { return static_cast<Index>((beta.array() != 0.0).count()); }
};

/// max_p |(1/T) sum_t x_{p,t} y_t|: the smallest penalty with an all-zero solution.
double lambda_max(const LassoProblem& p);

double lasso_objective(const LassoProblem& p, const Eigen::Ref<const Vector>& beta);

/// Largest KKT violation of beta for p (see LassoFit::kkt_violation).
double kkt_violation(const LassoProblem& p, const Eigen::Ref<const Vector>& beta);

/// Cyclic coordinate descent in fixed order 1..P with residual caching and
/// active-set passes. Non-convergence is reported through `converged`.
LassoFit lasso_fit(const LassoProblem& p, const LassoOptions& opts = {},
                   const std::optional<Vector>& warm_start = std::nullopt);

struct LambdaGrid {
  std::vector<double> values;
  /// lambda_max was zero, so every grid point is zero.
  bool degenerate = false;
};

/// n_points log-spaced values from lambda_max down to ratio * lambda_max.
LambdaGrid lambda_grid(const LassoProblem& p, int n_points, double ratio);

struct BicSelection {
  double lambda = 0.0;
  std::size_t chosen = 0;
  /// Grid sorted in decreasing order, with the fits and criteria along it.
  std::vector<double> grid;
  std::vector<LassoFit> fits;
  std::vector<double> criteria;
};

/// Warm-started path from large to small lambda; minimizes
/// T log(RSS/T) + log(T) df, ties resolved toward the larger lambda.
BicSelection select_lambda_bic(const LassoProblem& p, std::vector<double> grid, const LassoOptions& opts = {});

struct CvRow {
  double lambda = 0.0;
  double mean_mse = 0.0;
  std::vector<double> fold_mse;
};

struct CvSelection {
  double lambda = 0.0;
  std::size_t chosen = 0;
  std::vector<CvRow> table;
};

/// Expanding-window cross-validation: with h = (T - min_train) / n_folds,
/// fold f trains on the first min_train + f h rows and validates on the
/// next h. Ties resolved toward the larger lambda.
CvSelection select_lambda_tscv(const LassoProblem& p, std::vector<double> grid, int n_folds, Index min_train,
                               const LassoOptions& opts = {});

}  // namespace hdvb
