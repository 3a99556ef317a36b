#include "hdvb/dgp.hpp"
#include "hdvb/error.hpp"
#include "hdvb/lasso.hpp"
#include "hdvb/linproc.hpp"
#include "hdvb/var_fit.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace hdvb;

namespace {

FitOptions fixed_lambda(double lambda) {
  FitOptions o;
  o.selector.kind = SelectorKind::fixed;
  o.selector.fixed_lambda = lambda;
  return o;
}

// Holm through adjusted p-values: p~_(i) = max_{j <= i} (m - j + 1) p_(j).
std::vector<bool> holm_by_adjusted(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<bool> out(m, false);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    running = std::max(running, std::min(1.0, static_cast<double>(m - i) * p[order[i]]));
    out[order[i]] = running <= alpha;
  }
  return out;
}

Matrix iid_normal(std::mt19937_64& gen, Index t, Index n) {
  std::normal_distribution<double> z;
  Matrix m(t, n);
  for (Index i = 0; i < t; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = z(gen);
  return m;
}

}  // namespace

TEST_SUITE("var_fit") {

TEST_CASE("lag design with N = 1, K = 1 is the series shifted by one") {
  Matrix d(5, 1);
  d << 9, 1, 2, 3, 4;
  const LagDesign lag = build_lag_design(TimeSeriesPanel(d, 1), 1);
  Matrix want(4, 1);
  want << 9, 1, 2, 3;
  CHECK(lag.design == want);
  CHECK(lag.responses == d.bottomRows(4));
}

TEST_CASE("lag design orders blocks lag-1 first") {
  Matrix d(5, 2);
  d << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  const LagDesign lag = build_lag_design(TimeSeriesPanel(d, 2), 2);
  REQUIRE(lag.design.rows() == 3);
  for (Index t = 0; t < 3; ++t) {
    const Index row = t + 2;
    CHECK(lag.design(t, 0) == d(row - 1, 0));
    CHECK(lag.design(t, 1) == d(row - 1, 1));
    CHECK(lag.design(t, 2) == d(row - 2, 0));
    CHECK(lag.design(t, 3) == d(row - 2, 1));
  }
}

TEST_CASE("all-zero panel gives all-zero design and responses") {
  const LagDesign lag = build_lag_design(TimeSeriesPanel(Matrix::Zero(10, 3), 2), 2);
  CHECK(lag.design.isZero(0.0));
  CHECK(lag.responses.isZero(0.0));
}

TEST_CASE("short presample is refused with the required K") {
  try {
    build_lag_design(TimeSeriesPanel(Matrix::Zero(10, 2), 1), 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK(std::string(e.what()).find("K = 3") != std::string::npos);
  }
}

TEST_CASE("diagonal VAR(1) with a = 0.5 is recovered at T = 500") {
  // Lasso shrinks the diagonal towards zero (mean about 0.44 under BIC), so
  // single draws can miss by more than 0.1; the check is over seeds.
  const VarModel truth({Matrix(0.5 * Matrix::Identity(5, 5))});
  const int seeds = 20;
  Vector diag_sum = Vector::Zero(5);
  std::vector<double> abs_err;
  std::vector<Index> off_df;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto sim = simulate_panel(truth, 500, {}, std::nullopt, 1000 + static_cast<std::uint64_t>(seed));
    const FitReport fit = fit_sparse_var(sim.panel, 1);
    const Matrix& a = fit.model.a_mats[0];
    for (Index j = 0; j < 5; ++j) {
      diag_sum(j) += a(j, j);
      abs_err.push_back(std::abs(a(j, j) - 0.5));
      off_df.push_back((a.row(j).array() != 0.0).count() - (a(j, j) != 0.0 ? 1 : 0));
    }
  }
  for (Index j = 0; j < 5; ++j) CHECK(std::abs(diag_sum(j) / seeds - 0.5) <= 0.1);
  std::nth_element(abs_err.begin(), abs_err.begin() + abs_err.size() / 2, abs_err.end());
  CHECK(abs_err[abs_err.size() / 2] <= 0.1);
  std::nth_element(off_df.begin(), off_df.begin() + off_df.size() / 2, off_df.end());
  CHECK(off_df[off_df.size() / 2] <= 2);
}

TEST_CASE("lambda at lambda_max in every equation gives the zero model") {
  SparsePattern p;
  p.kind = PatternKind::banded;
  p.per_row_nonzeros = 2;
  const auto sim = simulate_panel(generate_var_model(4, 2, p, 0.7, 3), 120, {}, std::nullopt, 5);
  const LagDesign lag = build_lag_design(sim.panel, 2);
  double top = 0.0;
  for (Index j = 0; j < 4; ++j) top = std::max(top, lambda_max(LassoProblem(lag.design, lag.responses.col(j))));
  const FitReport fit = fit_sparse_var(sim.panel, 2, fixed_lambda(top));
  for (const auto& a : fit.model.a_mats) CHECK(a.isZero(0.0));
  CHECK(fit.residuals == lag.responses);
}

TEST_CASE("N = 1, lambda = 0 gives the AR(1) least-squares coefficient") {
  Matrix a(1, 1);
  a << 0.6;
  const auto sim = simulate_panel(VarModel({a}), 300, {}, std::nullopt, 8);
  const Matrix& x = sim.panel.data();
  double xy = 0.0, xx = 0.0;
  for (Index t = 1; t < x.rows(); ++t) {
    xy += x(t, 0) * x(t - 1, 0);
    xx += x(t - 1, 0) * x(t - 1, 0);
  }
  const FitReport fit = fit_sparse_var(sim.panel, 1, fixed_lambda(0.0));
  CHECK(fit.model.a_mats[0](0, 0) == doctest::Approx(xy / xx).epsilon(1e-9));
}

TEST_CASE("residuals, normal equations and the stacking round trip") {
  std::mt19937_64 gen(4);
  const auto a = oracle::random_var(gen, 3, 2, 0.6);
  const auto sim = simulate_panel(VarModel(a), 200, {}, std::nullopt, 9);
  const LagDesign lag = build_lag_design(sim.panel, 2);
  const FitReport fit = fit_sparse_var(sim.panel, 2, fixed_lambda(0.0));
  const Matrix stacked = fit.model.stacked();
  for (Index j = 0; j < 3; ++j) {
    const Vector beta = stacked.row(j).transpose();
    CHECK(fit.residuals.col(j) == Vector(lag.responses.col(j) - lag.design * beta));
    CHECK((lag.design.transpose() * fit.residuals.col(j)).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(VarModel::from_stacked(stacked, 2).stacked() == stacked);
  for (const auto& eq : fit.per_equation) {
    CHECK(eq.converged);
    CHECK_FALSE(eq.failed);
  }
}

TEST_CASE("selectors each produce a converged fit with per-equation penalties") {
  SparsePattern p;
  const auto sim = simulate_panel(generate_var_model(3, 1, p, 0.5, 1), 150, {}, std::nullopt, 2);
  for (SelectorKind kind : {SelectorKind::bic, SelectorKind::tscv}) {
    FitOptions o;
    o.selector.kind = kind;
    const FitReport fit = fit_sparse_var(sim.panel, 1, o);
    for (const auto& eq : fit.per_equation) {
      CHECK(eq.converged);
      CHECK(eq.lambda > 0.0);
      CHECK(eq.kkt_violation <= 1e-6 * 10.0);
    }
  }
  CHECK(parse_selector_kind("tscv") == SelectorKind::tscv);
  CHECK_THROWS_AS(parse_selector_kind("aic"), Error);
}

TEST_CASE("fit fails as a whole only if every equation fails") {
  const TimeSeriesPanel p(Matrix::Ones(20, 2), 1);
  try {
    fit_sparse_var(p, 1, fixed_lambda(-1.0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::estimation);
  }
}

TEST_CASE("stationarity correction of a scalar 1.2 divides once by 1.21") {
  Matrix a(1, 1);
  a << 1.2;
  const VarModel c = stationarity_correct(VarModel({a}), 0.01);
  CHECK(c.a_mats[0](0, 0) == doctest::Approx(1.2 / 1.21).epsilon(1e-12));
  CHECK(c.corrected);
  CHECK(c.correction_factor == doctest::Approx(1.0 / 1.21).epsilon(1e-12));
}

TEST_CASE("stationary and zero models are left alone") {
  Matrix a(1, 1);
  a << 0.5;
  const VarModel c = stationarity_correct(VarModel({a}));
  CHECK_FALSE(c.corrected);
  CHECK(c.correction_factor == 1.0);
  CHECK(c.a_mats[0](0, 0) == 0.5);
  const VarModel z = stationarity_correct(VarModel::zeros(3, 2));
  CHECK_FALSE(z.corrected);
  CHECK(z.stacked().isZero(0.0));
  CHECK_THROWS_AS(stationarity_correct(VarModel({a}), 0.0), Error);
}

TEST_CASE("correction on explosive models: radius, idempotence, support, factor") {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> rho(1.0, 1.5);
  for (int rep = 0; rep < 40; ++rep) {
    const Index k = 1 + rep % 3;
    const VarModel m(oracle::random_var(gen, 4, k, rho(gen), 0.5));
    const VarModel c = stationarity_correct(m);
    CHECK(oracle::eigen_radius(oracle::companion(c.a_mats)) < 1.0);
    CHECK(c.corrected);
    CHECK(c.correction_factor > 0.0);
    CHECK(c.correction_factor <= 1.0);
    CHECK(((c.stacked().array() != 0.0) == (m.stacked().array() != 0.0)).all());
    CHECK(max_norm(c.stacked() - c.correction_factor * m.stacked()) <= 1e-12 * max_norm(m.stacked()));
    const VarModel twice = stationarity_correct(c);
    CHECK(twice.stacked() == c.stacked());
  }
}

TEST_CASE("Holm agrees with the adjusted p-value form and is monotone in alpha") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::uniform_int_distribution<int> tie(0, 3);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> p(1 + rep % 12);
    for (double& v : p) v = tie(gen) == 0 ? 0.01 : u(gen);
    for (double alpha : {0.01, 0.05, 0.1}) {
      const auto got = holm_reject(p, alpha);
      CHECK(got == holm_by_adjusted(p, alpha));
      const auto wider = holm_reject(p, alpha * 2.0);
      for (std::size_t i = 0; i < p.size(); ++i) CHECK((!got[i] || wider[i]));
    }
  }
}

TEST_CASE("autocorrelation diagnostic holds its level under whiteness") {
  std::mt19937_64 gen(101);
  int any = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const auto d = residual_autocorr_diagnostic(iid_normal(gen, 500, 10), 5, 0.05);
    CHECK(d.family_size == 50);
    any += d.white ? 0 : 1;
  }
  const double rate = any / static_cast<double>(reps);
  CHECK(rate <= 0.05 + 2.0 * std::sqrt(0.05 * 0.95 / reps));
}

TEST_CASE("autocorrelation diagnostic detects AR(1) residuals at lag 1") {
  std::mt19937_64 gen(202);
  int hit = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Matrix r = iid_normal(gen, 500, 3);
    for (Index t = 1; t < 500; ++t) r(t, 1) += 0.8 * r(t - 1, 1);
    const auto d = residual_autocorr_diagnostic(r, 5, 0.05);
    for (const auto& c : d.cells) hit += (c.series == 1 && c.lag == 1 && c.reject) ? 1 : 0;
  }
  CHECK(hit >= 190);
}

TEST_CASE("a permuted iid sample shows no rejection at alpha = 0.001") {
  std::mt19937_64 gen(303);
  Matrix r = iid_normal(gen, 5000, 4);
  std::vector<Index> perm(5000);
  for (Index i = 0; i < 5000; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  Matrix shuffled(5000, 4);
  for (Index i = 0; i < 5000; ++i) shuffled.row(i) = r.row(perm[static_cast<std::size_t>(i)]);
  const auto d = residual_autocorr_diagnostic(shuffled, 5, 0.001);
  CHECK(d.white);
}

TEST_CASE("constant residual series are excluded from the family") {
  std::mt19937_64 gen(7);
  Matrix r = iid_normal(gen, 100, 3);
  r.col(2).setConstant(1.5);
  const auto d = residual_autocorr_diagnostic(r, 4, 0.05);
  REQUIRE(d.degenerate_series.size() == 1);
  CHECK(d.degenerate_series[0] == 2);
  CHECK(d.family_size == 8);
  CHECK_THROWS_AS(residual_autocorr_diagnostic(r, 96, 0.05), Error);
}

}
