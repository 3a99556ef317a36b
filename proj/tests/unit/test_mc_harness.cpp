#include "hdvb/error.hpp"
#include "hdvb/mc_harness.hpp"
#include "hdvb/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace hdvb;

namespace {

ExperimentSpec white_noise_spec(Index n, Index t, std::size_t reps) {
  ExperimentSpec s;
  s.dgp.white_noise = true;
  s.zero_model = true;
  s.grid = {{n, t}};
  s.mc_reps = reps;
  s.b_reps = 199;
  return s;
}

double three_se(double p, std::size_t r) { return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(r)); }

bool same_tables(const ExperimentReport& a, const ExperimentReport& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t c = 0; c < a.cells.size(); ++c) {
    const CellReport& x = a.cells[c];
    const CellReport& y = b.cells[c];
    if (x.cell_seed != y.cell_seed || x.reps_ok != y.reps_ok || x.alpha_rows.size() != y.alpha_rows.size()) return false;
    for (std::size_t i = 0; i < x.alpha_rows.size(); ++i) {
      if (x.alpha_rows[i].rejection_rate != y.alpha_rows[i].rejection_rate) return false;
      if (x.alpha_rows[i].fwer != y.alpha_rows[i].fwer) return false;
      if (x.alpha_rows[i].power != y.alpha_rows[i].power) return false;
    }
    if (x.mean_rho_hat != y.mean_rho_hat || x.ks_stat_oracle != y.ks_stat_oracle) return false;
    if (x.cov_error_mean != y.cov_error_mean || x.cov_error_p90 != y.cov_error_p90) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("mc_harness") {

TEST_CASE("seed hierarchy") {
  CHECK(cell_seed(5, 2) == stream_key(5, 2));
  CHECK(replication_seed(9, 3) == stream_key(stream_key(9, 1), 3));
  CHECK(cell_seed(5, 2) != cell_seed(5, 3));
}

TEST_CASE("alpha = 1/(B+1) rejects only when q_obs tops every replicate") {
  ExperimentSpec s = white_noise_spec(3, 50, 200);
  s.b_reps = 99;
  s.alphas = {1.0 / 100.0};
  const auto r = run_size_experiment(s);
  const double rate = r.cells[0].alpha_rows[0].rejection_rate;
  CHECK(rate <= 0.01 + three_se(0.01, 200));
}

TEST_CASE("zero model, N = 1: size within 3 binomial SE of alpha") {
  ExperimentSpec s = white_noise_spec(1, 100, 500);
  s.master_seed = 17;
  const auto r = run_size_experiment(s);
  REQUIRE(r.cells.size() == 1);
  const AlphaRow& row = r.cells[0].alpha_rows[0];
  CHECK(r.cells[0].reps_ok == 500);
  CHECK(std::abs(row.rejection_rate - 0.05) <= three_se(0.05, 500));
}

TEST_CASE("reports do not depend on the thread count") {
  ExperimentSpec s;
  s.grid = {{4, 60}, {6, 80}};
  s.mc_reps = 12;
  s.b_reps = 49;
  s.alphas = {0.05, 0.1};
  s.master_seed = 3;
  s.mean_shift = MeanShift{1, 0.5};
  const auto one = run_size_experiment(s);
  s.threads = 3;
  const auto three = run_size_experiment(s);
  CHECK(same_tables(one, three));
}

TEST_CASE("a single cell re-run reproduces its numbers") {
  ExperimentSpec s;
  s.grid = {{3, 60}, {5, 70}};
  s.mc_reps = 10;
  s.b_reps = 49;
  s.master_seed = 11;
  s.trace = true;
  const auto full = run_size_experiment(s);
  const auto alone = run_size_experiment(single_cell_spec(s, 1));
  REQUIRE(alone.cells.size() == 1);
  CHECK(alone.cells[0].cell_seed == full.cells[1].cell_seed);
  CHECK(alone.cells[0].alpha_rows[0].rejection_rate == full.cells[1].alpha_rows[0].rejection_rate);
  CHECK(alone.cells[0].mean_rho_hat == full.cells[1].mean_rho_hat);
  std::size_t rep = 0;
  for (const TraceRow& t : full.trace) {
    if (t.cell != 1) continue;
    CHECK(t.seed == replication_seed(full.cells[1].cell_seed, t.rep));
    CHECK(t.value == alone.trace[rep++].value);
  }
  CHECK(rep == 10);
}

TEST_CASE("rates lie in [0, 1] and SEs are binomial") {
  ExperimentSpec s;
  s.grid = {{5, 80}};
  s.mc_reps = 30;
  s.b_reps = 49;
  s.alphas = {0.05, 0.2};
  s.mean_shift = MeanShift{0, 1.0};
  const auto r = run_size_experiment(s);
  const CellReport& c = r.cells[0];
  CHECK_FALSE(c.incomplete);
  for (const AlphaRow& row : c.alpha_rows) {
    for (double p : {row.rejection_rate, row.fwer, *row.power}) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
    const double r_ok = static_cast<double>(c.reps_ok);
    CHECK(row.rejection_se == doctest::Approx(std::sqrt(row.rejection_rate * (1 - row.rejection_rate) / r_ok)));
    CHECK(row.fwer_se == doctest::Approx(std::sqrt(row.fwer * (1 - row.fwer) / r_ok)));
  }
  CHECK(c.correction_rate >= 0.0);
  CHECK(c.correction_rate <= 1.0);
}

TEST_CASE("iid Gaussian panel: statistic matches the Gaussian-max oracle") {
  ExperimentSpec s = white_noise_spec(5, 50, 2000);
  s.oracle_draws = 20000;
  s.b_reps = 499;
  const auto r = run_ks_convergence(s);
  const CellReport& c = r.cells[0];
  REQUIRE(c.ks_stat_oracle.has_value());
  // Two-sample 95% Kolmogorov bound 1.36 sqrt(1/R + 1/M), doubled.
  const double bound = 2.0 * 1.36 * std::sqrt(1.0 / 2000.0 + 1.0 / 20000.0);
  CHECK(*c.ks_stat_oracle <= bound);
  for (auto d : {c.ks_stat_oracle, c.ks_boot_oracle, c.ks_boot_stat, c.ks_oracle_hat_oracle}) {
    REQUIRE(d.has_value());
    CHECK(*d >= 0.0);
    CHECK(*d <= 1.0);
  }
}

TEST_CASE("injected truth gives zero covariance error") {
  ExperimentSpec s;
  s.grid = {{6, 100}};
  s.mc_reps = 5;
  s.inject_truth = true;
  s.dgp.pattern.kind = PatternKind::banded;
  s.dgp.pattern.per_row_nonzeros = 2;
  const auto r = run_covariance_closeness(s);
  CHECK(*r.cells[0].cov_error_mean == 0.0);
  CHECK(*r.cells[0].cov_error_p90 == 0.0);
}

TEST_CASE("scalar AR(0.5) at lambda = 0: covariance error shrinks at the sqrt(T) rate") {
  ExperimentSpec s;
  s.grid = {{1, 200}, {1, 2000}};
  s.mc_reps = 300;
  s.dgp.target_rho = 0.5;
  s.fit.selector.kind = SelectorKind::fixed;
  s.fit.selector.fixed_lambda = 0.0;
  s.master_seed = 21;
  const auto r = run_covariance_closeness(s);
  const double ratio = *r.cells[0].cov_error_mean / *r.cells[1].cov_error_mean;
  CHECK(ratio >= std::sqrt(10.0) / 2.0);
  CHECK(ratio <= std::sqrt(10.0) * 2.0);
}

TEST_CASE("heavier tails give a larger covariance error in most meta-replications") {
  int larger = 0;
  const int metas = 10;
  for (int m = 0; m < metas; ++m) {
    ExperimentSpec s;
    s.grid = {{5, 200}};
    s.mc_reps = 40;
    s.master_seed = 500 + static_cast<std::uint64_t>(m);
    s.dgp.errors.dof = 6;
    const double gauss = *run_covariance_closeness(s).cells[0].cov_error_mean;
    s.scenario = Scenario::heavy_tail;
    const double heavy = *run_covariance_closeness(s).cells[0].cov_error_mean;
    larger += heavy >= gauss ? 1 : 0;
  }
  CHECK(larger >= 7);
}

TEST_CASE("scenario presets") {
  ExperimentSpec s;
  s.grid = {{3, 100}, {3, 400}};
  s.dgp.errors.family = ErrorFamily::scaled_student_t;
  s.scenario = Scenario::corollary1_poly;
  const ExperimentSpec poly = apply_scenario(s);
  CHECK(poly.grid[0].n == 10);
  CHECK(poly.grid[1].n == 20);
  CHECK(poly.dgp.errors.dof == 40);
  s.scenario = Scenario::corollary2_exp;
  const ExperimentSpec ex = apply_scenario(s);
  CHECK(ex.grid[0].n == static_cast<Index>(std::ceil(std::exp(std::pow(100.0, 0.25)))));
  CHECK(ex.dgp.errors.family == ErrorFamily::gaussian);
  s.scenario = Scenario::subgaussian;
  CHECK(apply_scenario(s).dgp.errors.family == ErrorFamily::gaussian);
  for (Scenario sc : {Scenario::subgaussian, Scenario::heavy_tail, Scenario::corollary1_poly, Scenario::corollary2_exp}) {
    CHECK(parse_scenario(to_string(sc)) == sc);
  }
  CHECK_THROWS_AS(parse_scenario("weird"), Error);
}

TEST_CASE("invalid specs are config errors") {
  ExperimentSpec s;
  s.grid.clear();
  CHECK_THROWS_AS(run_size_experiment(s), Error);
  s.grid = {{2, 50}};
  s.mc_reps = 0;
  CHECK_THROWS_AS(run_size_experiment(s), Error);
  s.mc_reps = 2;
  s.alphas = {1.5};
  CHECK_THROWS_AS(run_size_experiment(s), Error);
  s.alphas = {0.05};
  s.mean_shift = MeanShift{5, 0.5};
  CHECK_THROWS_AS(run_size_experiment(s), Error);
  s.mean_shift.reset();
  s.zero_model = s.inject_truth = true;
  CHECK_THROWS_AS(run_size_experiment(s), Error);
}

}
