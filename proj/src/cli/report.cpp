#include "report.hpp"

#include "hdvb/cli.hpp"

#include <cstdio>

namespace hdvb::cli {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json selector_json(const SelectorConfig& s) {
  return {{"kind", to_string(s.kind)},           {"fixed_lambda", s.fixed_lambda}, {"grid_points", s.grid_points},
          {"grid_ratio", s.grid_ratio},          {"cv_folds", s.cv_folds},         {"cv_min_train", s.cv_min_train}};
}

json spec_json(const ExperimentSpec& spec) {
  json grid = json::array();
  for (const GridCell& c : spec.grid) grid.push_back({{"n", c.n}, {"t", c.t}});
  const SparsePattern& p = spec.dgp.pattern;
  json shift = nullptr;
  if (spec.mean_shift) shift = {{"series", spec.mean_shift->series}, {"shift", spec.mean_shift->shift}};
  return {
      {"master_seed", spec.master_seed},
      {"cell_offset", spec.cell_offset},
      {"seed_scheme",
       "cell c: stream_key(master_seed, cell_offset + c); model: stream_key(cell, 0); replication r: "
       "stream_key(stream_key(cell, 1), r); simulation/bootstrap/oracle-hat: stream_key(replication, 1/2/3); "
       "true-sigma oracle: stream_key(cell, 2)"},
      {"scenario", to_string(spec.scenario)},
      {"grid", grid},
      {"b_reps", spec.b_reps},
      {"mc_reps", spec.mc_reps},
      {"alphas", spec.alphas},
      {"mode", to_string(spec.mode)},
      {"eps", spec.eps},
      {"fit_lags", spec.fit_lags > 0 ? spec.fit_lags : spec.dgp.k},
      {"selector", selector_json(spec.fit.selector)},
      {"dgp",
       {{"pattern",
         {{"kind", to_string(p.kind)},
          {"per_row_nonzeros", p.per_row_nonzeros},
          {"magnitude", p.magnitude},
          {"jitter", p.jitter},
          {"decay_across_lags", p.decay_across_lags}}},
        {"k", spec.dgp.k},
        {"target_rho", spec.dgp.target_rho},
        {"white_noise", spec.dgp.white_noise},
        {"errors", {{"family", to_string(spec.dgp.errors.family)}, {"dof", spec.dgp.errors.dof}}}}},
      {"mean_shift", shift},
      {"zero_model", spec.zero_model},
      {"inject_truth", spec.inject_truth},
      {"oracle_draws", spec.oracle_draws},
  };
}

json report_json(const ExperimentReport& report) {
  json cells = json::array();
  double total = 0.0;
  for (const CellReport& c : report.cells) {
    json rows = json::array();
    for (const AlphaRow& r : c.alpha_rows) {
      rows.push_back({{"alpha", r.alpha},
                      {"rejection_rate", r.rejection_rate},
                      {"rejection_se", r.rejection_se},
                      {"fwer", r.fwer},
                      {"fwer_se", r.fwer_se},
                      {"power", optional_number(r.power)},
                      {"power_se", optional_number(r.power_se)}});
    }
    json ks = nullptr;
    if (c.ks_stat_oracle) {
      ks = {{"stat_oracle", *c.ks_stat_oracle},
            {"boot_oracle", optional_number(c.ks_boot_oracle)},
            {"boot_stat", optional_number(c.ks_boot_stat)},
            {"oracle_hat_oracle", optional_number(c.ks_oracle_hat_oracle)}};
    }
    json cov = nullptr;
    if (c.cov_error_mean) cov = {{"mean", *c.cov_error_mean}, {"p90", optional_number(c.cov_error_p90)}};
    cells.push_back({{"n", c.cell.n},
                     {"t", c.cell.t},
                     {"cell_seed", hex64(c.cell_seed)},
                     {"reps_ok", c.reps_ok},
                     {"reps_failed", c.reps_failed},
                     {"incomplete", c.incomplete},
                     {"failures", c.failures},
                     {"mean_rho_hat", c.mean_rho_hat},
                     {"correction_rate", c.correction_rate},
                     {"alpha_rows", rows},
                     {"ks", ks},
                     {"covariance", cov},
                     {"seconds", c.seconds}});
    total += c.seconds;
  }
  return {{"command", "mc"},
          {"experiment", report.experiment},
          {"software", report.software},
          {"spec", spec_json(report.spec)},
          {"cells", cells},
          {"runtime", {{"threads", report.spec.threads}, {"total_seconds", total}}}};
}

namespace {

std::string cell_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "experiment,cell,n,t,cell_seed,alpha,reps_ok,reps_failed,incomplete,rejection_rate,rejection_se,fwer,"
         "fwer_se,power,power_se,ks_stat_oracle,ks_boot_oracle,ks_boot_stat,ks_oracle_hat_oracle,cov_error_mean,"
         "cov_error_p90\n";
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const CellReport& c = report.cells[i];
    auto tail = [&](std::ostream& os) {
      os << cell_text(c.ks_stat_oracle) << ',' << cell_text(c.ks_boot_oracle) << ',' << cell_text(c.ks_boot_stat)
         << ',' << cell_text(c.ks_oracle_hat_oracle) << ',' << cell_text(c.cov_error_mean) << ','
         << cell_text(c.cov_error_p90) << '\n';
    };
    auto head = [&](std::ostream& os) {
      os << report.experiment << ',' << i << ',' << c.cell.n << ',' << c.cell.t << ',' << hex64(c.cell_seed) << ',';
    };
    auto counts = [&](std::ostream& os) {
      os << c.reps_ok << ',' << c.reps_failed << ',' << (c.incomplete ? "true" : "false") << ',';
    };
    if (c.alpha_rows.empty()) {
      head(out);
      out << ',';
      counts(out);
      out << ",,,,,,";
      tail(out);
      continue;
    }
    for (const AlphaRow& r : c.alpha_rows) {
      head(out);
      out << format_double(r.alpha) << ',';
      counts(out);
      out << format_double(r.rejection_rate) << ',' << format_double(r.rejection_se) << ',' << format_double(r.fwer)
          << ',' << format_double(r.fwer_se) << ',' << cell_text(r.power) << ',' << cell_text(r.power_se) << ',';
      tail(out);
    }
  }
}

void write_trace_csv(std::ostream& out, const ExperimentReport& report) {
  out << "cell,rep,seed,value,ok\n";
  for (const TraceRow& r : report.trace) {
    out << r.cell << ',' << r.rep << ',' << hex64(r.seed) << ',' << format_double(r.value) << ','
        << (r.ok ? "true" : "false") << '\n';
  }
}

}  // namespace hdvb::cli
