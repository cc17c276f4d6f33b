#include "smoothstep/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace smoothstep {

using nlohmann::json;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// nlohmann writes NaN as null; keep that explicit for finite-or-null fields.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json run_result_to_json(const RunResult& run) {
  json epochs = json::array();
  for (const auto& e : run.epochs) {
    epochs.push_back({{"k", e.k},
                      {"T_k", e.length},
                      {"eta_k", e.eta},
                      {"d_hat_k", e.d_hat},
                      {"ell_hat_k", e.ell_hat},
                      {"excess_k", optional_number(e.excess)},
                      {"w_avg", to_std(e.w_avg)}});
  }
  const auto& s = run.schedule;
  return {{"schedule", {{"T1", s.first_epoch_length},
                        {"m", s.epochs},
                        {"delta", s.delta},
                        {"K", s.K},
                        {"eta_cap_factor", s.eta_cap_factor},
                        {"warm_start", s.warm_start},
                        {"total_steps", s.total_steps()}}},
          {"constants", {{"L", run.consts.lipschitz}, {"C", run.consts.C}, {"t_log", run.consts.t_log}}},
          {"epochs", epochs},
          {"w_hat", to_std(run.w_hat)},
          {"excess", optional_number(run.excess)}};
}

json tail_report_to_json(const TailReport& r) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.t_values.size(); ++i) {
    rows.push_back({{"t", r.t_values[i]},
                    {"t_effective", r.t_effective[i]},
                    {"threshold", number_or_null(r.thresholds[i])},
                    {"exceed_count", r.exceed_counts[i]},
                    {"empirical", r.empirical(i)},
                    {"theoretical", r.theoretical(i)},
                    {"binomial_sigma", r.binomial_sigma(i)},
                    {"within_3sigma", r.within_bound(i, 3.0)}});
  }
  return {{"label", r.label}, {"trials", r.trials}, {"variance_cap", r.variance_cap}, {"rows", rows}};
}

std::string tail_report_csv(const TailReport& r) {
  std::ostringstream os;
  os << "check,t,threshold,empirical,theoretical,trials\n";
  for (std::size_t i = 0; i < r.t_values.size(); ++i) {
    os << r.label << ',' << format_number(r.t_values[i]) << ',' << format_number(r.thresholds[i]) << ','
       << format_number(r.empirical(i)) << ',' << format_number(r.theoretical(i)) << ',' << r.trials << '\n';
  }
  return os.str();
}

json bench_summary_to_json(const BenchSummary& summary, const ExperimentConfig& config) {
  json strategies = json::array();
  for (const auto& st : summary.strategies) {
    json budgets = json::array();
    for (const auto& b : st.budgets) {
      budgets.push_back({{"budget", b.budget},
                         {"trials", b.trials},
                         {"median", number_or_null(b.excess.median)},
                         {"q90", number_or_null(b.excess.q90)},
                         {"q_conf", number_or_null(b.excess.q_conf)},
                         {"conf_level", 1.0 - config.delta}});
    }
    strategies.push_back({{"strategy", std::string(strategy_name(st.strategy))},
                          {"budgets", budgets},
                          {"loglog_slope", number_or_null(st.slope)}});
  }
  const auto& ref = summary.reference;
  return {{"config", config_to_json(config)},
          {"reference", {{"w_star", to_std(ref.w_star)},
                         {"loss_star", ref.loss_star},
                         {"tol", ref.tol},
                         {"gradient_mapping_norm", ref.gradient_mapping_norm},
                         {"iterations", ref.iterations}}},
          {"constants", {{"L", summary.constants.lipschitz},
                         {"C", summary.constants.C},
                         {"t_log", summary.constants.t_log}}},
          {"strategies", strategies},
          {"failed_trials", summary.failed_trials},
          {"errors", summary.errors}};
}

std::string trials_csv(const std::vector<TrialOutcome>& trials) {
  std::ostringstream os;
  os << "strategy,budget,trial_id,k,T_k,eta_k,d_hat_k,ell_hat_k,excess_k\n";
  for (const auto& t : trials) {
    if (!t.run) continue;
    for (const auto& e : t.run->epochs) {
      os << strategy_name(t.strategy) << ',' << t.budget << ',' << t.trial << ',' << e.k << ',' << e.length
         << ',' << format_number(e.eta) << ',' << format_number(e.d_hat) << ',' << format_number(e.ell_hat)
         << ',' << (e.excess ? format_number(*e.excess) : std::string("nan")) << '\n';
    }
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace smoothstep
