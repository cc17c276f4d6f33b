#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "smoothstep/concentration.hpp"
#include "smoothstep/harness.hpp"
#include "smoothstep/schedule.hpp"

namespace smoothstep {

/// Round-trippable "%.17g"; "nan" / "inf" / "-inf" for non-finite values.
std::string format_number(double v);

nlohmann::json run_result_to_json(const RunResult& run);

nlohmann::json tail_report_to_json(const TailReport& report);

/// Columns: check,t,threshold,empirical,theoretical,trials (one row per t).
std::string tail_report_csv(const TailReport& report);

nlohmann::json bench_summary_to_json(const BenchSummary& summary, const ExperimentConfig& config);

/// Columns: strategy,budget,trial_id,k,T_k,eta_k,d_hat_k,ell_hat_k,excess_k
/// (one row per trial per epoch, failed trials omitted).
std::string trials_csv(const std::vector<TrialOutcome>& trials);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace smoothstep
