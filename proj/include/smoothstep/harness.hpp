#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smoothstep/ball.hpp"
#include "smoothstep/loss.hpp"
#include "smoothstep/schedule.hpp"
#include "smoothstep/task.hpp"

namespace smoothstep {

enum class Strategy { Adaptive, OracleFixed, ConstantCap, SqrtDecay };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

struct TaskSpec {
  std::string factory;  // separable | noisy | inline | file
  Eigen::Index dim = 0;
  double margin = 0.0;
  double flip_prob = 0.0;
  std::size_t k_atoms = 0;
  std::uint64_t seed = 0;
  std::string path;       // factory == file
  nlohmann::json inline_task;  // factory == inline
};

struct ExperimentConfig {
  std::string loss = "logistic";
  TaskSpec task;
  double radius = 1.0;
  std::size_t first_epoch_length = 8;
  double delta = 0.05;
  double K = 1.0;
  bool warm_start = false;
  std::vector<std::size_t> budgets;
  std::vector<Strategy> strategies{Strategy::Adaptive};
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  double optimum_tol = 1e-9;
  std::string out;

  /// Schedule for a given sample budget (epochs from epochs_for_budget).
  ScheduleConfig schedule_for(std::size_t budget) const;
};

/// Parses and validates a config document. Throws ConfigError naming the field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

Task build_task(const TaskSpec& spec);

/// Single epoch of T steps with eta = min(R / (2 sqrt(gamma T l(w*))), 1 / (6 gamma));
/// the cap when l(w*) = 0.
double oracle_step_size(const BallDomain<double>& domain, double gamma, std::size_t steps, double loss_star);

RunResult oracle_fixed_strategy(const Task& task, const SmoothLoss<double>& loss,
                                const BallDomain<double>& domain, std::size_t steps,
                                std::uint64_t seed, const ReferenceOptimum& reference,
                                double delta = 0.05);

/// Single epoch with eta = 1 / (6 gamma).
RunResult constant_cap_strategy(const Task& task, const SmoothLoss<double>& loss,
                                const BallDomain<double>& domain, std::size_t steps,
                                std::uint64_t seed, const ReferenceOptimum* reference = nullptr,
                                double delta = 0.05);

/// Single epoch with eta_t = R / sqrt(t). The recorded eta is eta_1.
RunResult sqrt_decay_strategy(const Task& task, const SmoothLoss<double>& loss,
                              const BallDomain<double>& domain, std::size_t steps,
                              std::uint64_t seed, const ReferenceOptimum* reference = nullptr,
                              double delta = 0.05);

/// Dispatches on strategy; every run for (budget, trial) shares one seed.
RunResult run_strategy(Strategy strategy, const ExperimentConfig& config, const Task& task,
                       const SmoothLoss<double>& loss, const BallDomain<double>& domain,
                       const ReferenceOptimum& reference, std::size_t budget, std::uint64_t seed);

/// Per-trial seed: a function of (base seed, budget, trial) only.
std::uint64_t trial_seed(std::uint64_t base, std::size_t budget, std::size_t trial);

struct Quantiles {
  double median;
  double q90;
  double q_conf;  // the (1 - delta) quantile
};

/// Linear-interpolation quantile of an unsorted sample; level in [0, 1].
double quantile(std::vector<double> values, double level);

/// Least-squares slope of log(y) against log(x); NaN with < 2 usable points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct BudgetSummary {
  std::size_t budget;
  std::size_t trials;  // successful trials
  Quantiles excess;
};

struct StrategySummary {
  Strategy strategy;
  std::vector<BudgetSummary> budgets;
  double slope;  // of median excess vs budget
};

struct TrialOutcome {
  Strategy strategy;
  std::size_t budget;
  std::size_t trial;
  std::optional<RunResult> run;  // empty when the trial failed
  std::string error;
};

struct BenchSummary {
  std::vector<StrategySummary> strategies;
  ReferenceOptimum reference;
  BoundConstants constants;  // for the largest budget's schedule
  std::size_t failed_trials = 0;
  std::vector<std::string> errors;

  const StrategySummary* find(Strategy s) const;
};

struct BenchResult {
  BenchSummary summary;
  std::vector<TrialOutcome> trials;  // ordered by (strategy, budget, trial)
};

/**
 * Runs `trials` independent runs per strategy and budget on a worker pool,
 * computes exact excess risks, and (when config.out is set) writes
 * trials.csv and summary.json there. Output is identical for any worker
 * count. Trials that throw NumericError, or whose excess falls below
 * -optimum_tol * max(1, 2R), are excluded and counted in failed_trials.
 */
BenchResult run_bench(const ExperimentConfig& config);

}  // namespace smoothstep
