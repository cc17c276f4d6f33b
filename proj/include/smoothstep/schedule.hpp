#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "smoothstep/ball.hpp"
#include "smoothstep/loss.hpp"
#include "smoothstep/task.hpp"

namespace smoothstep {

/**
 * Epoch-doubling schedule. Epoch k (1-based) has length
 * T_k = first_epoch_length * 2^(k-1); the total is T_1 (2^m - 1).
 */
struct ScheduleConfig {
  std::size_t first_epoch_length = 1;
  std::size_t epochs = 1;
  double delta = 0.05;
  double K = 1.0;  // reporting constant only
  double eta_cap_factor = 1.0 / 6.0;
  bool warm_start = false;  // start epoch k+1 from epoch k's average instead of 0

  std::size_t epoch_length(std::size_t k) const { return first_epoch_length << (k - 1); }
  std::size_t total_steps() const { return first_epoch_length * ((std::size_t{1} << epochs) - 1); }

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;

  /// Largest m with T_1 (2^m - 1) <= budget, i.e. floor(log2(budget / T_1 + 1)).
  static std::size_t epochs_for_budget(std::size_t budget, std::size_t first_epoch_length);
};

struct BoundConstants {
  double lipschitz;  // L on [-R, R]
  double C;          // L R + phi(0)
  double t_log;      // ln(1/delta) + ln m + 1 + R^2 gamma / C
};

BoundConstants bound_constants(const SmoothLoss<double>& loss, const BallDomain<double>& domain,
                               double delta, std::size_t epochs);

/// d_hat + 6 (sqrt(C t / T_k * d_hat) + C t / T_k)
double surrogate(double d_hat, const BoundConstants& consts, std::size_t epoch_length);

/// min(R / (2 sqrt(gamma T_next ell_hat)), cap_factor / gamma); the cap when ell_hat <= 0.
double next_step_size(const BallDomain<double>& domain, double gamma, std::size_t next_length,
                      double ell_hat, double cap_factor = 1.0 / 6.0);

struct EpochRecord {
  std::size_t k;
  std::size_t length;
  double eta;
  double d_hat;
  double ell_hat;
  Eigen::VectorXd w_avg;
  std::optional<double> excess;  // l(w_avg) - l(w*) when a reference is known
};

struct RunResult {
  std::vector<EpochRecord> epochs;
  Eigen::VectorXd w_hat;          // the last epoch's averaged iterate
  std::optional<double> excess;   // l(w_hat) - l(w*)
  BoundConstants consts;
  ScheduleConfig schedule;
};

/**
 * Parameter-free projected SGD by epoch doubling. Epoch k draws T_k fresh
 * examples, runs with eta_k, and feeds its empirical loss D_hat_k through
 * surrogate() into eta_{k+1}. eta_1 treats C as the initial surrogate.
 *
 * All randomness comes from a single sampler seeded with `seed`. When
 * `reference` is given, per-epoch and final excess risks are filled in.
 * Numeric errors are rethrown annotated with the epoch index.
 */
RunResult run_adaptive(const Task& task, const SmoothLoss<double>& loss,
                       const BallDomain<double>& domain, const ScheduleConfig& schedule,
                       std::uint64_t seed, const ReferenceOptimum* reference = nullptr);

}  // namespace smoothstep
