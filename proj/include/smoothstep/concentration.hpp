#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "smoothstep/ball.hpp"
#include "smoothstep/loss.hpp"
#include "smoothstep/schedule.hpp"
#include "smoothstep/task.hpp"

namespace smoothstep {

/// X_i = +magnitude or -magnitude with probability 1/2 each.
struct CoinSource {
  double magnitude = 1.0;
};

/// X_i = 0.
struct ZeroSource {};

/// X_t = l(w_t) - l_t(w_t) along projected SGD from w_1 = 0 with a constant
/// step size. The conditional variance is computed exactly over the atoms.
struct TrajectorySource {
  const Task* task;
  SmoothLoss<double> loss;
  BallDomain<double> domain;
  double eta;
};

struct MartingaleSpec {
  std::variant<CoinSource, ZeroSource, TrajectorySource> source;
  std::size_t length = 0;
  double increment_bound = 1.0;  // K, with |X_i| <= K
  double variance_cap = 0.0;     // nu
};

/**
 * Exceedance counts for a family of tail parameters t. `thresholds[i]` is
 * NaN when the threshold is data-dependent (the A_T check); `t_effective`
 * differs from `t_values` only when a union-bound surcharge was added.
 * The reference probability is always e^{-t_values[i]}.
 */
struct TailReport {
  std::string label;
  std::vector<double> t_values;
  std::vector<double> t_effective;
  std::vector<double> thresholds;
  std::vector<std::size_t> exceed_counts;
  std::size_t trials = 0;
  double variance_cap = 0.0;

  double empirical(std::size_t i) const;
  double theoretical(std::size_t i) const;
  /// Binomial standard deviation sqrt(p (1 - p) / trials) at p = e^{-t}.
  double binomial_sigma(std::size_t i) const;
  /// empirical <= theoretical + sigmas * binomial_sigma (one-sided).
  bool within_bound(std::size_t i, double sigmas = 3.0) const;
  bool all_within(double sigmas = 3.0) const;

  /// Adds counts from a report over disjoint trials with the same t grid.
  TailReport& merge(const TailReport& other);
};

/// sqrt(2 nu t) + (sqrt(2) / 3) K t
double bernstein_threshold(double nu, double increment_bound, double t);

/**
 * Per trial, generates the increments, tracks max_i S_i and Sigma_n^2, and
 * counts trials with max_i S_i > bernstein_threshold(nu, K, t) and
 * Sigma_n^2 <= nu. Every t is evaluated on the same trials.
 */
TailReport simulate_tail(const MartingaleSpec& spec, std::span<const double> t_values,
                         std::size_t trials, std::uint64_t seed);

struct IncrementPath {
  std::vector<double> increments;  // X_1..X_n
  double variance_sum = 0.0;       // Sigma_n^2
};

/// The increments simulate_tail generates for trial `trial` under `seed`.
IncrementPath sample_path(const MartingaleSpec& spec, std::uint64_t seed, std::size_t trial = 0);

/// Per-step losses of one SGD run, for the A_T / B_T checks.
struct TrialTrace {
  std::vector<double> expected_at_iterate;    // l(w_t), exact
  std::vector<double> realized_at_iterate;    // l_t(w_t)
  std::vector<double> realized_at_reference;  // l_t(w_ref)
};

/// Trials [first_trial, first_trial + trials) of constant-step projected SGD from 0.
std::vector<TrialTrace> collect_traces(const Task& task, const SmoothLoss<double>& loss,
                                       const BallDomain<double>& domain, double eta,
                                       std::size_t steps, const Eigen::VectorXd& w_ref,
                                       std::size_t trials, std::uint64_t seed,
                                       std::size_t first_trial = 0);

/// Var of phi(y w'x) over the atom distribution, i.e. E_t[X_t^2] at w_t = w.
double conditional_variance(const Task& task, const SmoothLoss<double>& loss, const Eigen::VectorXd& w);

/**
 * B_T = sum_t (l(w*) - l_t(w*)) against (sqrt(2)/3) t C + sqrt(2 t C l(w*) T).
 */
TailReport check_BT(std::span<const TrialTrace> traces, double loss_star,
                    const BoundConstants& consts, std::span<const double> t_values);

/**
 * A_T = sum_t (l(w_t) - l_t(w_t)), D_T = sum_t l(w_t). Counts trials with
 * A_T > 2 sqrt(C D_T t') + (sqrt(2)/3) C t' and D_T > C, where
 * t' = t + ln m and m = max(1, ceil(log2 T)) pays for the dyadic shells of D_T.
 */
TailReport check_AT(std::span<const TrialTrace> traces, const BoundConstants& consts,
                    std::span<const double> t_values);

/// Runs collect_traces in chunks and returns the merged {A_T, B_T} reports.
std::pair<TailReport, TailReport> run_martingale_checks(
    const Task& task, const SmoothLoss<double>& loss, const BallDomain<double>& domain,
    double eta, std::size_t steps, const ReferenceOptimum& reference, const BoundConstants& consts,
    std::span<const double> t_values, std::size_t trials, std::uint64_t seed,
    std::size_t chunk = 1000);

}  // namespace smoothstep
