#include "smoothstep/schedule.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "smoothstep/sgd.hpp"

namespace smoothstep {

void ScheduleConfig::validate() const {
  if (first_epoch_length < 1) throw std::invalid_argument("first epoch length must be >= 1");
  if (epochs < 1) throw std::invalid_argument("number of epochs must be >= 1");
  if (epochs >= 48 || (first_epoch_length << (epochs - 1)) >> (epochs - 1) != first_epoch_length)
    throw std::invalid_argument("schedule length overflows");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(K > 0.0)) throw std::invalid_argument("K must be positive");
  if (!(eta_cap_factor > 0.0)) throw std::invalid_argument("eta cap factor must be positive");
}

std::size_t ScheduleConfig::epochs_for_budget(std::size_t budget, std::size_t first_epoch_length) {
  if (first_epoch_length < 1) throw std::invalid_argument("first epoch length must be >= 1");
  // floor(log2(budget / T1 + 1)) for the integer quotient; T1 (2^m - 1) <= budget holds
  const std::size_t q = budget / first_epoch_length;
  return static_cast<std::size_t>(std::bit_width(q + 1)) - 1;
}

BoundConstants bound_constants(const SmoothLoss<double>& loss, const BallDomain<double>& domain,
                               double delta, std::size_t epochs) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (epochs < 1) throw std::invalid_argument("number of epochs must be >= 1");
  const double R = domain.radius();
  const double L = lipschitz_on(loss, ReachableInterval<double>::from_radius(R));
  const double C = L * R + loss.value_at_zero();
  const double t = std::log(1.0 / delta) + std::log(static_cast<double>(epochs)) + 1.0 +
                   R * R * loss.gamma() / C;
  return {L, C, t};
}

double surrogate(double d_hat, const BoundConstants& consts, std::size_t epoch_length) {
  if (!(d_hat >= 0.0)) throw std::invalid_argument("empirical loss must be nonnegative");
  if (epoch_length < 1) throw std::invalid_argument("epoch length must be >= 1");
  const double slack = consts.C * consts.t_log / static_cast<double>(epoch_length);
  return d_hat + 6.0 * (std::sqrt(slack * d_hat) + slack);
}

double next_step_size(const BallDomain<double>& domain, double gamma, std::size_t next_length,
                      double ell_hat, double cap_factor) {
  if (next_length < 1) throw std::invalid_argument("epoch length must be >= 1");
  const double cap = cap_factor / gamma;
  if (!(ell_hat > 0.0)) return cap;
  const double tuned = domain.radius() / (2.0 * std::sqrt(gamma * static_cast<double>(next_length) * ell_hat));
  return std::min(tuned, cap);
}

RunResult run_adaptive(const Task& task, const SmoothLoss<double>& loss,
                       const BallDomain<double>& domain, const ScheduleConfig& schedule,
                       std::uint64_t seed, const ReferenceOptimum* reference) {
  schedule.validate();
  if (domain.dim() != task.dim()) throw std::invalid_argument("domain and task dimensions differ");

  RunResult result;
  result.schedule = schedule;
  result.consts = bound_constants(loss, domain, schedule.delta, schedule.epochs);
  const double gamma = loss.gamma();

  TaskSampler sampler(task, seed);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(task.dim());
  double eta = next_step_size(domain, gamma, schedule.epoch_length(1), result.consts.C,
                              schedule.eta_cap_factor);

  for (std::size_t k = 1; k <= schedule.epochs; ++k) {
    const std::size_t length = schedule.epoch_length(k);
    const auto indices = sampler.draw(length);
    EpochOutput<double> out;
    try {
      out = run_epoch(start, as_examples(task, indices), loss, eta, domain);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(k) + ": " + e.what());
    }

    EpochRecord rec{k, length, eta, out.d_hat, surrogate(out.d_hat, result.consts, length), out.w_avg, {}};
    if (reference) rec.excess = exact_expected_loss(task, loss, out.w_avg) - reference->loss_star;
    if (k < schedule.epochs)
      eta = next_step_size(domain, gamma, schedule.epoch_length(k + 1), rec.ell_hat, schedule.eta_cap_factor);
    if (schedule.warm_start) start = out.w_avg;
    result.epochs.push_back(std::move(rec));
  }

  result.w_hat = result.epochs.back().w_avg;
  if (reference) result.excess = result.epochs.back().excess;
  return result;
}

}  // namespace smoothstep
