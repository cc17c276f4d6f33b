#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smoothstep/harness.hpp"
#include "smoothstep/schedule.hpp"

using namespace smoothstep;
using Loss = SmoothLoss<double>;

TEST(BoundConstants, Examples) {
  const auto logistic = bound_constants(Loss::logistic(), BallDomain<double>(1.0, 3), 0.05, 1);
  EXPECT_NEAR(logistic.lipschitz, oracle::sigmoid(1.0), 1e-15);
  // sigma(1) + ln 2, mpmath
  EXPECT_NEAR(logistic.C, 1.4242057591899502, 1e-15);

  const auto sq = bound_constants(Loss::squared_hinge(), BallDomain<double>(1.0, 3), std::exp(-1.0), 1);
  EXPECT_DOUBLE_EQ(sq.C, 5.0);
  EXPECT_NEAR(sq.t_log, 2.4, 1e-15);

  for (const auto& loss : Loss::all())
    for (double R : {0.1, 1.0, 5.0}) {
      const auto c = bound_constants(loss, BallDomain<double>(R, 2), 0.1, 4);
      EXPECT_GE(c.C, loss.value_at_zero());
      EXPECT_GT(c.t_log, 0.0);
    }
  EXPECT_THROW(bound_constants(Loss::logistic(), BallDomain<double>(1.0, 1), 1.0, 1), std::invalid_argument);
}

TEST(Surrogate, Examples) {
  const BoundConstants c{0.0, 1.424206, 8.0};
  EXPECT_NEAR(surrogate(0.0, c, 1024), 6.0 * 1.424206 * 8.0 / 1024.0, 1e-15);

  const double a = c.C * c.t_log / 1024.0;
  EXPECT_NEAR(surrogate(a, c, 1024), 13.0 * a, 1e-14);

  // exact value by mpmath; the rounded hand evaluation gives 0.633214
  EXPECT_NEAR(surrogate(0.25, c, 1024), 0.63320788957576847, 1e-14);
  EXPECT_NEAR(surrogate(0.25, c, 1024), 0.633214, 1e-5);

  EXPECT_THROW(surrogate(-0.1, c, 10), std::invalid_argument);
  EXPECT_THROW(surrogate(0.1, c, 0), std::invalid_argument);
}

TEST(NextStepSize, Examples) {
  EXPECT_NEAR(next_step_size(BallDomain<double>(1.0, 1), 1.0, 100, 0.25), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(next_step_size(BallDomain<double>(1.0, 1), 1.0, 1, 1e-6), 1.0 / 6.0);
  // 1 / sqrt(512), mpmath
  EXPECT_NEAR(next_step_size(BallDomain<double>(2.0, 1), 2.0, 512, 0.5), 0.044194173824159220, 1e-15);
  EXPECT_DOUBLE_EQ(next_step_size(BallDomain<double>(2.0, 1), 2.0, 512, 0.0), 1.0 / 12.0);
}

TEST(Schedule, EpochsForBudget) {
  EXPECT_EQ(ScheduleConfig::epochs_for_budget(1, 1), 1u);
  EXPECT_EQ(ScheduleConfig::epochs_for_budget(2, 1), 1u);
  EXPECT_EQ(ScheduleConfig::epochs_for_budget(3, 1), 2u);
  EXPECT_EQ(ScheduleConfig::epochs_for_budget(1024, 8), 7u);  // 8 * 127 = 1016
  EXPECT_EQ(ScheduleConfig::epochs_for_budget(7, 8), 0u);
  for (std::size_t n : {1u, 5u, 100u, 1000u, 65536u})
    for (std::size_t t1 : {1u, 3u, 8u}) {
      const std::size_t m = ScheduleConfig::epochs_for_budget(n, t1);
      ScheduleConfig s;
      s.first_epoch_length = t1;
      s.epochs = m + 1;
      EXPECT_GT(s.total_steps(), n);
      if (m >= 1) {
        s.epochs = m;
        EXPECT_LE(s.total_steps(), n);
      }
    }
}

TEST(RunAdaptive, SingleEpoch) {
  const Task task = Task::noisy(3, 0.2, 4, 2);
  const BallDomain<double> domain(1.0, 3);
  ScheduleConfig s;
  s.first_epoch_length = 50;
  s.epochs = 1;
  const auto run = run_adaptive(task, Loss::logistic(), domain, s, 9);
  ASSERT_EQ(run.epochs.size(), 1u);
  EXPECT_DOUBLE_EQ(run.epochs[0].eta, next_step_size(domain, 0.25, 50, run.consts.C));
  EXPECT_EQ(run.w_hat, run.epochs[0].w_avg);
  EXPECT_FALSE(run.excess.has_value());
}

TEST(RunAdaptive, MatchesScalarTraceOnSingleAtom) {
  const double x = 0.8, R = 1.0, delta = 0.1;
  const Task task(1, {{Eigen::VectorXd::Constant(1, x), 1.0, 1.0}});
  ScheduleConfig s;
  s.first_epoch_length = 2;
  s.epochs = 4;
  s.delta = delta;
  const auto run = run_adaptive(task, Loss::logistic(), BallDomain<double>(R, 1), s, 1);

  const double gamma = 0.25;
  const double C = oracle::sigmoid(1.0) * R + std::log(2.0);
  const double t = std::log(1.0 / delta) + std::log(4.0) + 1.0 + R * R * gamma / C;
  double eta = std::min(R / (2.0 * std::sqrt(gamma * 2.0 * C)), 1.0 / (6.0 * gamma));
  ASSERT_EQ(run.epochs.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t T = std::size_t{2} << k;
    const std::vector<double> xs(T, x), ys(T, 1.0);
    const auto tr = oracle::scalar_sgd(0.0, xs, ys, oracle::logistic, oracle::logistic_slope, eta, R);
    EXPECT_NEAR(run.epochs[k].eta, eta, 1e-15) << k;
    EXPECT_NEAR(run.epochs[k].d_hat, tr.mean_loss, 1e-12) << k;
    EXPECT_NEAR(run.epochs[k].w_avg[0], tr.average, 1e-12) << k;
    const double slack = C * t / T;
    const double ell = tr.mean_loss + 6.0 * (std::sqrt(slack * tr.mean_loss) + slack);
    EXPECT_NEAR(run.epochs[k].ell_hat, ell, 1e-12) << k;
    eta = std::min(R / (2.0 * std::sqrt(gamma * 2.0 * T * ell)), 1.0 / (6.0 * gamma));
  }
}

TEST(RunAdaptive, Invariants) {
  const Task task = Task::noisy(5, 0.2, 10, 11);
  for (const auto& loss : Loss::all()) {
    const BallDomain<double> domain(1.5, 5);
    ScheduleConfig s;
    s.first_epoch_length = 4;
    s.epochs = 9;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto run = run_adaptive(task, loss, domain, s, seed);
      for (const auto& e : run.epochs) {
        EXPECT_GE(e.ell_hat, e.d_hat);
        EXPECT_LE(e.eta, 1.0 / (6.0 * loss.gamma()) * (1 + 1e-15));
        EXPECT_LE(e.w_avg.norm(), 1.5 * (1 + 1e-12));
        EXPECT_GE(e.d_hat, 0.0);
      }
    }
  }
}

TEST(RunAdaptive, DeterministicAndSeedSensitive) {
  const Task task = Task::noisy(3, 0.3, 6, 8);
  const BallDomain<double> domain(1.0, 3);
  ScheduleConfig s;
  s.first_epoch_length = 8;
  s.epochs = 5;
  const auto a = run_adaptive(task, Loss::logistic(), domain, s, 4);
  const auto b = run_adaptive(task, Loss::logistic(), domain, s, 4);
  const auto c = run_adaptive(task, Loss::logistic(), domain, s, 5);
  EXPECT_EQ(a.w_hat, b.w_hat);
  EXPECT_NE(a.w_hat, c.w_hat);
}

TEST(RunAdaptive, WarmStartChangesStart) {
  const Task task = Task::noisy(3, 0.1, 6, 8);
  const BallDomain<double> domain(1.0, 3);
  ScheduleConfig s;
  s.first_epoch_length = 16;
  s.epochs = 3;
  const auto cold = run_adaptive(task, Loss::logistic(), domain, s, 4);
  s.warm_start = true;
  const auto warm = run_adaptive(task, Loss::logistic(), domain, s, 4);
  EXPECT_EQ(cold.epochs[0].w_avg, warm.epochs[0].w_avg);
  EXPECT_NE(cold.epochs[1].w_avg, warm.epochs[1].w_avg);
}

TEST(RunAdaptive, SeparableExcessDecreases) {
  const Task task = Task::separable(5, 0.5, 20, 7);
  const BallDomain<double> domain(2.0, 5);
  const auto loss = Loss::logistic();
  const auto ref = best_in_ball(task, loss, domain, 1e-10);
  ScheduleConfig s;
  s.first_epoch_length = 64;
  s.epochs = 8;
  std::vector<double> final_excess, third_excess;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto run = run_adaptive(task, loss, domain, s, seed, &ref);
    third_excess.push_back(*run.epochs[2].excess);
    final_excess.push_back(*run.excess);
  }
  EXPECT_LE(quantile(final_excess, 0.5), quantile(third_excess, 0.5));
}

TEST(RunAdaptive, PerEpochGuaranteeShape) {
  // median over trials of D_hat_k - l(w*) <= K' (Ct/T_k + sqrt(Ct/T_k l(w*))) with K' <= 20
  const Task task = Task::noisy(5, 0.2, 10, 11);
  const BallDomain<double> domain(1.0, 5);
  const auto loss = Loss::logistic();
  const auto ref = best_in_ball(task, loss, domain, 1e-10);
  ScheduleConfig s;
  s.first_epoch_length = 8;
  s.epochs = 10;
  const std::size_t trials = 100;
  std::vector<std::vector<double>> gaps(s.epochs);
  BoundConstants consts{};
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const auto run = run_adaptive(task, loss, domain, s, seed, &ref);
    consts = run.consts;
    for (std::size_t k = 0; k < s.epochs; ++k) gaps[k].push_back(run.epochs[k].d_hat - ref.loss_star);
  }
  double fitted = 0.0;
  for (std::size_t k = 0; k < s.epochs; ++k) {
    const double slack = consts.C * consts.t_log / static_cast<double>(s.epoch_length(k + 1));
    fitted = std::max(fitted, quantile(gaps[k], 0.5) / (slack + std::sqrt(slack * ref.loss_star)));
  }
  EXPECT_LE(fitted, 20.0);
}

TEST(RunAdaptive, RejectsBadSchedule) {
  const Task task = Task::noisy(2, 0.2, 2, 1);
  ScheduleConfig s;
  s.epochs = 0;
  EXPECT_THROW(run_adaptive(task, Loss::logistic(), BallDomain<double>(1.0, 2), s, 1), std::invalid_argument);
  s.epochs = 1;
  EXPECT_THROW(run_adaptive(task, Loss::logistic(), BallDomain<double>(1.0, 3), s, 1), std::invalid_argument);
}
