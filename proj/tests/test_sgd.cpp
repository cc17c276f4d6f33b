#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smoothstep/sgd.hpp"
#include "smoothstep/task.hpp"

using namespace smoothstep;
using Loss = SmoothLoss<double>;

namespace {

Eigen::VectorXd filled(Eigen::Index n, double v) { return Eigen::VectorXd::Constant(n, v); }

std::vector<Example> stream_1d(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({filled(1, xs[i]), ys[i]});
  return out;
}

}  // namespace

TEST(SgdStep, FlatRegionLeavesIterate) {
  const BallDomain<double> domain(3.0, 2);
  auto s = SgdState<double>::start(Eigen::Vector2d(2.0, 0.0));
  s = step(std::move(s), Eigen::Vector2d(1.0, 0.0), 1.0, Loss::squared_hinge(), 0.5, domain);
  EXPECT_EQ(s.w, Eigen::VectorXd(Eigen::Vector2d(2.0, 0.0)));
  EXPECT_EQ(s.step, 1u);
  EXPECT_EQ(s.sum_inst_loss, 0.0);
}

TEST(SgdStep, LogisticFromZero) {
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(2, 0);
  auto s = step(SgdState<double>::start(filled(2, 0.0)), e1, 1.0, Loss::logistic(), 1.0,
                BallDomain<double>(1.0, 2));
  EXPECT_NEAR((s.w - 0.5 * e1).norm(), 0.0, 1e-15);
  EXPECT_NEAR(s.sum_inst_loss, std::log(2.0), 1e-15);

  auto clipped = step(SgdState<double>::start(filled(2, 0.0)), e1, 1.0, Loss::logistic(), 1.0,
                      BallDomain<double>(0.25, 2));
  EXPECT_NEAR((clipped.w - 0.25 * e1).norm(), 0.0, 1e-15);
}

TEST(SgdStep, Errors) {
  const BallDomain<double> domain(1.0, 1);
  const Eigen::VectorXd x = filled(1, 1.0);
  auto s = SgdState<double>::start(filled(1, 0.0));
  EXPECT_THROW(step(s, x, 1.0, Loss::logistic(), 0.0, domain), std::invalid_argument);
  const Eigen::VectorXd bad = Eigen::VectorXd::Constant(1, std::numeric_limits<double>::quiet_NaN());
  s.w[0] = 0.5;
  try {
    step(s, bad, 1.0, Loss::logistic(), 0.1, domain);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(RunEpoch, SingleStep) {
  const auto ex = stream_1d({0.7}, {-1.0});
  const Eigen::VectorXd w0 = filled(1, 0.3);
  const auto out = run_epoch(w0, ex, Loss::logistic(), 0.2, BallDomain<double>(1.0, 1));
  EXPECT_EQ(out.w_avg, w0);
  EXPECT_EQ(out.steps, 1u);
  EXPECT_NEAR(out.d_hat, oracle::logistic(-0.21), 1e-15);
}

TEST(RunEpoch, AllFlatStream) {
  const auto ex = stream_1d({1.0, 0.9, 0.8, 1.0}, {1.0, 1.0, 1.0, 1.0});
  const Eigen::VectorXd w0 = filled(1, 2.0);
  const auto out = run_epoch(w0, ex, Loss::squared_hinge(), 0.3, BallDomain<double>(2.0, 1));
  EXPECT_EQ(out.w_avg, w0);
  EXPECT_EQ(out.d_hat, 0.0);
}

TEST(RunEpoch, MatchesScalarOracle) {
  const std::vector<double> xs = {0.8, -0.5, 1.0}, ys = {1.0, 1.0, -1.0};
  const auto out = run_epoch(filled(1, 0.0), stream_1d(xs, ys), Loss::logistic(), 0.1,
                             BallDomain<double>(1.0, 1));
  const auto ref = oracle::scalar_sgd(0.0, xs, ys, oracle::logistic, oracle::logistic_slope, 0.1, 1.0);
  EXPECT_NEAR(out.w_avg[0], ref.average, 1e-12);
  EXPECT_NEAR(out.d_hat, ref.mean_loss, 1e-12);
  EXPECT_NEAR(out.w_final[0], ref.last, 1e-12);
}

TEST(RunEpoch, ClippingMatchesScalarOracle) {
  std::vector<double> xs, ys;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    xs.push_back(2.0 * uniform01(rng) - 1.0);
    ys.push_back(uniform01(rng) < 0.8 ? 1.0 : -1.0);
  }
  const auto sq = Loss::squared_hinge();
  const auto out = run_epoch(filled(1, 0.0), stream_1d(xs, ys), sq, 0.4, BallDomain<double>(0.5, 1));
  const auto ref = oracle::scalar_sgd(
      0.0, xs, ys, [](double z) { return z < 1 ? (1 - z) * (1 - z) : 0.0; },
      [](double z) { return z < 1 ? -2 * (1 - z) : 0.0; }, 0.4, 0.5);
  EXPECT_NEAR(out.w_avg[0], ref.average, 1e-12);
  EXPECT_NEAR(out.d_hat, ref.mean_loss, 1e-12);
}

TEST(RunEpoch, Preconditions) {
  const auto ex = stream_1d({0.5}, {1.0});
  const BallDomain<double> domain(1.0, 1);
  EXPECT_THROW(run_epoch(filled(1, 2.0), ex, Loss::logistic(), 0.1, domain),
               std::invalid_argument);
  EXPECT_THROW(run_epoch(filled(1, 0.0), std::vector<Example>{}, Loss::logistic(), 0.1, domain),
               std::invalid_argument);
}

TEST(RunEpoch, AverageAndBallInvariants) {
  const Task task = Task::noisy(4, 0.2, 8, 3);
  const BallDomain<double> domain(0.7, 4);
  const auto draws = sample(task, 2000, 17);
  Trajectory<double> trace;
  const auto out = run_epoch(filled(4, 0.0), draws, Loss::huber_hinge(), 0.9, domain, &trace);
  ASSERT_EQ(trace.size(), 2000u);
  Eigen::VectorXd sum = filled(4, 0.0);
  double loss_sum = 0.0;
  for (const auto& rec : trace) {
    ASSERT_LE(rec.w_after.norm(), 0.7 * (1 + 1e-12));
    sum += rec.w_before;
    loss_sum += Loss::huber_hinge().value(rec.y * rec.w_before.dot(rec.x));
  }
  EXPECT_LE((out.w_avg - sum / 2000.0).norm(), 1e-12);
  EXPECT_NEAR(out.d_hat, loss_sum / 2000.0, 1e-12);
  EXPECT_LE(out.w_avg.norm(), 0.7 * (1 + 1e-12));
  EXPECT_EQ(out.w_final, trace.back().w_after);
}

TEST(RunEpoch, Deterministic) {
  const Task task = Task::noisy(3, 0.1, 5, 1);
  const BallDomain<double> domain(1.0, 3);
  const auto draws = sample(task, 500, 3);
  const auto a = run_epoch(filled(3, 0.0), draws, Loss::logistic(), 0.5, domain);
  const auto b = run_epoch(filled(3, 0.0), draws, Loss::logistic(), 0.5, domain);
  EXPECT_EQ(a.w_avg, b.w_avg);
  EXPECT_EQ(a.d_hat, b.d_hat);
  EXPECT_EQ(a.w_final, b.w_final);
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(12);
  for (const auto& loss : Loss::all()) {
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd w(3), x(3);
      for (int j = 0; j < 3; ++j) {
        w[j] = 2.0 * standard_normal(rng);
        x[j] = standard_normal(rng);
      }
      const double y = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      const Eigen::VectorXd g = instantaneous_gradient(loss, w, x, y);
      for (int j = 0; j < 3; ++j) {
        const double fd = oracle::central_difference(
            [&](double u) {
              Eigen::VectorXd v = w;
              v[j] = u;
              return loss.value(y * v.dot(x));
            },
            w[j]);
        ASSERT_NEAR(g[j], fd, 1e-6) << loss.name();
      }
    }
  }
}

TEST(PerStepInequality, TrivialSteps) {
  const BallDomain<double> domain(2.0, 1);
  const Eigen::VectorXd w = filled(1, 0.4);
  Trajectory<double> tr;
  run_epoch(w, stream_1d({1.0}, {-1.0}), Loss::logistic(), 0.3, domain, &tr);
  EXPECT_TRUE(check_per_step_inequality(tr, Loss::logistic(), w).passed);

  Trajectory<double> flat;
  run_epoch(filled(1, 2.0), stream_1d({1.0}, {1.0}), Loss::squared_hinge(), 0.3, domain, &flat);
  const auto r = check_per_step_inequality(flat, Loss::squared_hinge(), filled(1, 0.5));
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.max_violation_gradient_form, 0.0);
}

TEST(PerStepInequality, DetectsWrongUpdate) {
  // A step that moves away from the reference violates the inequality.
  Trajectory<double> tr{{filled(1, 0.0), filled(1, -1.0),
                         filled(1, 1.0), 1.0, 0.1}};
  EXPECT_FALSE(check_per_step_inequality(tr, Loss::logistic(), filled(1, 1.0)).passed);
}

TEST(PerStepInequality, HoldsOnNoisyRun) {
  const Task task = Task::noisy(5, 0.2, 10, 11);
  const BallDomain<double> domain(1.0, 5);
  for (const auto& loss : Loss::all()) {
    const auto ref = best_in_ball(task, loss, domain, 1e-9);
    Trajectory<double> tr;
    run_epoch(filled(5, 0.0), sample(task, 10000, 4), loss, 1.0 / (6.0 * loss.gamma()), domain, &tr);
    const auto r = check_per_step_inequality(tr, loss, ref.w_star);
    EXPECT_TRUE(r.passed) << loss.name() << " worst step " << r.worst_step;
    EXPECT_EQ(r.steps, 10000u);
  }
}
