#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <ranges>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "smoothstep/ball.hpp"
#include "smoothstep/errors.hpp"
#include "smoothstep/loss.hpp"
#include "smoothstep/types.hpp"

namespace smoothstep {

/**
 * Running state of one projected SGD epoch.
 *
 * `sum_w` and `sum_inst_loss` accumulate the iterate and the instantaneous
 * loss l_t(w_t) *before* each update, so after T steps they cover w_1..w_T.
 */
template <typename Scalar>
struct SgdState {
  Vector<Scalar> w;
  std::size_t step = 0;
  Vector<Scalar> sum_w;
  Scalar sum_inst_loss = Scalar(0);

  static SgdState start(Vector<Scalar> w0) {
    SgdState s;
    s.sum_w = Vector<Scalar>::Zero(w0.size());
    s.w = std::move(w0);
    return s;
  }

  Vector<Scalar> average() const { return sum_w / static_cast<Scalar>(step); }
  Scalar mean_inst_loss() const { return sum_inst_loss / static_cast<Scalar>(step); }
};

/// One instrumented update w_t -> w_{t+1} on example (x, y).
template <typename Scalar>
struct StepRecord {
  Vector<Scalar> w_before;
  Vector<Scalar> w_after;
  Vector<Scalar> x;
  Scalar y;
  Scalar eta;
};

template <typename Scalar>
using Trajectory = std::vector<StepRecord<Scalar>>;

template <typename Scalar>
struct EpochOutput {
  Vector<Scalar> w_avg;    // mean of w_1..w_T
  Scalar d_hat;            // mean of l_t(w_t)
  Vector<Scalar> w_final;  // w_{T+1}
  std::size_t steps;
};

/// Gradient of w -> phi(y w'x): phi'(y w'x) y x.
template <typename Scalar, typename DerivedW, typename DerivedX>
Vector<Scalar> instantaneous_gradient(const SmoothLoss<Scalar>& loss,
                                      const Eigen::MatrixBase<DerivedW>& w,
                                      const Eigen::MatrixBase<DerivedX>& x, Scalar y) {
  return (loss.derivative(y * w.dot(x)) * y) * x;
}

namespace detail {
template <typename Scalar, typename DerivedX>
[[noreturn]] void throw_nonfinite_step(std::size_t t, const Vector<Scalar>& w,
                                       const Eigen::MatrixBase<DerivedX>& x, Scalar y) {
  const Eigen::IOFormat row(Eigen::StreamPrecision, Eigen::DontAlignCols, ", ", ", ", "", "", "[", "]");
  std::ostringstream os;
  os << "non-finite gradient at step " << t << ": w=" << w.transpose().format(row)
     << " x=" << x.transpose().format(row) << " y=" << y;
  throw NumericError(os.str());
}
}  // namespace detail

/// w' = project(w - eta grad l_t(w)); sums are updated with w_t and l_t(w_t).
template <typename Scalar, typename DerivedX>
SgdState<Scalar> step(SgdState<Scalar> state, const Eigen::MatrixBase<DerivedX>& x, Scalar y,
                      const SmoothLoss<Scalar>& loss, Scalar eta,
                      const BallDomain<Scalar>& domain, Trajectory<Scalar>* trace = nullptr) {
  if (!(eta > Scalar(0))) throw std::invalid_argument("step size must be positive");
  const Scalar margin = y * state.w.dot(x);
  const Scalar inst_loss = loss.value(margin);
  const Scalar slope = loss.derivative(margin);
  if (!std::isfinite(margin) || !std::isfinite(inst_loss) || !std::isfinite(slope))
    detail::throw_nonfinite_step(state.step + 1, state.w, x, y);

  Vector<Scalar> next = project(domain, state.w - (eta * slope * y) * x);
  if (trace) trace->push_back({state.w, next, x, y, eta});

  state.sum_w += state.w;
  state.sum_inst_loss += inst_loss;
  state.w = std::move(next);
  ++state.step;
  return state;
}

/**
 * Runs one epoch of projected SGD from `w0` over `examples`, where each
 * element exposes `.x` (an Eigen vector) and `.y` (a +-1 label).
 * `step_size(t)` returns eta for the 1-based step t.
 */
template <typename Scalar, std::ranges::input_range Examples, typename StepSize>
  requires std::invocable<const StepSize&, std::size_t>
EpochOutput<Scalar> run_epoch(const Vector<Scalar>& w0, Examples&& examples,
                              const SmoothLoss<Scalar>& loss, const StepSize& step_size,
                              const BallDomain<Scalar>& domain,
                              Trajectory<Scalar>* trace = nullptr) {
  if (!contains(domain, w0)) throw std::invalid_argument("initial iterate lies outside the ball");
  auto state = SgdState<Scalar>::start(w0);
  for (auto&& ex : examples) {
    const Scalar eta = static_cast<Scalar>(step_size(state.step + 1));
    state = step(std::move(state), ex.x, static_cast<Scalar>(ex.y), loss, eta, domain, trace);
  }
  if (state.step == 0) throw std::invalid_argument("an epoch needs at least one example");
  return {state.average(), state.mean_inst_loss(), state.w, state.step};
}

template <typename Scalar, std::ranges::input_range Examples>
EpochOutput<Scalar> run_epoch(const Vector<Scalar>& w0, Examples&& examples,
                              const SmoothLoss<Scalar>& loss, Scalar eta,
                              const BallDomain<Scalar>& domain,
                              Trajectory<Scalar>* trace = nullptr) {
  return run_epoch(w0, std::forward<Examples>(examples), loss,
                   [eta](std::size_t) { return eta; }, domain, trace);
}

template <typename Scalar>
struct InequalityReport {
  // (lhs - rhs) / scale, maximized over steps; scale >= 1 is the sum of the
  // magnitudes of the terms involved.
  Scalar max_violation_gradient_form = -std::numeric_limits<Scalar>::infinity();
  Scalar max_violation_self_bounded_form = -std::numeric_limits<Scalar>::infinity();
  std::size_t worst_step = 0;
  std::size_t steps = 0;
  bool passed = false;
};

/**
 * Checks, at every recorded step,
 *   l_t(w_t) - l_t(w_ref) <= (|w_t - w_ref|^2 - |w_{t+1} - w_ref|^2) / (2 eta) + eta/2 |grad|^2
 * and the same with eta/2 |grad|^2 replaced by 2 eta gamma l_t(w_t).
 * Passes iff both relative violations stay <= 1e-9.
 */
template <typename Scalar>
InequalityReport<Scalar> check_per_step_inequality(const Trajectory<Scalar>& trajectory,
                                                   const SmoothLoss<Scalar>& loss,
                                                   const Vector<Scalar>& w_ref) {
  InequalityReport<Scalar> report;
  report.steps = trajectory.size();
  const Scalar gamma = loss.gamma();
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const auto& rec = trajectory[t];
    const Scalar loss_t = loss.value(rec.y * rec.w_before.dot(rec.x));
    const Scalar loss_ref = loss.value(rec.y * w_ref.dot(rec.x));
    const Scalar before = (rec.w_before - w_ref).squaredNorm() / (Scalar(2) * rec.eta);
    const Scalar after = (rec.w_after - w_ref).squaredNorm() / (Scalar(2) * rec.eta);
    const Scalar grad_term =
        rec.eta / Scalar(2) * instantaneous_gradient(loss, rec.w_before, rec.x, rec.y).squaredNorm();
    const Scalar bounded_term = Scalar(2) * rec.eta * gamma * loss_t;

    const Scalar lhs = loss_t - loss_ref;
    const Scalar base = std::abs(loss_t) + std::abs(loss_ref) + before + after;
    const Scalar v1 = (lhs - (before - after + grad_term)) / std::max(Scalar(1), base + grad_term);
    const Scalar v2 = (lhs - (before - after + bounded_term)) / std::max(Scalar(1), base + bounded_term);

    report.max_violation_gradient_form = std::max(report.max_violation_gradient_form, v1);
    report.max_violation_self_bounded_form = std::max(report.max_violation_self_bounded_form, v2);
    if (std::max(v1, v2) > worst) {
      worst = std::max(v1, v2);
      report.worst_step = t + 1;
    }
  }
  report.passed = trajectory.empty() || worst <= Scalar(1e-9);
  return report;
}

}  // namespace smoothstep
