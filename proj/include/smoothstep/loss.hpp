#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "smoothstep/errors.hpp"

namespace smoothstep {

enum class LossKind { Logistic, SquaredHinge, HuberHinge };

/**
 * A nonnegative, convex, gamma-smooth margin loss phi(z).
 *
 * Three losses ship:
 *   logistic     phi(z) = ln(1 + e^{-z})                  gamma = 1/4
 *   sq_hinge     phi(z) = max(0, 1 - z)^2                 gamma = 2
 *   huber_hinge  phi(z) = 1/2 - z        for z <= 0
 *                         (1 - z)^2 / 2  for 0 < z <= 1
 *                         0              for z > 1        gamma = 1
 *
 * Values are immutable after construction.
 */
template <typename Scalar>
class SmoothLoss {
 public:
  static SmoothLoss logistic() { return SmoothLoss(LossKind::Logistic); }
  static SmoothLoss squared_hinge() { return SmoothLoss(LossKind::SquaredHinge); }
  static SmoothLoss huber_hinge() { return SmoothLoss(LossKind::HuberHinge); }

  /// Looks up a loss by its config identifier. Throws std::invalid_argument.
  static SmoothLoss from_name(std::string_view name) {
    for (auto kind : {LossKind::Logistic, LossKind::SquaredHinge, LossKind::HuberHinge}) {
      if (name == identifier(kind)) return SmoothLoss(kind);
    }
    throw std::invalid_argument("unknown loss '" + std::string(name) +
                                "' (expected logistic | sq_hinge | huber_hinge)");
  }

  static std::vector<SmoothLoss> all() {
    return {logistic(), squared_hinge(), huber_hinge()};
  }

  static constexpr std::string_view identifier(LossKind kind) {
    switch (kind) {
      case LossKind::Logistic: return "logistic";
      case LossKind::SquaredHinge: return "sq_hinge";
      case LossKind::HuberHinge: return "huber_hinge";
    }
    return "";
  }

  LossKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return identifier(kind_); }

  Scalar gamma() const noexcept {
    switch (kind_) {
      case LossKind::Logistic: return Scalar(0.25);
      case LossKind::SquaredHinge: return Scalar(2);
      case LossKind::HuberHinge: return Scalar(1);
    }
    return Scalar(0);
  }

  // Unchecked evaluation; see eval()/deriv() for the checked entry points.
  Scalar value(Scalar z) const noexcept {
    switch (kind_) {
      case LossKind::Logistic:
        // log1p branch keeps full relative precision for large |z|
        return z >= Scalar(0) ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
      case LossKind::SquaredHinge: {
        const Scalar r = std::max(Scalar(0), Scalar(1) - z);
        return r * r;
      }
      case LossKind::HuberHinge:
        if (z <= Scalar(0)) return Scalar(0.5) - z;
        if (z <= Scalar(1)) return Scalar(0.5) * (Scalar(1) - z) * (Scalar(1) - z);
        return Scalar(0);
    }
    return Scalar(0);
  }

  Scalar derivative(Scalar z) const noexcept {
    switch (kind_) {
      case LossKind::Logistic:
        // -sigmoid(-z)
        if (z >= Scalar(0)) {
          const Scalar e = std::exp(-z);
          return -e / (Scalar(1) + e);
        }
        return Scalar(-1) / (Scalar(1) + std::exp(z));
      case LossKind::SquaredHinge:
        return Scalar(-2) * std::max(Scalar(0), Scalar(1) - z);
      case LossKind::HuberHinge:
        if (z <= Scalar(0)) return Scalar(-1);
        if (z <= Scalar(1)) return z - Scalar(1);
        return Scalar(0);
    }
    return Scalar(0);
  }

  Scalar value_at_zero() const noexcept { return value(Scalar(0)); }

  friend bool operator==(const SmoothLoss&, const SmoothLoss&) = default;

 private:
  explicit SmoothLoss(LossKind kind) : kind_(kind) {}

  LossKind kind_;
};

namespace detail {
template <typename Scalar>
void require_finite_margin(Scalar z) {
  if (!std::isfinite(z)) throw DomainError("loss evaluated at a non-finite margin");
}
}  // namespace detail

template <typename Scalar>
Scalar eval(const SmoothLoss<Scalar>& loss, Scalar z) {
  detail::require_finite_margin(z);
  return loss.value(z);
}

template <typename Scalar>
Scalar deriv(const SmoothLoss<Scalar>& loss, Scalar z) {
  detail::require_finite_margin(z);
  return loss.derivative(z);
}

/// Interval of margins y * w'x reachable from the ball: [-R X, R X].
template <typename Scalar>
struct ReachableInterval {
  Scalar lo{0};
  Scalar hi{0};

  static ReachableInterval from_radius(Scalar radius, Scalar max_feature_norm = Scalar(1)) {
    const Scalar h = radius * max_feature_norm;
    return {-h, h};
  }

  bool valid() const noexcept { return lo <= Scalar(0) && Scalar(0) <= hi; }
};

/// Lipschitz constant of phi on the interval. phi' is monotone, so the
/// endpoints attain the maximum of |phi'|.
template <typename Scalar>
Scalar lipschitz_on(const SmoothLoss<Scalar>& loss, const ReachableInterval<Scalar>& interval) {
  if (!interval.valid()) throw DomainError("reachable interval must satisfy lo <= 0 <= hi");
  return std::max(std::abs(loss.derivative(interval.lo)), std::abs(loss.derivative(interval.hi)));
}

template <typename Scalar>
struct PropertyReport {
  Scalar max_value = -std::numeric_limits<Scalar>::infinity();
  Scalar worst_z = Scalar(0);
  bool passed = false;
};

/// max over the grid of |phi'(z)|^2 - 4 gamma phi(z); passes iff <= 1e-12.
template <typename Scalar>
PropertyReport<Scalar> check_self_bounding(const SmoothLoss<Scalar>& loss,
                                           std::span<const Scalar> grid) {
  if (grid.empty()) throw std::invalid_argument("self-bounding check needs a non-empty grid");
  PropertyReport<Scalar> report;
  const Scalar four_gamma = Scalar(4) * loss.gamma();
  for (Scalar z : grid) {
    const Scalar d = loss.derivative(z);
    const Scalar violation = d * d - four_gamma * loss.value(z);
    if (violation > report.max_value) {
      report.max_value = violation;
      report.worst_z = z;
    }
  }
  report.passed = report.max_value <= Scalar(1e-12);
  return report;
}

/**
 * Largest difference quotient |phi'(z) - phi'(z')| / |z - z'| over all
 * distinct grid pairs. After sorting, every pair's quotient is a weighted
 * mean of adjacent quotients, so scanning adjacent pairs gives the exact
 * all-pairs maximum in O(n log n).
 *
 * `worst_z` is the left point of the maximizing adjacent pair.
 */
template <typename Scalar>
PropertyReport<Scalar> check_smoothness(const SmoothLoss<Scalar>& loss,
                                        std::span<const Scalar> grid) {
  std::vector<Scalar> z(grid.begin(), grid.end());
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  if (z.size() < 2) throw std::invalid_argument("smoothness check needs two distinct grid points");

  PropertyReport<Scalar> report;
  Scalar prev = loss.derivative(z[0]);
  for (std::size_t i = 1; i < z.size(); ++i) {
    const Scalar cur = loss.derivative(z[i]);
    const Scalar ratio = std::abs(cur - prev) / (z[i] - z[i - 1]);
    if (ratio > report.max_value) {
      report.max_value = ratio;
      report.worst_z = z[i - 1];
    }
    prev = cur;
  }
  report.passed = report.max_value <= loss.gamma() * (Scalar(1) + Scalar(1e-9));
  return report;
}

/// Evenly spaced grid lo, lo + step, ..., up to hi (inclusive within step/2).
template <typename Scalar>
std::vector<Scalar> margin_grid(Scalar lo, Scalar hi, Scalar step) {
  if (!(step > Scalar(0)) || hi < lo) throw std::invalid_argument("bad grid specification");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + Scalar(0.5))) + 1;
  std::vector<Scalar> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + static_cast<Scalar>(i) * step;
  return grid;
}

}  // namespace smoothstep
