#pragma once

#include <cstddef>
#include <cstdint>
#include <ranges>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "smoothstep/ball.hpp"
#include "smoothstep/loss.hpp"
#include "smoothstep/random.hpp"

namespace smoothstep {

/// One support point of a finite data distribution.
struct Atom {
  Eigen::VectorXd x;  // ||x|| <= 1
  double y;           // +1 or -1
  double p;           // probability mass
};

/**
 * Finite-support distribution over labeled examples. Expected losses are
 * exact sums over the atoms.
 *
 * Invariants (checked on construction): every atom has dimension `dim`,
 * ||x|| <= 1 (1e-12 slack), y in {-1, +1}, p >= 0, and probabilities sum
 * to 1 within 1e-12.
 */
class Task {
 public:
  Task(Eigen::Index dim, std::vector<Atom> atoms);

  /// Linearly separable with margin: some unit u has y u'x >= margin on every
  /// atom, so w = u / margin has zero hinge-type loss once R >= 1 / margin.
  static Task separable(Eigen::Index dim, double margin, std::size_t k_atoms, std::uint64_t seed);

  /// k_atoms base points labeled by a random halfspace; each label is
  /// flipped with probability flip_prob, giving 2 k_atoms atoms.
  static Task noisy(Eigen::Index dim, double flip_prob, std::size_t k_atoms, std::uint64_t seed);

  Eigen::Index dim() const noexcept { return dim_; }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  double max_feature_norm() const noexcept { return max_norm_; }

  /// Atom index for a uniform draw u in [0, 1).
  std::size_t locate(double u) const;

 private:
  Eigen::Index dim_;
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  double max_norm_ = 0.0;
};

struct Example {
  Eigen::VectorXd x;
  double y;
};

/// Non-owning view of an atom's (x, y); valid while the Task lives.
struct ExampleRef {
  const Eigen::VectorXd& x;
  double y;
};

/// Deterministic i.i.d. stream of atoms.
class TaskSampler {
 public:
  TaskSampler(const Task& task, std::uint64_t seed) : task_(&task), rng_(seed) {}

  std::size_t next_index() { return task_->locate(uniform01(rng_)); }

  ExampleRef next() {
    const Atom& a = task_->atoms()[next_index()];
    return {a.x, a.y};
  }

  /// Next `count` atom indices.
  std::vector<std::size_t> draw(std::size_t count);

  const Task& task() const noexcept { return *task_; }

 private:
  const Task* task_;
  Rng rng_;
};

/// Lazily maps atom indices to ExampleRefs, for feeding run_epoch.
inline auto as_examples(const Task& task, const std::vector<std::size_t>& indices) {
  return indices | std::views::transform([&task](std::size_t i) {
           const Atom& a = task.atoms()[i];
           return ExampleRef{a.x, a.y};
         });
}

std::vector<Example> sample(const Task& task, std::size_t count, std::uint64_t seed);

/// sum_atoms p phi(y w'x).
double exact_expected_loss(const Task& task, const SmoothLoss<double>& loss, const Eigen::VectorXd& w);

Eigen::VectorXd exact_expected_gradient(const Task& task, const SmoothLoss<double>& loss,
                                        const Eigen::VectorXd& w);

struct MonteCarloEstimate {
  double mean;
  double standard_error;  // sample standard deviation / sqrt(n)
  std::size_t draws;
};

MonteCarloEstimate mc_expected_loss(const Task& task, const SmoothLoss<double>& loss,
                                    const Eigen::VectorXd& w, std::size_t n, std::uint64_t seed);

struct ReferenceOptimum {
  Eigen::VectorXd w_star;
  double loss_star;
  double tol;                     // requested gradient-mapping tolerance
  double gradient_mapping_norm;   // achieved
  std::size_t iterations;
};

/**
 * Minimizes the exact expected loss over the ball by projected gradient
 * descent with step 1 / (gamma max||x||^2), starting at 0, until the
 * gradient mapping norm is <= tol. Throws ConvergenceError after
 * `max_iterations`.
 */
ReferenceOptimum best_in_ball(const Task& task, const SmoothLoss<double>& loss,
                              const BallDomain<double>& domain, double tol,
                              std::size_t max_iterations = 100000);

// JSON schema: {"dim": d, "atoms": [{"x": [..d..], "y": +-1, "p": prob}, ...]}
nlohmann::json task_to_json(const Task& task);
Task task_from_json(const nlohmann::json& doc);

}  // namespace smoothstep
