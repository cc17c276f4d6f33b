#include "smoothstep/concentration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "smoothstep/parallel.hpp"
#include "smoothstep/random.hpp"
#include "smoothstep/sgd.hpp"

namespace smoothstep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSqrt2Over3 = std::numbers::sqrt2 / 3.0;

struct PathSummary {
  double max_partial_sum = -std::numeric_limits<double>::infinity();
  double variance_sum = 0.0;
};

PathSummary coin_path(const CoinSource& src, std::size_t length, Rng& rng, std::vector<double>* sink) {
  PathSummary out;
  double s = 0.0;
  std::uint64_t bits = 0;
  int left = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (left == 0) {
      bits = rng();
      left = 64;
    }
    const double x = (bits & 1u) ? src.magnitude : -src.magnitude;
    if (sink) sink->push_back(x);
    s += x;
    bits >>= 1;
    --left;
    out.max_partial_sum = std::max(out.max_partial_sum, s);
  }
  out.variance_sum = static_cast<double>(length) * src.magnitude * src.magnitude;
  return out;
}

PathSummary zero_path(std::size_t length, std::vector<double>* sink) {
  PathSummary out;
  if (sink) sink->assign(length, 0.0);
  if (length > 0) out.max_partial_sum = 0.0;
  return out;
}

PathSummary trajectory_path(const TrajectorySource& src, std::size_t length, Rng& rng,
                            std::vector<double>* sink) {
  const Task& task = *src.task;
  PathSummary out;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(task.dim());
  double s = 0.0;
  for (std::size_t t = 0; t < length; ++t) {
    const double expected = exact_expected_loss(task, src.loss, w);
    out.variance_sum += conditional_variance(task, src.loss, w);
    const Atom& a = task.atoms()[task.locate(uniform01(rng))];
    const double x = expected - src.loss.value(a.y * w.dot(a.x));
    if (sink) sink->push_back(x);
    s += x;
    out.max_partial_sum = std::max(out.max_partial_sum, s);
    w = project(src.domain, w - (src.eta * src.loss.derivative(a.y * w.dot(a.x)) * a.y) * a.x);
  }
  return out;
}

PathSummary generate_path(const MartingaleSpec& spec, std::uint64_t seed, std::size_t trial,
                          std::vector<double>* sink) {
  Rng rng(derive_seed(seed, {trial}));
  return std::visit(
      [&](const auto& src) -> PathSummary {
        using Src = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<Src, CoinSource>) return coin_path(src, spec.length, rng, sink);
        else if constexpr (std::is_same_v<Src, ZeroSource>) return zero_path(spec.length, sink);
        else return trajectory_path(src, spec.length, rng, sink);
      },
      spec.source);
}

TailReport empty_report(std::string label, std::span<const double> t_values) {
  TailReport r;
  r.label = std::move(label);
  r.t_values.assign(t_values.begin(), t_values.end());
  r.t_effective = r.t_values;
  r.thresholds.assign(t_values.size(), kNaN);
  r.exceed_counts.assign(t_values.size(), 0);
  return r;
}

void require_positive_t(std::span<const double> t_values) {
  for (double t : t_values)
    if (!(t > 0.0)) throw std::invalid_argument("tail parameter t must be positive");
}

}  // namespace

double TailReport::empirical(std::size_t i) const {
  return trials == 0 ? 0.0 : static_cast<double>(exceed_counts.at(i)) / static_cast<double>(trials);
}

double TailReport::theoretical(std::size_t i) const { return std::exp(-t_values.at(i)); }

double TailReport::binomial_sigma(std::size_t i) const {
  const double p = theoretical(i);
  return trials == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

bool TailReport::within_bound(std::size_t i, double sigmas) const {
  return empirical(i) <= theoretical(i) + sigmas * binomial_sigma(i);
}

bool TailReport::all_within(double sigmas) const {
  for (std::size_t i = 0; i < t_values.size(); ++i)
    if (!within_bound(i, sigmas)) return false;
  return true;
}

TailReport& TailReport::merge(const TailReport& other) {
  if (other.t_values != t_values) throw std::invalid_argument("cannot merge tail reports over different t grids");
  for (std::size_t i = 0; i < exceed_counts.size(); ++i) exceed_counts[i] += other.exceed_counts[i];
  trials += other.trials;
  return *this;
}

double bernstein_threshold(double nu, double increment_bound, double t) {
  if (!(nu >= 0.0) || !(increment_bound >= 0.0) || !(t > 0.0))
    throw std::invalid_argument("bernstein_threshold needs nu >= 0, K >= 0, t > 0");
  return std::sqrt(2.0 * nu * t) + kSqrt2Over3 * increment_bound * t;
}

TailReport simulate_tail(const MartingaleSpec& spec, std::span<const double> t_values,
                         std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("simulate_tail needs trials >= 1");
  require_positive_t(t_values);

  std::vector<PathSummary> paths(trials);
  parallel_for(trials, [&](std::size_t trial) { paths[trial] = generate_path(spec, seed, trial, nullptr); });

  TailReport report = empty_report("bernstein", t_values);
  report.trials = trials;
  report.variance_cap = spec.variance_cap;
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    const double threshold = bernstein_threshold(spec.variance_cap, spec.increment_bound, t_values[i]);
    report.thresholds[i] = threshold;
    for (const auto& p : paths)
      if (p.max_partial_sum > threshold && p.variance_sum <= spec.variance_cap) ++report.exceed_counts[i];
  }
  return report;
}

IncrementPath sample_path(const MartingaleSpec& spec, std::uint64_t seed, std::size_t trial) {
  IncrementPath out;
  out.increments.reserve(spec.length);
  out.variance_sum = generate_path(spec, seed, trial, &out.increments).variance_sum;
  return out;
}

double conditional_variance(const Task& task, const SmoothLoss<double>& loss, const Eigen::VectorXd& w) {
  const double mean = exact_expected_loss(task, loss, w);
  double var = 0.0;
  for (const Atom& a : task.atoms()) {
    const double d = loss.value(a.y * w.dot(a.x)) - mean;
    var += a.p * d * d;
  }
  return var;
}

std::vector<TrialTrace> collect_traces(const Task& task, const SmoothLoss<double>& loss,
                                       const BallDomain<double>& domain, double eta,
                                       std::size_t steps, const Eigen::VectorXd& w_ref,
                                       std::size_t trials, std::uint64_t seed,
                                       std::size_t first_trial) {
  if (steps < 1) throw std::invalid_argument("trace length must be >= 1");
  // Per-atom reference losses are fixed, so l_t(w*) is a table lookup.
  std::vector<double> ref_loss(task.size());
  for (std::size_t i = 0; i < task.size(); ++i) {
    const Atom& a = task.atoms()[i];
    ref_loss[i] = loss.value(a.y * w_ref.dot(a.x));
  }

  std::vector<TrialTrace> traces(trials);
  parallel_for(trials, [&](std::size_t j) {
    TaskSampler sampler(task, derive_seed(seed, {first_trial + j}));
    TrialTrace& tr = traces[j];
    tr.expected_at_iterate.reserve(steps);
    tr.realized_at_iterate.reserve(steps);
    tr.realized_at_reference.reserve(steps);
    auto state = SgdState<double>::start(Eigen::VectorXd::Zero(task.dim()));
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t idx = sampler.next_index();
      const Atom& a = task.atoms()[idx];
      tr.expected_at_iterate.push_back(exact_expected_loss(task, loss, state.w));
      tr.realized_at_iterate.push_back(loss.value(a.y * state.w.dot(a.x)));
      tr.realized_at_reference.push_back(ref_loss[idx]);
      state = step(std::move(state), a.x, a.y, loss, eta, domain);
    }
  });
  return traces;
}

TailReport check_BT(std::span<const TrialTrace> traces, double loss_star,
                    const BoundConstants& consts, std::span<const double> t_values) {
  require_positive_t(t_values);
  TailReport report = empty_report("B_T", t_values);
  report.trials = traces.size();
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    const double t = t_values[i];
    for (const auto& tr : traces) {
      const double steps = static_cast<double>(tr.realized_at_reference.size());
      double b = 0.0;
      for (double v : tr.realized_at_reference) b += loss_star - v;
      const double bound = kSqrt2Over3 * t * consts.C + std::sqrt(2.0 * t * consts.C * loss_star * steps);
      if (b > bound) ++report.exceed_counts[i];
      report.thresholds[i] = bound;
    }
  }
  return report;
}

TailReport check_AT(std::span<const TrialTrace> traces, const BoundConstants& consts,
                    std::span<const double> t_values) {
  require_positive_t(t_values);
  TailReport report = empty_report("A_T", t_values);
  report.trials = traces.size();
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    for (const auto& tr : traces) {
      const std::size_t steps = tr.expected_at_iterate.size();
      const std::size_t shells = std::max<std::size_t>(1, std::bit_width(steps - 1));  // ceil(log2 T)
      const double t = t_values[i] + std::log(static_cast<double>(shells));
      report.t_effective[i] = t;
      double a = 0.0, d = 0.0;
      for (std::size_t s = 0; s < steps; ++s) {
        a += tr.expected_at_iterate[s] - tr.realized_at_iterate[s];
        d += tr.expected_at_iterate[s];
      }
      const double threshold = 2.0 * std::sqrt(consts.C * d * t) + kSqrt2Over3 * consts.C * t;
      if (a > threshold && d > consts.C) ++report.exceed_counts[i];
    }
  }
  return report;
}

std::pair<TailReport, TailReport> run_martingale_checks(
    const Task& task, const SmoothLoss<double>& loss, const BallDomain<double>& domain,
    double eta, std::size_t steps, const ReferenceOptimum& reference, const BoundConstants& consts,
    std::span<const double> t_values, std::size_t trials, std::uint64_t seed, std::size_t chunk) {
  if (trials < 1) throw std::invalid_argument("martingale checks need trials >= 1");
  chunk = std::max<std::size_t>(1, chunk);
  TailReport at = empty_report("A_T", t_values);
  TailReport bt = empty_report("B_T", t_values);
  for (std::size_t first = 0; first < trials; first += chunk) {
    const std::size_t n = std::min(chunk, trials - first);
    const auto traces = collect_traces(task, loss, domain, eta, steps, reference.w_star, n, seed, first);
    const auto part_at = check_AT(traces, consts, t_values);
    const auto part_bt = check_BT(traces, reference.loss_star, consts, t_values);
    at.merge(part_at);
    bt.merge(part_bt);
    at.t_effective = part_at.t_effective;
    bt.thresholds = part_bt.thresholds;
  }
  return {at, bt};
}

}  // namespace smoothstep
