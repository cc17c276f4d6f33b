#include "smoothstep/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace smoothstep {

namespace {

constexpr double kNormSlack = 1e-12;

Eigen::VectorXd random_unit(Eigen::Index dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = standard_normal(rng);
  } while (v.norm() == 0.0);
  return v.normalized();
}

Eigen::VectorXd random_in_ball(Eigen::Index dim, Rng& rng) {
  const double r = std::pow(uniform01(rng), 1.0 / static_cast<double>(dim));
  return r * random_unit(dim, rng);
}

// Clamp tiny rounding overshoot so ||x|| <= 1 holds exactly.
void clip_to_unit(Eigen::VectorXd& x) {
  const double n = x.norm();
  if (n > 1.0) x /= n;
}

}  // namespace

Task::Task(Eigen::Index dim, std::vector<Atom> atoms) : dim_(dim), atoms_(std::move(atoms)) {
  if (dim_ < 1) throw std::invalid_argument("task dimension must be >= 1");
  if (atoms_.empty()) throw std::invalid_argument("task needs at least one atom");
  double total = 0.0;
  cumulative_.reserve(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    const std::string where = "atom " + std::to_string(i);
    if (a.x.size() != dim_) throw std::invalid_argument(where + ": dimension mismatch");
    if (!a.x.allFinite()) throw std::invalid_argument(where + ": non-finite feature");
    const double n = a.x.norm();
    if (n > 1.0 + kNormSlack) throw std::invalid_argument(where + ": feature norm exceeds 1");
    if (a.y != 1.0 && a.y != -1.0) throw std::invalid_argument(where + ": label must be +1 or -1");
    if (!(a.p >= 0.0) || !std::isfinite(a.p)) throw std::invalid_argument(where + ": bad probability");
    max_norm_ = std::max(max_norm_, n);
    total += a.p;
    cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "atom probabilities sum to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

std::size_t Task::locate(double u) const {
  const double target = u * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
}

Task Task::separable(Eigen::Index dim, double margin, std::size_t k_atoms, std::uint64_t seed) {
  if (!(margin > 0.0 && margin < 1.0)) throw std::invalid_argument("separable margin must lie in (0, 1)");
  if (k_atoms == 0) throw std::invalid_argument("k_atoms must be >= 1");
  if (dim < 1) throw std::invalid_argument("task dimension must be >= 1");
  Rng rng(seed);
  const Eigen::VectorXd u = random_unit(dim, rng);
  std::vector<Atom> atoms;
  atoms.reserve(k_atoms);
  for (std::size_t i = 0; i < k_atoms; ++i) {
    const double y = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    const double along = margin + (1.0 - margin) * uniform01(rng);
    Eigen::VectorXd x = (y * along) * u;
    if (dim > 1) {
      Eigen::VectorXd v = random_unit(dim, rng);
      v -= v.dot(u) * u;
      const double vn = v.norm();
      if (vn > 0.0) x += (std::sqrt(1.0 - along * along) * uniform01(rng) / vn) * v;
    }
    clip_to_unit(x);
    atoms.push_back({std::move(x), y, 1.0 / static_cast<double>(k_atoms)});
  }
  return Task(dim, std::move(atoms));
}

Task Task::noisy(Eigen::Index dim, double flip_prob, std::size_t k_atoms, std::uint64_t seed) {
  if (!(flip_prob > 0.0 && flip_prob < 0.5)) throw std::invalid_argument("flip_prob must lie in (0, 0.5)");
  if (k_atoms == 0) throw std::invalid_argument("k_atoms must be >= 1");
  if (dim < 1) throw std::invalid_argument("task dimension must be >= 1");
  Rng rng(seed);
  const Eigen::VectorXd u = random_unit(dim, rng);
  const double mass = 1.0 / static_cast<double>(k_atoms);
  std::vector<Atom> atoms;
  atoms.reserve(2 * k_atoms);
  for (std::size_t i = 0; i < k_atoms; ++i) {
    Eigen::VectorXd x = random_in_ball(dim, rng);
    clip_to_unit(x);
    const double y = u.dot(x) >= 0.0 ? 1.0 : -1.0;
    atoms.push_back({x, y, mass * (1.0 - flip_prob)});
    atoms.push_back({std::move(x), -y, mass * flip_prob});
  }
  return Task(dim, std::move(atoms));
}

std::vector<std::size_t> TaskSampler::draw(std::size_t count) {
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = next_index();
  return out;
}

std::vector<Example> sample(const Task& task, std::size_t count, std::uint64_t seed) {
  TaskSampler sampler(task, seed);
  std::vector<Example> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto ex = sampler.next();
    out.push_back({ex.x, ex.y});
  }
  return out;
}

double exact_expected_loss(const Task& task, const SmoothLoss<double>& loss, const Eigen::VectorXd& w) {
  if (!w.allFinite()) throw DomainError("expected loss requested at a non-finite point");
  double total = 0.0;
  for (const Atom& a : task.atoms()) total += a.p * loss.value(a.y * w.dot(a.x));
  return total;
}

Eigen::VectorXd exact_expected_gradient(const Task& task, const SmoothLoss<double>& loss,
                                        const Eigen::VectorXd& w) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(task.dim());
  for (const Atom& a : task.atoms()) g += (a.p * loss.derivative(a.y * w.dot(a.x)) * a.y) * a.x;
  return g;
}

MonteCarloEstimate mc_expected_loss(const Task& task, const SmoothLoss<double>& loss,
                                    const Eigen::VectorXd& w, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("Monte-Carlo estimate needs n >= 1");
  TaskSampler sampler(task, seed);
  // Welford
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto ex = sampler.next();
    const double v = loss.value(ex.y * w.dot(ex.x));
    const double delta = v - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (v - mean);
  }
  const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

ReferenceOptimum best_in_ball(const Task& task, const SmoothLoss<double>& loss,
                              const BallDomain<double>& domain, double tol,
                              std::size_t max_iterations) {
  if (!(tol > 0.0)) throw std::invalid_argument("best_in_ball tolerance must be positive");
  if (domain.dim() != task.dim()) throw std::invalid_argument("domain and task dimensions differ");

  const double curvature = loss.gamma() * task.max_feature_norm() * task.max_feature_norm();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(task.dim());
  if (curvature == 0.0) return {w, exact_expected_loss(task, loss, w), tol, 0.0, 0};

  const double step = 1.0 / curvature;
  double mapping_norm = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd next = project(domain, w - step * exact_expected_gradient(task, loss, w));
    mapping_norm = curvature * (w - next).norm();
    w = std::move(next);
    if (mapping_norm <= tol) return {w, exact_expected_loss(task, loss, w), tol, mapping_norm, it};
  }
  std::ostringstream os;
  os << "best_in_ball did not reach gradient-mapping norm " << tol << " in " << max_iterations
     << " iterations (last " << mapping_norm << ")";
  throw ConvergenceError(os.str(), w);
}

nlohmann::json task_to_json(const Task& task) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : task.atoms()) {
    atoms.push_back({{"x", std::vector<double>(a.x.data(), a.x.data() + a.x.size())},
                     {"y", static_cast<int>(a.y)},
                     {"p", a.p}});
  }
  return {{"dim", task.dim()}, {"atoms", std::move(atoms)}};
}

Task task_from_json(const nlohmann::json& doc) {
  const auto dim = doc.at("dim").get<Eigen::Index>();
  std::vector<Atom> atoms;
  for (const auto& a : doc.at("atoms")) {
    const auto x = a.at("x").get<std::vector<double>>();
    atoms.push_back({Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                     a.at("y").get<double>(), a.at("p").get<double>()});
  }
  return Task(dim, std::move(atoms));
}

}  // namespace smoothstep
