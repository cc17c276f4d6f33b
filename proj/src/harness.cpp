#include "smoothstep/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "smoothstep/errors.hpp"
#include "smoothstep/parallel.hpp"
#include "smoothstep/report.hpp"
#include "smoothstep/sgd.hpp"

namespace smoothstep {

using nlohmann::json;

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Adaptive: return "adaptive";
    case Strategy::OracleFixed: return "oracle_fixed";
    case Strategy::ConstantCap: return "constant_cap";
    case Strategy::SqrtDecay: return "sqrt_decay";
  }
  return "";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Adaptive, Strategy::OracleFixed, Strategy::ConstantCap, Strategy::SqrtDecay})
    if (strategy_name(s) == name) return s;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!keys.count(key)) throw ConfigError(join(path, key), "unknown field");
}

const json& require_object(const json& parent, const std::string& key, const std::string& path) {
  const std::string where = join(path, key);
  if (!parent.contains(key)) throw ConfigError(where, "missing required field");
  const json& v = parent.at(key);
  if (!v.is_object()) throw ConfigError(where, "expected an object");
  return v;
}

double read_number(const json& obj, const std::string& key, const std::string& path,
                   std::optional<double> fallback = std::nullopt) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where, "missing required field");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where, "expected a finite number");
  return d;
}

std::uint64_t read_count(const json& obj, const std::string& key, const std::string& path,
                         std::optional<std::uint64_t> fallback = std::nullopt) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where, "missing required field");
  }
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError(where, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string read_string(const json& obj, const std::string& key, const std::string& path,
                        std::optional<std::string> fallback = std::nullopt) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where, "missing required field");
  }
  if (!obj.at(key).is_string()) throw ConfigError(where, "expected a string");
  return obj.at(key).get<std::string>();
}

TaskSpec parse_task(const json& t, const std::string& path) {
  TaskSpec spec;
  spec.factory = read_string(t, "factory", path);
  if (spec.factory == "separable") {
    reject_unknown(t, path, {"factory", "dim", "margin", "k_atoms", "seed"});
    spec.margin = read_number(t, "margin", path);
    if (!(spec.margin > 0.0 && spec.margin < 1.0)) throw ConfigError(join(path, "margin"), "must lie in (0, 1)");
  } else if (spec.factory == "noisy") {
    reject_unknown(t, path, {"factory", "dim", "flip_prob", "k_atoms", "seed"});
    spec.flip_prob = read_number(t, "flip_prob", path);
    if (!(spec.flip_prob > 0.0 && spec.flip_prob < 0.5))
      throw ConfigError(join(path, "flip_prob"), "must lie in (0, 0.5)");
  } else if (spec.factory == "file") {
    reject_unknown(t, path, {"factory", "path"});
    spec.path = read_string(t, "path", path);
    return spec;
  } else if (spec.factory == "inline") {
    reject_unknown(t, path, {"factory", "task"});
    spec.inline_task = require_object(t, "task", path);
    return spec;
  } else {
    throw ConfigError(join(path, "factory"), "expected separable | noisy | file | inline");
  }
  spec.dim = static_cast<Eigen::Index>(read_count(t, "dim", path));
  if (spec.dim < 1) throw ConfigError(join(path, "dim"), "must be >= 1");
  spec.k_atoms = read_count(t, "k_atoms", path);
  if (spec.k_atoms < 1) throw ConfigError(join(path, "k_atoms"), "must be >= 1");
  spec.seed = read_count(t, "seed", path, 0);
  return spec;
}

}  // namespace

ScheduleConfig ExperimentConfig::schedule_for(std::size_t budget) const {
  ScheduleConfig s;
  s.first_epoch_length = first_epoch_length;
  s.epochs = ScheduleConfig::epochs_for_budget(budget, first_epoch_length);
  s.delta = delta;
  s.K = K;
  s.warm_start = warm_start;
  return s;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("$", "config must be a JSON object");
  reject_unknown(doc, "", {"loss", "task", "domain", "schedule", "budgets", "strategies", "trials",
                           "seed", "optimum_tol", "out"});
  ExperimentConfig c;

  c.loss = read_string(doc, "loss", "");
  try {
    (void)SmoothLoss<double>::from_name(c.loss);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("loss", e.what());
  }

  c.task = parse_task(require_object(doc, "task", ""), "task");

  const json& domain = require_object(doc, "domain", "");
  reject_unknown(domain, "domain", {"radius"});
  c.radius = read_number(domain, "radius", "domain");
  if (!(c.radius > 0.0)) throw ConfigError("domain.radius", "must be positive");

  if (doc.contains("schedule")) {
    const json& s = require_object(doc, "schedule", "");
    reject_unknown(s, "schedule", {"T1", "delta", "K", "warm_start"});
    c.first_epoch_length = read_count(s, "T1", "schedule", 8);
    if (c.first_epoch_length < 1) throw ConfigError("schedule.T1", "must be >= 1");
    c.delta = read_number(s, "delta", "schedule", 0.05);
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("schedule.delta", "must lie in (0, 1)");
    c.K = read_number(s, "K", "schedule", 1.0);
    if (!(c.K > 0.0)) throw ConfigError("schedule.K", "must be positive");
    if (s.contains("warm_start")) {
      if (!s.at("warm_start").is_boolean()) throw ConfigError("schedule.warm_start", "expected a boolean");
      c.warm_start = s.at("warm_start").get<bool>();
    }
  }

  if (!doc.contains("budgets")) throw ConfigError("budgets", "missing required field");
  const json& budgets = doc.at("budgets");
  if (!budgets.is_array() || budgets.empty()) throw ConfigError("budgets", "expected a non-empty array");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    const std::string where = "budgets[" + std::to_string(i) + "]";
    if (!budgets[i].is_number_unsigned() && !(budgets[i].is_number_integer() && budgets[i].get<std::int64_t>() > 0))
      throw ConfigError(where, "expected a positive integer");
    const auto b = budgets[i].get<std::size_t>();
    if (b < c.first_epoch_length) throw ConfigError(where, "budget is smaller than schedule.T1");
    if (b > (std::size_t{1} << 40)) throw ConfigError(where, "budget too large");
    c.budgets.push_back(b);
  }

  if (doc.contains("strategies")) {
    const json& st = doc.at("strategies");
    if (!st.is_array() || st.empty()) throw ConfigError("strategies", "expected a non-empty array");
    c.strategies.clear();
    for (std::size_t i = 0; i < st.size(); ++i) {
      const std::string where = "strategies[" + std::to_string(i) + "]";
      if (!st[i].is_string()) throw ConfigError(where, "expected a string");
      const auto s = parse_strategy(st[i].get<std::string>());
      if (!s) throw ConfigError(where, "expected adaptive | oracle_fixed | constant_cap | sqrt_decay");
      if (std::find(c.strategies.begin(), c.strategies.end(), *s) != c.strategies.end())
        throw ConfigError(where, "duplicate strategy");
      c.strategies.push_back(*s);
    }
  }

  c.trials = read_count(doc, "trials", "", 1);
  if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
  c.seed = read_count(doc, "seed", "", 0);
  c.optimum_tol = read_number(doc, "optimum_tol", "", 1e-9);
  if (!(c.optimum_tol > 0.0)) throw ConfigError("optimum_tol", "must be positive");
  c.out = read_string(doc, "out", "", std::string{});
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const ExperimentConfig& c) {
  json task = {{"factory", c.task.factory}};
  if (c.task.factory == "separable" || c.task.factory == "noisy") {
    task["dim"] = c.task.dim;
    task["k_atoms"] = c.task.k_atoms;
    task["seed"] = c.task.seed;
    if (c.task.factory == "separable") task["margin"] = c.task.margin;
    else task["flip_prob"] = c.task.flip_prob;
  } else if (c.task.factory == "file") {
    task["path"] = c.task.path;
  } else {
    task["task"] = c.task.inline_task;
  }
  json strategies = json::array();
  for (auto s : c.strategies) strategies.push_back(std::string(strategy_name(s)));
  return {{"loss", c.loss},
          {"task", task},
          {"domain", {{"radius", c.radius}}},
          {"schedule", {{"T1", c.first_epoch_length}, {"delta", c.delta}, {"K", c.K}, {"warm_start", c.warm_start}}},
          {"budgets", c.budgets},
          {"strategies", strategies},
          {"trials", c.trials},
          {"seed", c.seed},
          {"optimum_tol", c.optimum_tol},
          {"out", c.out}};
}

Task build_task(const TaskSpec& spec) {
  try {
    if (spec.factory == "separable") return Task::separable(spec.dim, spec.margin, spec.k_atoms, spec.seed);
    if (spec.factory == "noisy") return Task::noisy(spec.dim, spec.flip_prob, spec.k_atoms, spec.seed);
    if (spec.factory == "inline") return task_from_json(spec.inline_task);
    if (spec.factory == "file") {
      std::ifstream in(spec.path);
      if (!in) throw ConfigError("task.path", "cannot open task file '" + spec.path + "'");
      return task_from_json(json::parse(in));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("task", e.what());
  }
  throw ConfigError("task.factory", "unknown factory '" + spec.factory + "'");
}

// ---------------------------------------------------------------------------
// Strategies

namespace {

RunResult single_epoch(const Task& task, const SmoothLoss<double>& loss, const BallDomain<double>& domain,
                       std::size_t steps, std::uint64_t seed, const ReferenceOptimum* reference,
                       double delta, double first_eta, auto step_size) {
  if (steps < 1) throw std::invalid_argument("a run needs at least one step");
  RunResult r;
  r.schedule.first_epoch_length = steps;
  r.schedule.epochs = 1;
  r.schedule.delta = delta;
  r.consts = bound_constants(loss, domain, delta, 1);

  TaskSampler sampler(task, seed);
  const auto indices = sampler.draw(steps);
  const auto out = run_epoch(Eigen::VectorXd::Zero(task.dim()).eval(), as_examples(task, indices), loss,
                             step_size, domain);
  EpochRecord rec{1, steps, first_eta, out.d_hat, surrogate(out.d_hat, r.consts, steps), out.w_avg, {}};
  if (reference) rec.excess = exact_expected_loss(task, loss, out.w_avg) - reference->loss_star;
  r.w_hat = out.w_avg;
  r.excess = rec.excess;
  r.epochs.push_back(std::move(rec));
  return r;
}

}  // namespace

double oracle_step_size(const BallDomain<double>& domain, double gamma, std::size_t steps, double loss_star) {
  return next_step_size(domain, gamma, steps, loss_star);
}

RunResult oracle_fixed_strategy(const Task& task, const SmoothLoss<double>& loss,
                                const BallDomain<double>& domain, std::size_t steps,
                                std::uint64_t seed, const ReferenceOptimum& reference, double delta) {
  const double eta = oracle_step_size(domain, loss.gamma(), steps, reference.loss_star);
  return single_epoch(task, loss, domain, steps, seed, &reference, delta, eta,
                      [eta](std::size_t) { return eta; });
}

RunResult constant_cap_strategy(const Task& task, const SmoothLoss<double>& loss,
                                const BallDomain<double>& domain, std::size_t steps,
                                std::uint64_t seed, const ReferenceOptimum* reference, double delta) {
  const double eta = 1.0 / (6.0 * loss.gamma());
  return single_epoch(task, loss, domain, steps, seed, reference, delta, eta,
                      [eta](std::size_t) { return eta; });
}

RunResult sqrt_decay_strategy(const Task& task, const SmoothLoss<double>& loss,
                              const BallDomain<double>& domain, std::size_t steps,
                              std::uint64_t seed, const ReferenceOptimum* reference, double delta) {
  const double R = domain.radius();
  return single_epoch(task, loss, domain, steps, seed, reference, delta, R,
                      [R](std::size_t t) { return R / std::sqrt(static_cast<double>(t)); });
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t budget, std::size_t trial) {
  return derive_seed(base, {budget, trial});
}

RunResult run_strategy(Strategy strategy, const ExperimentConfig& config, const Task& task,
                       const SmoothLoss<double>& loss, const BallDomain<double>& domain,
                       const ReferenceOptimum& reference, std::size_t budget, std::uint64_t seed) {
  switch (strategy) {
    case Strategy::Adaptive:
      return run_adaptive(task, loss, domain, config.schedule_for(budget), seed, &reference);
    case Strategy::OracleFixed:
      return oracle_fixed_strategy(task, loss, domain, budget, seed, reference, config.delta);
    case Strategy::ConstantCap:
      return constant_cap_strategy(task, loss, domain, budget, seed, &reference, config.delta);
    case Strategy::SqrtDecay:
      return sqrt_decay_strategy(task, loss, domain, budget, seed, &reference, config.delta);
  }
  throw std::logic_error("unhandled strategy");
}

// ---------------------------------------------------------------------------
// Aggregation

double quantile(std::vector<double> values, double level) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2 || lx.size() != std::min(x.size(), y.size())) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

const StrategySummary* BenchSummary::find(Strategy s) const {
  for (const auto& st : strategies)
    if (st.strategy == s) return &st;
  return nullptr;
}

BenchResult run_bench(const ExperimentConfig& config) {
  const auto loss = SmoothLoss<double>::from_name(config.loss);
  const Task task = build_task(config.task);
  const BallDomain<double> domain(config.radius, task.dim());
  const ReferenceOptimum reference = best_in_ball(task, loss, domain, config.optimum_tol);
  const double excess_floor = -config.optimum_tol * std::max(1.0, 2.0 * config.radius);

  const std::size_t per_budget = config.trials;
  const std::size_t per_strategy = per_budget * config.budgets.size();
  const std::size_t total = per_strategy * config.strategies.size();

  BenchResult result;
  result.trials.resize(total);
  parallel_for(total, [&](std::size_t job) {
    const Strategy strategy = config.strategies[job / per_strategy];
    const std::size_t budget = config.budgets[(job % per_strategy) / per_budget];
    const std::size_t trial = job % per_budget;
    TrialOutcome& out = result.trials[job];
    out.strategy = strategy;
    out.budget = budget;
    out.trial = trial;
    try {
      auto run = run_strategy(strategy, config, task, loss, domain, reference, budget,
                              trial_seed(config.seed, budget, trial));
      if (!(run.excess && *run.excess >= excess_floor)) {
        std::ostringstream os;
        os.precision(17);
        os << "excess risk " << (run.excess ? *run.excess : std::nan("")) << " is below the optimum tolerance";
        throw NumericError(os.str());
      }
      out.run = std::move(run);
    } catch (const NumericError& e) {
      out.error = e.what();
    }
  });

  BenchSummary& summary = result.summary;
  summary.reference = reference;
  const std::size_t largest = *std::max_element(config.budgets.begin(), config.budgets.end());
  summary.constants = bound_constants(loss, domain, config.delta, config.schedule_for(largest).epochs);
  for (std::size_t si = 0; si < config.strategies.size(); ++si) {
    StrategySummary st{config.strategies[si], {}, 0.0};
    std::vector<double> xs, medians;
    for (std::size_t bi = 0; bi < config.budgets.size(); ++bi) {
      std::vector<double> excess;
      for (std::size_t t = 0; t < per_budget; ++t) {
        const auto& o = result.trials[si * per_strategy + bi * per_budget + t];
        if (o.run) {
          excess.push_back(*o.run->excess);
        } else {
          ++summary.failed_trials;
          summary.errors.push_back(std::string(strategy_name(o.strategy)) + " budget " +
                                   std::to_string(o.budget) + " trial " + std::to_string(o.trial) + ": " + o.error);
        }
      }
      const Quantiles q{quantile(excess, 0.5), quantile(excess, 0.9), quantile(excess, 1.0 - config.delta)};
      st.budgets.push_back({config.budgets[bi], excess.size(), q});
      xs.push_back(static_cast<double>(config.budgets[bi]));
      medians.push_back(q.median);
    }
    st.slope = loglog_slope(xs, medians);
    summary.strategies.push_back(std::move(st));
  }

  if (!config.out.empty()) {
    std::filesystem::create_directories(config.out);
    write_text_file((std::filesystem::path(config.out) / "trials.csv").string(), trials_csv(result.trials));
    write_text_file((std::filesystem::path(config.out) / "summary.json").string(),
                    bench_summary_to_json(summary, config).dump(2) + "\n");
  }
  return result;
}

}  // namespace smoothstep
