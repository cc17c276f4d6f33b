#include "smoothstep/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "smoothstep/concentration.hpp"
#include "smoothstep/errors.hpp"
#include "smoothstep/harness.hpp"
#include "smoothstep/report.hpp"

namespace smoothstep {

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumeric = 2;

struct Overrides {
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  void apply(ExperimentConfig& c) const {
    if (trials) {
      if (*trials < 1) throw ConfigError("trials", "must be >= 1");
      c.trials = *trials;
    }
    if (seed) c.seed = *seed;
    if (out) c.out = *out;
  }
};

void print_row(std::ostream& out, const std::string& a, const std::string& b, const std::string& c,
               const std::string& d, const std::string& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %10s %12s %10s %12s\n", a.c_str(), b.c_str(), c.c_str(), d.c_str(),
                e.c_str());
  out << buf;
}

std::string fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_losses(double radius, std::ostream& out) {
  if (!(radius > 0.0)) throw ConfigError("radius", "must be positive");
  const BallDomain<double> domain(radius, 1);
  print_row(out, "loss", "gamma", "L", "phi(0)", "C");
  for (const auto& loss : SmoothLoss<double>::all()) {
    const auto consts = bound_constants(loss, domain, 0.5, 1);
    print_row(out, std::string(loss.name()), fixed(loss.gamma(), 4), fixed(consts.lipschitz),
              fixed(loss.value_at_zero()), fixed(consts.C));
  }
  return kOk;
}

int cmd_bench(const std::string& config_path, const Overrides& overrides, std::ostream& out,
              std::ostream& err) {
  ExperimentConfig config = load_config(config_path);
  overrides.apply(config);
  const auto result = run_bench(config);
  const auto& s = result.summary;
  out << "loss_star " << format_number(s.reference.loss_star) << "\n";
  for (const auto& st : s.strategies) {
    for (const auto& b : st.budgets) {
      out << strategy_name(st.strategy) << " budget=" << b.budget << " trials=" << b.trials
          << " median=" << format_number(b.excess.median) << " q90=" << format_number(b.excess.q90) << "\n";
    }
    out << strategy_name(st.strategy) << " loglog_slope=" << format_number(st.slope) << "\n";
  }
  if (!config.out.empty()) out << "wrote " << config.out << "/trials.csv and summary.json\n";
  if (s.failed_trials > 0) {
    err << s.failed_trials << " trial(s) failed\n";
    for (const auto& e : s.errors) err << "  " << e << "\n";
    return kNumeric;
  }
  return kOk;
}

int cmd_run(const std::string& config_path, const Overrides& overrides, std::optional<std::size_t> budget,
            std::size_t trial, std::ostream& out) {
  ExperimentConfig config = load_config(config_path);
  overrides.apply(config);
  const std::size_t n = budget.value_or(*std::max_element(config.budgets.begin(), config.budgets.end()));
  if (n < config.first_epoch_length) throw ConfigError("budget", "smaller than schedule.T1");

  const auto loss = SmoothLoss<double>::from_name(config.loss);
  const Task task = build_task(config.task);
  const BallDomain<double> domain(config.radius, task.dim());
  const auto reference = best_in_ball(task, loss, domain, config.optimum_tol);
  const auto run = run_adaptive(task, loss, domain, config.schedule_for(n), trial_seed(config.seed, n, trial),
                                &reference);
  auto doc = run_result_to_json(run);
  doc["budget"] = n;
  doc["trial"] = trial;
  doc["loss_star"] = reference.loss_star;
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!config.out.empty()) {
    std::filesystem::create_directories(config.out);
    write_text_file((std::filesystem::path(config.out) / "run.json").string(), text);
  }
  return kOk;
}

struct ConcentrationArgs {
  std::string mode = "coin";
  std::string config;
  std::vector<double> t_values;
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  std::size_t length = 1000;
  double magnitude = 1.0;
  std::optional<double> nu;
  std::optional<double> eta;
  std::string out;
};

int cmd_concentration(const ConcentrationArgs& a, std::ostream& out) {
  if (a.trials < 1) throw ConfigError("trials", "must be >= 1");
  for (double t : a.t_values)
    if (!(t > 0.0)) throw ConfigError("t", "tail parameters must be positive");
  std::vector<TailReport> reports;

  if (a.mode == "coin") {
    MartingaleSpec spec{CoinSource{a.magnitude}, a.length, a.magnitude,
                        a.nu.value_or(static_cast<double>(a.length) * a.magnitude * a.magnitude)};
    reports.push_back(simulate_tail(spec, a.t_values, a.trials, a.seed));
  } else {
    if (a.config.empty()) throw ConfigError("config", "required for mode '" + a.mode + "'");
    const ExperimentConfig config = load_config(a.config);
    const auto loss = SmoothLoss<double>::from_name(config.loss);
    const Task task = build_task(config.task);
    const BallDomain<double> domain(config.radius, task.dim());
    const double eta = a.eta.value_or(1.0 / (6.0 * loss.gamma()));
    if (!(eta > 0.0)) throw ConfigError("eta", "must be positive");
    const auto consts = bound_constants(loss, domain, config.delta, 1);
    if (a.mode == "trajectory") {
      MartingaleSpec spec{TrajectorySource{&task, loss, domain, eta}, a.length, consts.C,
                          a.nu.value_or(static_cast<double>(a.length) * consts.C * consts.C)};
      reports.push_back(simulate_tail(spec, a.t_values, a.trials, a.seed));
      reports.back().label = "bernstein_trajectory";
    } else if (a.mode == "martingale") {
      const auto reference = best_in_ball(task, loss, domain, config.optimum_tol);
      auto [at, bt] = run_martingale_checks(task, loss, domain, eta, a.length, reference, consts, a.t_values,
                                            a.trials, a.seed);
      reports.push_back(std::move(at));
      reports.push_back(std::move(bt));
    } else {
      throw ConfigError("mode", "expected coin | trajectory | martingale");
    }
  }

  nlohmann::json doc = {{"reports", nlohmann::json::array()}};
  std::string csv;
  for (const auto& r : reports) {
    doc["reports"].push_back(tail_report_to_json(r));
    for (std::size_t i = 0; i < r.t_values.size(); ++i) {
      out << r.label << " t=" << format_number(r.t_values[i]) << " empirical=" << format_number(r.empirical(i))
          << " bound=" << format_number(r.theoretical(i)) << (r.within_bound(i) ? " ok" : " EXCEEDED") << "\n";
    }
    const std::string table = tail_report_csv(r);
    csv += csv.empty() ? table : table.substr(table.find('\n') + 1);
  }
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    write_text_file((std::filesystem::path(a.out) / "tail_report.json").string(), doc.dump(2) + "\n");
    write_text_file((std::filesystem::path(a.out) / "tail_report.csv").string(), csv);
  }
  return kOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projected SGD with epoch-doubling step sizes: benchmarks and concentration checks",
               "smoothstep"};
  app.require_subcommand(1);

  Overrides overrides;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--trials", overrides.trials, "Override the number of trials");
    sub->add_option("--seed", overrides.seed, "Override the base seed");
    sub->add_option("--out", overrides.out, "Override the output directory");
  };

  std::string config_path;
  auto* bench = app.add_subcommand("bench", "Run a multi-trial benchmark from a JSON config");
  bench->add_option("--config,config", config_path, "Experiment config (JSON)")->required();
  add_overrides(bench);

  std::optional<std::size_t> run_budget;
  std::size_t run_trial = 0;
  auto* run = app.add_subcommand("run", "Run one adaptive trial and print it as JSON");
  run->add_option("--config,config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--budget", run_budget, "Sample budget (default: largest configured)");
  run->add_option("--trial", run_trial, "Trial index used for seeding");
  add_overrides(run);

  ConcentrationArgs conc;
  auto* concentration = app.add_subcommand("concentration", "Monte-Carlo martingale tail checks");
  concentration->add_option("--mode", conc.mode, "coin | trajectory | martingale")
      ->check(CLI::IsMember({"coin", "trajectory", "martingale"}));
  concentration->add_option("--config", conc.config, "Experiment config (trajectory / martingale modes)");
  concentration->add_option("--t", conc.t_values, "Tail parameters")->delimiter(',');
  concentration->add_option("--trials", conc.trials, "Number of trials");
  concentration->add_option("--seed", conc.seed, "Base seed");
  concentration->add_option("--length", conc.length, "Martingale length / SGD steps");
  concentration->add_option("--magnitude", conc.magnitude, "Coin increment magnitude");
  concentration->add_option("--nu", conc.nu, "Variance cap (default: length * K^2)");
  concentration->add_option("--eta", conc.eta, "SGD step size (default: 1/(6 gamma))");
  concentration->add_option("--out", conc.out, "Directory for tail_report.json / tail_report.csv");

  double radius = 1.0;
  auto* losses = app.add_subcommand("losses", "Print loss constants on [-R, R]");
  losses->add_option("--radius", radius, "Ball radius R");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Validate a config file");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*bench) return cmd_bench(config_path, overrides, out, err);
    if (*run) return cmd_run(config_path, overrides, run_budget, run_trial, out);
    if (*concentration) {
      if (conc.t_values.empty()) conc.t_values = conc.mode == "coin" ? std::vector<double>{1, 2, 3} : std::vector<double>{2};
      if (conc.mode != "coin" && concentration->count("--length") == 0) conc.length = 1024;
      if (conc.mode == "martingale" && concentration->count("--trials") == 0) conc.trials = 10000;
      return cmd_concentration(conc, out);
    }
    if (*losses) return cmd_losses(radius, out);
    if (*validate) {
      (void)load_config(validate_path);
      out << "ok\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const DomainError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace smoothstep
