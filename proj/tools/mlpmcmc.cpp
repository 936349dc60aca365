// Command-line front end: simulate, pmcmc, mlpmcmc, rate-study, rate-fit, validate.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mlpmcmc/harness/config.hpp"
#include "mlpmcmc/harness/csv.hpp"
#include "mlpmcmc/harness/experiments.hpp"
#include "mlpmcmc/harness/metadata.hpp"
#include "mlpmcmc/harness/rate.hpp"
#include "mlpmcmc/harness/validation.hpp"

namespace fs = std::filesystem;
using namespace mlpmcmc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

void add_options(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--model", c.model, "kuramoto | modified_kuramoto")->capture_default_str();
  app.add_option("--theta", c.true_theta, "true theta for data generation")->capture_default_str();
  app.add_option("--sigma", c.true_sigma, "true sigma")->capture_default_str();
  app.add_option("--tau", c.true_tau, "true tau")->capture_default_str();
  app.add_option("--T", c.T, "number of unit-time observations")->capture_default_str();
  app.add_option("--seed", c.seed, "seed of the inference runs")->capture_default_str();
  app.add_option("--data-seed", c.data_seed, "seed of the synthetic data")->capture_default_str();
  app.add_option("--data-level", c.data_level, "discretization level of the data")->capture_default_str();
  app.add_option("--data-particles", c.data_particles, "law particles of the data")->capture_default_str();
  app.add_option("--obs", c.obs, "observations CSV to use instead of simulating");
  app.add_option("--prior-mean", c.prior_mean, "prior means of (theta, log sigma, log tau)")
      ->capture_default_str();
  app.add_option("--prior-sd", c.prior_sd, "prior standard deviations")->capture_default_str();
  app.add_option("--level", c.level, "single-level discretization level")->capture_default_str();
  app.add_option("--N", c.N, "law particles")->capture_default_str();
  app.add_option("--M", c.M, "filter particles (0 means T)")->capture_default_str();
  app.add_option("--iters", c.iters, "MCMC iterations")->capture_default_str();
  app.add_option("--burn-in", c.burn_in, "burn-in for reported posterior summaries")->capture_default_str();
  app.add_option("--steps", c.steps, "random-walk step sizes")->capture_default_str();
  app.add_option("--epsilons", c.epsilons, "epsilon grid of the rate study")->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "target accuracy of an mlpmcmc run")->capture_default_str();
  app.add_option("--l-star", c.l_star, "base level")->capture_default_str();
  app.add_option("--c-iter", c.c_iter, "iteration schedule constant")->capture_default_str();
  app.add_option("--c-particles", c.c_particles, "particle schedule constant")->capture_default_str();
  app.add_option("--replicates", c.replicates, "rate-study replicates")->capture_default_str();
  app.add_option("--ref-level-offset", c.ref_level_offset, "reference level above the finest")
      ->capture_default_str();
  app.add_option("--ref-iter-factor", c.ref_iter_factor, "reference chain length multiplier")
      ->capture_default_str();
  app.add_option("--threads", c.threads, "worker threads")->capture_default_str();
  app.add_option("--out", c.out, "output directory (relative to $MLPMCMC_OUTPUT_ROOT if set)")
      ->capture_default_str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec model = cfg.build_model();
  const ObservationSeries obs = simulate_data(model, cfg.truth(model), cfg.T, cfg.data_level,
                                              cfg.data_particles, cfg.data_seed);
  write_csv(dir / "observations.csv", observations_table(obs));
  write_metadata(dir / "simulate_metadata.json", "simulate", cfg, seconds_since(start));
  std::cout << "wrote " << (dir / "observations.csv").string() << " (" << obs.size() << " rows)\n";
  return 0;
}

int cmd_pmcmc(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec model = cfg.build_model();
  const ObservationSeries obs = load_or_simulate(cfg, model);
  const ChainTrace trace = run_pmcmc(cfg, model, obs);
  write_csv(dir / "trace.csv", trace_table(trace, model.parameter_names));

  std::vector<std::pair<std::string, std::string>> extra{
      {"acceptance_rate", format_double(trace.acceptance_rate())},
      {"filter_failures", std::to_string(trace.filter_failures)},
      {"cost_units", format_double(cost_units(LevelEntry{cfg.level, cfg.N, cfg.iters,
                                                         cfg.filter_particles()}))}};
  std::cout << "acceptance rate " << trace.acceptance_rate() << '\n';
  for (Index i = 0; i < model.parameter_dim(); ++i) {
    const auto& name = model.parameter_names[static_cast<std::size_t>(i)];
    const double mean = estimate_single(trace, coordinate_functional(i), cfg.burn_in);
    const CredibleInterval ci = credible_interval(trace, i, cfg.burn_in);
    std::cout << name << ": mean " << mean << ", 95% interval [" << ci.lower << ", " << ci.upper
              << "]\n";
    extra.emplace_back("posterior_mean_" + name, format_double(mean));
  }
  write_metadata(dir / "pmcmc_metadata.json", "pmcmc", cfg, seconds_since(start), extra);
  return 0;
}

int cmd_mlpmcmc(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec model = cfg.build_model();
  const ObservationSeries obs = load_or_simulate(cfg, model);
  const LevelPlan plan = make_level_plan(cfg.schedule(cfg.epsilon));
  if (plan.clamped)
    std::cerr << "note: L raised to l_star + 1 = " << plan.finest << " for epsilon " << cfg.epsilon
              << '\n';
  const MlmcResult result = run_mlpmcmc(cfg, model, obs, plan);

  CsvTable plan_csv;
  plan_csv.header = {"level", "N", "I", "M", "cost_units"};
  for (const auto& e : plan.levels)
    plan_csv.rows.push_back({std::to_string(e.level), std::to_string(e.law_particles),
                             std::to_string(e.iterations), std::to_string(e.filter_particles),
                             format_double(cost_units(e))});
  write_csv(dir / "plan.csv", plan_csv);

  for (std::size_t i = 0; i < result.traces.size(); ++i)
    write_csv(dir / ("level_" + std::to_string(plan.levels[i].level) + ".csv"),
              trace_table(result.traces[i], model.parameter_names));

  CsvTable contributions;
  contributions.header = {"parameter", "level", "contribution"};
  CsvTable combined;
  combined.header = {"parameter", "estimate"};
  for (std::size_t f = 0; f < result.estimate.size(); ++f) {
    const auto& name = model.parameter_names[f];
    for (std::size_t i = 0; i < plan.levels.size(); ++i)
      contributions.rows.push_back({name, std::to_string(plan.levels[i].level),
                                    format_double(result.contributions[f][i])});
    combined.rows.push_back({name, format_double(result.estimate[f])});
    std::cout << name << ": " << result.estimate[f] << '\n';
  }
  write_csv(dir / "contributions.csv", contributions);
  write_csv(dir / "combined.csv", combined);
  write_metadata(dir / "mlpmcmc_metadata.json", "mlpmcmc", cfg, seconds_since(start),
                 {{"L", std::to_string(plan.finest)},
                  {"clamped", plan.clamped ? "true" : "false"},
                  {"cost_units", format_double(result.total_cost_units)}});
  return 0;
}

void write_rate(const fs::path& dir, const std::vector<RateRow>& rows) {
  write_csv(dir / "rate.csv", rate_csv_table(rows));
  for (const auto& r : rows)
    std::cout << r.method << ' ' << r.parameter << " eps=" << r.epsilon << " cost=" << r.cost_units
              << " mse=" << r.mse << " slope=" << r.slope << '\n';
}

int cmd_rate_study(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec model = cfg.build_model();
  const ObservationSeries obs = load_or_simulate(cfg, model);
  write_csv(dir / "observations.csv", observations_table(obs));
  std::cerr << "computing reference posterior mean\n";
  const auto reference = reference_posterior_mean(cfg, model, obs);
  write_csv(dir / "reference.csv", reference_table(reference));
  const auto runs =
      rate_study_runs(cfg, model, obs, [](const std::string& msg) { std::cerr << msg << '\n'; });
  write_csv(dir / "runs.csv", runs_table(runs));
  write_rate(dir, rate_table(runs, reference));
  write_metadata(dir / "rate_study_metadata.json", "rate-study", cfg, seconds_since(start));
  return 0;
}

int cmd_rate_fit(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const auto runs = runs_from_table(read_csv(dir / "runs.csv"));
  const auto reference = reference_from_table(read_csv(dir / "reference.csv"));
  write_rate(dir, rate_table(runs, reference));
  write_metadata(dir / "rate_fit_metadata.json", "rate-fit", cfg, seconds_since(start));
  return 0;
}

int cmd_validate(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  CsvTable table;
  table.header = {"check", "value", "threshold", "passed"};
  bool all = true;
  auto add = [&](const std::string& name, double value, double threshold, bool passed) {
    table.rows.push_back({name, format_double(value), format_double(threshold), passed ? "1" : "0"});
    std::cout << (passed ? "PASS " : "FAIL ") << name << " value=" << value
              << " threshold=" << threshold << '\n';
    all = all && passed;
  };

  KalmanCheckSettings ks;
  ks.level = 4;
  ks.filter_particles = 2000;
  ks.seeds = 3;
  ks.seed = cfg.seed;
  const KalmanCheckResult k = check_kalman(ks);
  add("kalman_relative_error", k.relative_error(), 0.02, k.relative_error() < 0.02);

  CouplingCheckSettings cs;
  cs.min_level = 2;
  cs.max_level = 5;
  cs.seeds = 5;
  cs.seed = cfg.seed;
  const CouplingCheckResult c = check_coupling_rate(cs);
  add("coupling_log2_slope", c.slope, -0.8, c.slope <= -0.8);

  const WeightCheckResult w = check_weight_properties(10000, 3, cfg.seed);
  add("weight_property_failures", static_cast<double>(w.failures()), 0.0, w.failures() == 0);

  write_csv(dir / "validate.csv", table);
  write_metadata(dir / "validate_metadata.json", "validate", cfg, seconds_since(start));
  return all ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel particle MCMC for McKean-Vlasov SDEs", "mlpmcmc"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "key = value config file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", version_string());

  ExperimentConfig cfg;
  add_options(app, cfg);
  auto* simulate = app.add_subcommand("simulate", "simulate observations");
  auto* pmcmc = app.add_subcommand("pmcmc", "single-level particle marginal MCMC");
  auto* mlpmcmc = app.add_subcommand("mlpmcmc", "multilevel particle marginal MCMC");
  auto* rate_study = app.add_subcommand("rate-study", "cost-versus-MSE study over the epsilon grid");
  auto* rate_fit = app.add_subcommand("rate-fit", "refit rate.csv from runs.csv and reference.csv");
  auto* validate = app.add_subcommand("validate", "Kalman-oracle and property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    cfg.validate();
    const fs::path dir = resolve_output_dir(cfg.out);
    fs::create_directories(dir);
    if (*simulate) return cmd_simulate(cfg, dir);
    if (*pmcmc) return cmd_pmcmc(cfg, dir);
    if (*mlpmcmc) return cmd_mlpmcmc(cfg, dir);
    if (*rate_study) return cmd_rate_study(cfg, dir);
    if (*rate_fit) return cmd_rate_fit(cfg, dir);
    if (*validate) return cmd_validate(cfg, dir);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
