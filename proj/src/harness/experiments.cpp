#include "mlpmcmc/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mlpmcmc/harness/csv.hpp"

namespace mlpmcmc {
namespace {

constexpr std::uint64_t kReferenceTag = 1;
constexpr std::uint64_t kRunsTag = 2;

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

std::vector<Functional> coordinate_functionals(const ModelSpec& model) {
  std::vector<Functional> f;
  for (Index i = 0; i < model.parameter_dim(); ++i) f.push_back(coordinate_functional(i));
  return f;
}

}  // namespace

void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& body) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    const auto n = std::min<Index>(threads, count);
    for (Index w = 0; w < n; ++w) {
      workers.emplace_back([&] {
        for (Index i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            const std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

ObservationSeries load_or_simulate(const ExperimentConfig& cfg, const ModelSpec& model) {
  if (!cfg.obs.empty()) {
    ObservationSeries obs = observations_from_table(read_csv(cfg.obs));
    return obs;
  }
  return simulate_data(model, cfg.truth(model), cfg.T, cfg.data_level, cfg.data_particles,
                       cfg.data_seed);
}

ChainTrace run_pmcmc(const ExperimentConfig& cfg, const ModelSpec& model,
                     const ObservationSeries& obs) {
  return run_single_level(model, obs, cfg.filter_settings(), cfg.iters, cfg.proposal(),
                          RandomStream(cfg.seed));
}

MlmcResult run_mlpmcmc(const ExperimentConfig& cfg, const ModelSpec& model,
                       const ObservationSeries& obs, const LevelPlan& plan) {
  MlmcOptions options;
  options.threads = cfg.threads;
  return mlmc_estimate(model, obs, plan, coordinate_functionals(model), cfg.proposal(),
                       RandomStream(cfg.seed), options);
}

LevelEntry matched_single_level_entry(const LevelPlan& plan) {
  plan.validate();
  LevelEntry e;
  e.level = plan.finest;
  for (const auto& l : plan.levels) e.law_particles = std::max(e.law_particles, l.law_particles);
  e.filter_particles = plan.levels.back().filter_particles;
  e.iterations = 1;
  const double per_iteration = cost_units(e);
  e.iterations = std::max<Index>(1, static_cast<Index>(std::floor(cost_units(plan) / per_iteration)));
  return e;
}

CredibleInterval credible_interval(const ChainTrace& trace, Index coord, Index burn_in, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw std::invalid_argument("credible_interval: mass in (0, 1)");
  if (burn_in < 0 || burn_in >= trace.size())
    throw std::invalid_argument("credible_interval: burn-in leaves no samples");
  std::vector<double> v;
  for (Index j = burn_in; j < trace.size(); ++j)
    v.push_back(trace.entries[static_cast<std::size_t>(j)].param[coord]);
  std::sort(v.begin(), v.end());
  const double tail = 0.5 * (1.0 - mass);
  return CredibleInterval{quantile_sorted(v, tail), quantile_sorted(v, 1.0 - tail)};
}

std::vector<ReferenceRecord> reference_posterior_mean(const ExperimentConfig& cfg,
                                                      const ModelSpec& model,
                                                      const ObservationSeries& obs) {
  const LevelEntry finest = make_single_level_entry(cfg.schedule(cfg.epsilons.back()));
  const FilterSettings settings{finest.level + cfg.ref_level_offset, finest.law_particles,
                                finest.filter_particles, InteractionEval::kAuto};
  const auto iterations =
      static_cast<Index>(std::ceil(cfg.ref_iter_factor * static_cast<double>(finest.iterations)));
  const ChainTrace trace = run_single_level(model, obs, settings, iterations, cfg.proposal(),
                                            RandomStream(cfg.seed).child(kReferenceTag));
  std::vector<ReferenceRecord> out;
  for (Index i = 0; i < model.parameter_dim(); ++i)
    out.push_back(ReferenceRecord{model.parameter_names[static_cast<std::size_t>(i)],
                                  estimate_single(trace, coordinate_functional(i))});
  return out;
}

std::vector<RunRecord> rate_study_runs(const ExperimentConfig& cfg, const ModelSpec& model,
                                       const ObservationSeries& obs,
                                       const std::function<void(const std::string&)>& log) {
  const auto n_eps = static_cast<Index>(cfg.epsilons.size());
  const Index R = cfg.replicates;
  const Index tasks = 2 * n_eps * R;
  const auto functionals = coordinate_functionals(model);
  const ProposalSpec proposal = cfg.proposal();
  const RandomStream root = RandomStream(cfg.seed).child(kRunsTag);

  // results[task] = (cost, estimate per coordinate)
  std::vector<std::pair<double, std::vector<double>>> results(static_cast<std::size_t>(tasks));
  std::mutex log_mutex;
  parallel_for(tasks, cfg.threads, [&](Index task) {
    const Index method = task / (n_eps * R);
    const Index e = (task / R) % n_eps;
    const Index r = task % R;
    const double eps = cfg.epsilons[static_cast<std::size_t>(e)];
    const RandomStream stream = root.child(static_cast<std::uint64_t>(method))
                                    .child(static_cast<std::uint64_t>(e))
                                    .child(static_cast<std::uint64_t>(r));
    auto& slot = results[static_cast<std::size_t>(task)];
    if (method == 0) {
      const LevelEntry entry = make_single_level_entry(cfg.schedule(eps));
      const FilterSettings settings{entry.level, entry.law_particles, entry.filter_particles,
                                    InteractionEval::kAuto};
      const ChainTrace trace =
          run_single_level(model, obs, settings, entry.iterations, proposal, stream);
      slot.first = cost_units(entry);
      for (const auto& phi : functionals) slot.second.push_back(estimate_single(trace, phi));
    } else {
      const LevelPlan plan = make_level_plan(cfg.schedule(eps));
      const MlmcResult res = mlmc_estimate(model, obs, plan, functionals, proposal, stream);
      slot.first = res.total_cost_units;
      slot.second = res.estimate;
    }
    if (log) {
      std::ostringstream msg;
      msg << (method == 0 ? "pmcmc" : "mlpmcmc") << " eps=" << eps << " replicate=" << r
          << " done";
      const std::lock_guard lock(log_mutex);
      log(msg.str());
    }
  });

  std::vector<RunRecord> runs;
  for (Index task = 0; task < tasks; ++task) {
    const Index method = task / (n_eps * R);
    const Index e = (task / R) % n_eps;
    const Index r = task % R;
    const auto& slot = results[static_cast<std::size_t>(task)];
    for (Index i = 0; i < model.parameter_dim(); ++i)
      runs.push_back(RunRecord{method == 0 ? "pmcmc" : "mlpmcmc",
                               model.parameter_names[static_cast<std::size_t>(i)],
                               cfg.epsilons[static_cast<std::size_t>(e)], r, slot.first,
                               slot.second[static_cast<std::size_t>(i)]});
  }
  return runs;
}

}  // namespace mlpmcmc
