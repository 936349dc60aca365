#ifndef MLPMCMC_HARNESS_EXPERIMENTS_HPP
#define MLPMCMC_HARNESS_EXPERIMENTS_HPP

#include <functional>
#include <string>
#include <vector>

#include "mlpmcmc/harness/config.hpp"
#include "mlpmcmc/harness/rate.hpp"
#include "mlpmcmc/mlmc.hpp"

namespace mlpmcmc {

/// Runs body(0) .. body(count - 1) on up to `threads` workers. The first
/// exception thrown by any body is rethrown after all workers finish.
void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& body);

/// Reads cfg.obs if set, otherwise simulates T observations from the truth
/// with data_seed at data_level / data_particles.
ObservationSeries load_or_simulate(const ExperimentConfig& cfg, const ModelSpec& model);

/// Single-level chain at cfg.level with (N, M, iters) from the config.
ChainTrace run_pmcmc(const ExperimentConfig& cfg, const ModelSpec& model,
                     const ObservationSeries& obs);

/// Multilevel run at cfg.epsilon with the config's schedule constants.
MlmcResult run_mlpmcmc(const ExperimentConfig& cfg, const ModelSpec& model,
                       const ObservationSeries& obs, const LevelPlan& plan);

/// Single-level entry at the plan's finest level whose cost_units do not
/// exceed the plan's, using the largest N of the plan.
LevelEntry matched_single_level_entry(const LevelPlan& plan);

struct CredibleInterval {
  double lower = 0.0;
  double upper = 0.0;
  [[nodiscard]] bool covers(double value) const { return lower <= value && value <= upper; }
};

/// Equal-tailed interval from the empirical quantiles of coordinate `coord`
/// over entries [burn_in, end).
CredibleInterval credible_interval(const ChainTrace& trace, Index coord, Index burn_in,
                                   double mass = 0.95);

/// Posterior means from a single-level chain at the reference level
/// (finest single-level level + ref_level_offset) with ref_iter_factor times
/// the finest single-level iteration count.
std::vector<ReferenceRecord> reference_posterior_mean(const ExperimentConfig& cfg,
                                                      const ModelSpec& model,
                                                      const ObservationSeries& obs);

/// Replicated single-level and multilevel estimates of every parameter
/// coordinate over the epsilon grid. Method names are "pmcmc" and "mlpmcmc".
std::vector<RunRecord> rate_study_runs(const ExperimentConfig& cfg, const ModelSpec& model,
                                       const ObservationSeries& obs,
                                       const std::function<void(const std::string&)>& log = {});

}  // namespace mlpmcmc

#endif  // MLPMCMC_HARNESS_EXPERIMENTS_HPP
