#ifndef MLPMCMC_MLMC_HPP
#define MLPMCMC_MLMC_HPP

#include <vector>

#include "mlpmcmc/filters.hpp"
#include "mlpmcmc/mcmc.hpp"
#include "mlpmcmc/model.hpp"
#include "mlpmcmc/rng.hpp"

namespace mlpmcmc {

/// Per-level budget: chain length I, law particles N, filter particles M.
struct LevelEntry {
  int level = 0;
  Index law_particles = 1;
  Index iterations = 1;
  Index filter_particles = 2;
};

/// Base level l_star followed by increment levels l_star + 1 .. L.
struct LevelPlan {
  int l_star = 0;
  int finest = 1;
  std::vector<LevelEntry> levels;
  double epsilon = 0.0;
  /// The schedule's L was raised to l_star + 1.
  bool clamped = false;

  void validate() const;
};

struct ScheduleInputs {
  double epsilon = 0.1;
  int l_star = 2;
  double c_iterations = 1.0;
  double c_particles = 1.0;
  /// M_l for every level (conventionally T).
  Index filter_particles = 2;
};

/// L = ceil(log2(1/eps)) (raised to l_star + 1 if needed),
/// I_l = ceil(c_I eps^-2 Delta_l^(6/7)), N_l = ceil(c_N eps^-2 Delta_l^(1/2)).
LevelPlan make_level_plan(const ScheduleInputs& inputs);

/// Single-level comparator at L = ceil(log2(1/eps)) with
/// I = ceil(c_I eps^-2), N = ceil(c_N eps^-2).
LevelEntry make_single_level_entry(const ScheduleInputs& inputs);

/// I Delta_l^-1 (M N + N^2).
double cost_units(const LevelEntry& entry);
/// Sum of cost_units over the plan's levels.
double cost_units(const LevelPlan& plan);

struct MlmcOptions {
  InteractionEval eval = InteractionEval::kAuto;
  /// Worker threads for the independent level chains; 1 runs them in order.
  unsigned threads = 1;
};

struct MlmcResult {
  /// One entry per functional.
  std::vector<double> estimate;
  /// contributions[f][0] is the base estimate, [f][i] the increment at
  /// level l_star + i.
  std::vector<std::vector<double>> contributions;
  double total_cost_units = 0.0;
  double wall_time_seconds = 0.0;
  /// traces[0] is the base chain, traces[i] the bi-level chain at l_star + i.
  std::vector<ChainTrace> traces;
};

/// Level l's chain draws only from stream.child(l).
RandomStream level_stream(const RandomStream& stream, int level);

/// Runs the base chain and every bi-level chain independently and combines
/// base + sum of increments per functional.
MlmcResult mlmc_estimate(const ModelSpec& model, const ObservationSeries& obs, const LevelPlan& plan,
                         const std::vector<Functional>& functionals, const ProposalSpec& proposal,
                         const RandomStream& stream, const MlmcOptions& options = {});

/// Combines finished traces; exposed so the bookkeeping can be checked alone.
MlmcResult combine_levels(std::vector<ChainTrace> traces, const LevelPlan& plan,
                          const std::vector<Functional>& functionals);

}  // namespace mlpmcmc

#endif  // MLPMCMC_MLMC_HPP
