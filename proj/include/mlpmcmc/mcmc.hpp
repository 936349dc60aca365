#ifndef MLPMCMC_MCMC_HPP
#define MLPMCMC_MCMC_HPP

#include <functional>
#include <vector>

#include "mlpmcmc/filters.hpp"
#include "mlpmcmc/model.hpp"
#include "mlpmcmc/rng.hpp"
#include "mlpmcmc/types.hpp"

namespace mlpmcmc {

/// Gaussian random walk with diagonal covariance diag(step_sizes^2).
struct ProposalSpec {
  Vector step_sizes;

  void validate(Index parameter_dim) const;
  [[nodiscard]] Parameter propose(const Parameter& current, RandomStream& stream) const;
};

struct ChainState {
  Parameter param;
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  std::vector<PathSegment> path;
  /// Level l-1 component of a bi-level state; empty for single-level chains.
  std::vector<PathSegment> coarse_path;
};

struct Transition {
  ChainState state;
  bool accepted = false;
  /// False when the filter failed at the proposal (counted as a rejection).
  bool proposal_valid = true;
  double log_accept_ratio = 0.0;
};

/// log of [p(y|theta') nu(theta')] / [p(y|theta) nu(theta)]; the random-walk
/// proposal densities cancel.
double log_acceptance_ratio(double log_like_current, double log_prior_current,
                            double log_like_proposed, double log_prior_proposed);
/// Z < min(1, exp(log_ratio)) for Z = uniform.
bool metropolis_accept(double log_ratio, double uniform);

/// One particle-marginal Metropolis-Hastings step at a single level.
Transition pmmh_step(const ChainState& state, const ModelSpec& model, const ObservationSeries& obs,
                     const FilterSettings& settings, const ProposalSpec& proposal,
                     const RandomStream& stream);

/// One bi-level step: as pmmh_step but driven by the delta particle filter.
Transition bilevel_pmmh_step(const ChainState& state, const ModelSpec& model,
                             const ObservationSeries& obs, const FilterSettings& settings,
                             const ProposalSpec& proposal, const RandomStream& stream);

/// One retained chain sample: parameter and states at observation times.
struct TraceEntry {
  Parameter param;
  double log_likelihood = 0.0;
  Matrix states;
  Matrix coarse_states;
  /// sum_k log check-H(x_k, x~_k) and sum_k log check-H(x~_k, x_k) (bi-level only).
  double log_weight_fine = 0.0;
  double log_weight_coarse = 0.0;
  bool accepted = false;
};

struct ChainTrace {
  int level = 0;
  bool bilevel = false;
  std::vector<TraceEntry> entries;
  Index acceptance_count = 0;
  Index filter_failures = 0;

  [[nodiscard]] Index size() const { return static_cast<Index>(entries.size()); }
  [[nodiscard]] Index iterations() const { return size() - 1; }
  [[nodiscard]] double acceptance_rate() const;
};

/// phi(theta, x_{1:T}); states is dim x T.
using Functional = std::function<double(const Parameter&, const Matrix& states)>;
Functional coordinate_functional(Index i);

/// Samples theta from the prior, runs the filter, then applies pmmh_step
/// `iterations` times. The trace holds iterations + 1 entries.
ChainTrace run_single_level(const ModelSpec& model, const ObservationSeries& obs,
                            const FilterSettings& settings, Index iterations,
                            const ProposalSpec& proposal, const RandomStream& stream);
ChainTrace run_bilevel(const ModelSpec& model, const ObservationSeries& obs,
                       const FilterSettings& settings, Index iterations,
                       const ProposalSpec& proposal, const RandomStream& stream);

/// Change-of-measure log weights of one coupled sample, as stored in TraceEntry.
std::pair<double, double> bilevel_log_weights(const ModelSpec& model, const Parameter& param,
                                              const ObservationSeries& obs, const Matrix& fine_states,
                                              const Matrix& coarse_states);

/// Plain average of phi over entries [burn_in, end).
double estimate_single(const ChainTrace& trace, const Functional& phi, Index burn_in = 0);

/// Self-normalized fine average minus self-normalized coarse average, using
/// the stored change-of-measure weights.
double estimate_bilevel_difference(const ChainTrace& trace, const Functional& phi,
                                   Index burn_in = 0);

}  // namespace mlpmcmc

#endif  // MLPMCMC_MCMC_HPP
