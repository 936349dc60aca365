#ifndef MLPMCMC_FILTERS_HPP
#define MLPMCMC_FILTERS_HPP

#include <span>
#include <vector>

#include "mlpmcmc/law_approx.hpp"
#include "mlpmcmc/model.hpp"
#include "mlpmcmc/rng.hpp"
#include "mlpmcmc/types.hpp"

namespace mlpmcmc {

/// Fine-grid states x_{t-1+Delta_l}, ..., x_t of one unit interval, dim x 2^level.
struct PathSegment {
  int level = 0;
  Matrix states;

  [[nodiscard]] auto terminal() const { return states.col(states.cols() - 1); }
};

struct CoupledPathSegment {
  PathSegment fine;
  PathSegment coarse;
};

/// Discretization and particle counts shared by the filters and chains.
struct FilterSettings {
  int level = 0;
  /// N: particles of the law approximation.
  Index law_particles = 1;
  /// M: particles of the filter itself.
  Index filter_particles = 2;
  InteractionEval eval = InteractionEval::kAuto;

  void validate(bool coupled) const;
};

struct FilterOutput {
  double log_likelihood = 0.0;
  std::vector<PathSegment> path;
};

struct DeltaFilterOutput {
  double log_likelihood = 0.0;
  std::vector<CoupledPathSegment> path;
};

/// Optional per-run record, filled when a pointer is passed to a filter.
struct FilterDiagnostics {
  /// log((1/M) sum_j w_k^j) for k = 1..T.
  std::vector<double> log_mean_weights;
  /// Sum of the normalized resampling pmf at each k.
  std::vector<double> pmf_sums;
  std::vector<double> min_weights;
  std::vector<double> max_weights;
  /// ancestors[k-1][i]: index at time k-1 that particle i at time k continued
  /// from (ancestors[0] is the identity).
  std::vector<std::vector<Index>> ancestors;
  /// Terminal states per time: terminal_states[k-1] is dim x M.
  std::vector<Matrix> terminal_states;
  /// Fine-path terminal states for the delta filter's coarse component.
  std::vector<Matrix> coarse_terminal_states;
  Index selected = -1;
};

/// Chains 2^level Euler steps from x_prev through the frozen input laws of
/// one unit interval. Increment k is flat normals (k-1)*dim .. k*dim - 1 of
/// `stream` (RandomStream::fill_normals) times sqrt(Delta_l).
PathSegment sample_segment(const ModelSpec& model, const Parameter& param, ConstVectorRef x_prev,
                           std::span<const EmpiricalLaw> laws, const RandomStream& stream);

/// Synchronous coupling: the fine chain uses the increments sample_segment
/// would use on `stream`; the coarse chain uses their pairwise sums.
CoupledPathSegment sample_coupled_segment(const ModelSpec& model, const Parameter& param,
                                          ConstVectorRef x_prev_fine, ConstVectorRef x_prev_coarse,
                                          std::span<const EmpiricalLaw> fine_laws,
                                          std::span<const EmpiricalLaw> coarse_laws,
                                          const RandomStream& stream);

/// log H(x, x') = log((G(x, y) + G(x', y)) / 2), evaluated via log-sum-exp.
double log_h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                    ConstVectorRef x_other, ConstVectorRef y);
double h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                ConstVectorRef x_other, ConstVectorRef y);
/// log of G(x, y) / H(x, x'); the ratio lies in (0, 2).
double log_check_h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                          ConstVectorRef x_other, ConstVectorRef y);
double check_h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                      ConstVectorRef x_other, ConstVectorRef y);

/// log sum exp(values).
double log_sum_exp(std::span<const double> values);

/// Normalizes log weights into `pmf` and returns log((1/M) sum exp(log_w)).
/// Throws NumericalError if every weight is zero or any is NaN.
double normalize_log_weights(std::span<const double> log_weights, std::span<double> pmf);

/// `count` i.i.d. draws from `pmf`, returned in increasing order.
std::vector<Index> multinomial_resample(std::span<const double> pmf, Index count,
                                        RandomStream& stream);
Index sample_index(std::span<const double> pmf, RandomStream& stream);

/// Bootstrap particle filter at one level, resampling multinomially at every
/// observation time. Returns the log-likelihood estimate and one trajectory
/// drawn from the terminal weights.
FilterOutput particle_filter(const ModelSpec& model, const Parameter& param,
                             const ObservationSeries& obs, const FilterSettings& settings,
                             const RandomStream& stream, FilterDiagnostics* diagnostics = nullptr);

/// Coupled-pair particle filter at levels (level, level - 1) with averaged
/// weights H; returns its likelihood estimate and one coupled trajectory.
DeltaFilterOutput delta_particle_filter(const ModelSpec& model, const Parameter& param,
                                        const ObservationSeries& obs,
                                        const FilterSettings& settings, const RandomStream& stream,
                                        FilterDiagnostics* diagnostics = nullptr);

/// States at observation times, dim x T.
Matrix observation_states(std::span<const PathSegment> path);

}  // namespace mlpmcmc

#endif  // MLPMCMC_FILTERS_HPP
