#include "mlpmcmc/mcmc.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace mlpmcmc {
namespace {

constexpr std::uint64_t kInitTag = 0;
constexpr std::uint64_t kProposalTag = 1;
constexpr std::uint64_t kFilterTag = 2;
constexpr std::uint64_t kAcceptTag = 3;
constexpr int kMaxInitAttempts = 100;

ChainState make_state(Parameter param, double log_prior, FilterOutput out) {
  return ChainState{std::move(param), out.log_likelihood, log_prior, std::move(out.path), {}};
}

ChainState make_state(Parameter param, double log_prior, DeltaFilterOutput out) {
  ChainState state{std::move(param), out.log_likelihood, log_prior, {}, {}};
  state.path.reserve(out.path.size());
  state.coarse_path.reserve(out.path.size());
  for (auto& seg : out.path) {
    state.path.push_back(std::move(seg.fine));
    state.coarse_path.push_back(std::move(seg.coarse));
  }
  return state;
}

template <class Filter>
Transition metropolis_step(const ChainState& state, const ModelSpec& model,
                           const ProposalSpec& proposal, const RandomStream& stream,
                           Filter&& run_filter) {
  RandomStream proposal_stream = stream.child(kProposalTag);
  Parameter candidate = proposal.propose(state.param, proposal_stream);
  const double log_prior = model.prior_logdensity(candidate);

  Transition result;
  ChainState proposed;
  try {
    auto out = run_filter(candidate, stream.child(kFilterTag));
    proposed = make_state(std::move(candidate), log_prior, std::move(out));
  } catch (const NumericalError& e) {
    std::clog << "warning: filter failed at proposed parameter, rejecting: " << e.what() << '\n';
    result.state = state;
    result.proposal_valid = false;
    result.log_accept_ratio = -std::numeric_limits<double>::infinity();
    return result;
  }
  result.log_accept_ratio = log_acceptance_ratio(state.log_likelihood, state.log_prior,
                                                 proposed.log_likelihood, proposed.log_prior);
  RandomStream accept_stream = stream.child(kAcceptTag);
  result.accepted = metropolis_accept(result.log_accept_ratio, accept_stream.uniform());
  result.state = result.accepted ? std::move(proposed) : state;
  return result;
}

TraceEntry make_entry(const ChainState& state, bool accepted) {
  TraceEntry entry;
  entry.param = state.param;
  entry.log_likelihood = state.log_likelihood;
  entry.states = observation_states(state.path);
  if (!state.coarse_path.empty()) entry.coarse_states = observation_states(state.coarse_path);
  entry.accepted = accepted;
  return entry;
}

template <class Filter, class Step>
ChainTrace run_chain(const ModelSpec& model, const ObservationSeries& obs,
                     const FilterSettings& settings, Index iterations, const ProposalSpec& proposal,
                     const RandomStream& stream, bool bilevel, Filter&& run_filter, Step&& step) {
  if (iterations < 0) throw std::invalid_argument("iteration count must be non-negative");
  proposal.validate(model.parameter_dim());
  settings.validate(bilevel);

  ChainTrace trace;
  trace.level = settings.level;
  trace.bilevel = bilevel;
  trace.entries.reserve(static_cast<std::size_t>(iterations + 1));

  // Initial state: theta from the prior, then one filter run.
  const RandomStream init = stream.child(kInitTag);
  ChainState state;
  bool initialized = false;
  for (int attempt = 0; attempt < kMaxInitAttempts && !initialized; ++attempt) {
    const RandomStream s = init.child(static_cast<std::uint64_t>(attempt));
    RandomStream prior_stream = s.child(kProposalTag);
    Parameter theta = model.prior.sample(prior_stream);
    const double log_prior = model.prior_logdensity(theta);
    try {
      auto out = run_filter(theta, s.child(kFilterTag));
      state = make_state(std::move(theta), log_prior, std::move(out));
      initialized = true;
    } catch (const NumericalError& e) {
      std::clog << "warning: filter failed at initial prior draw, redrawing: " << e.what() << '\n';
    }
  }
  if (!initialized) throw NumericalError("could not initialize chain from the prior");

  auto record = [&](const ChainState& s, bool accepted) {
    TraceEntry entry = make_entry(s, accepted);
    if (bilevel) {
      std::tie(entry.log_weight_fine, entry.log_weight_coarse) =
          bilevel_log_weights(model, s.param, obs, entry.states, entry.coarse_states);
    }
    trace.entries.push_back(std::move(entry));
  };
  record(state, false);

  for (Index j = 1; j <= iterations; ++j) {
    Transition tr = step(state, stream.child(static_cast<std::uint64_t>(j)));
    if (tr.accepted) ++trace.acceptance_count;
    if (!tr.proposal_valid) ++trace.filter_failures;
    state = std::move(tr.state);
    record(state, tr.accepted);
  }
  return trace;
}

}  // namespace

void ProposalSpec::validate(Index parameter_dim) const {
  if (step_sizes.size() != parameter_dim)
    throw std::invalid_argument("proposal step sizes do not match the parameter dimension");
  if (!step_sizes.allFinite() || (step_sizes.array() <= 0.0).any())
    throw std::invalid_argument("proposal step sizes must be positive");
}

Parameter ProposalSpec::propose(const Parameter& current, RandomStream& stream) const {
  Vector next = current.values();
  for (Index i = 0; i < next.size(); ++i) next[i] += step_sizes[i] * stream.normal();
  return Parameter(std::move(next));
}

double log_acceptance_ratio(double log_like_current, double log_prior_current,
                            double log_like_proposed, double log_prior_proposed) {
  return (log_like_proposed - log_like_current) + (log_prior_proposed - log_prior_current);
}

bool metropolis_accept(double log_ratio, double uniform) {
  if (std::isnan(log_ratio)) return false;
  return std::log(uniform) < log_ratio;
}

Transition pmmh_step(const ChainState& state, const ModelSpec& model, const ObservationSeries& obs,
                     const FilterSettings& settings, const ProposalSpec& proposal,
                     const RandomStream& stream) {
  return metropolis_step(state, model, proposal, stream,
                         [&](const Parameter& p, const RandomStream& s) {
                           return particle_filter(model, p, obs, settings, s);
                         });
}

Transition bilevel_pmmh_step(const ChainState& state, const ModelSpec& model,
                             const ObservationSeries& obs, const FilterSettings& settings,
                             const ProposalSpec& proposal, const RandomStream& stream) {
  return metropolis_step(state, model, proposal, stream,
                         [&](const Parameter& p, const RandomStream& s) {
                           return delta_particle_filter(model, p, obs, settings, s);
                         });
}

double ChainTrace::acceptance_rate() const {
  const Index n = iterations();
  return n > 0 ? static_cast<double>(acceptance_count) / static_cast<double>(n) : 0.0;
}

Functional coordinate_functional(Index i) {
  return [i](const Parameter& p, const Matrix&) { return p[i]; };
}

ChainTrace run_single_level(const ModelSpec& model, const ObservationSeries& obs,
                            const FilterSettings& settings, Index iterations,
                            const ProposalSpec& proposal, const RandomStream& stream) {
  return run_chain(
      model, obs, settings, iterations, proposal, stream, false,
      [&](const Parameter& p, const RandomStream& s) {
        return particle_filter(model, p, obs, settings, s);
      },
      [&](const ChainState& st, const RandomStream& s) {
        return pmmh_step(st, model, obs, settings, proposal, s);
      });
}

ChainTrace run_bilevel(const ModelSpec& model, const ObservationSeries& obs,
                       const FilterSettings& settings, Index iterations,
                       const ProposalSpec& proposal, const RandomStream& stream) {
  return run_chain(
      model, obs, settings, iterations, proposal, stream, true,
      [&](const Parameter& p, const RandomStream& s) {
        return delta_particle_filter(model, p, obs, settings, s);
      },
      [&](const ChainState& st, const RandomStream& s) {
        return bilevel_pmmh_step(st, model, obs, settings, proposal, s);
      });
}

std::pair<double, double> bilevel_log_weights(const ModelSpec& model, const Parameter& param,
                                              const ObservationSeries& obs, const Matrix& fine_states,
                                              const Matrix& coarse_states) {
  if (fine_states.cols() != obs.size() || coarse_states.cols() != obs.size())
    throw std::invalid_argument("bilevel_log_weights: state/observation length mismatch");
  double fine = 0.0;
  double coarse = 0.0;
  for (Index k = 1; k <= obs.size(); ++k) {
    const auto x = fine_states.col(k - 1);
    const auto xc = coarse_states.col(k - 1);
    fine += log_check_h_weight(model, param, x, xc, obs.at(k));
    coarse += log_check_h_weight(model, param, xc, x, obs.at(k));
  }
  return {fine, coarse};
}

double estimate_single(const ChainTrace& trace, const Functional& phi, Index burn_in) {
  if (trace.entries.empty()) throw std::invalid_argument("estimate_single: empty trace");
  if (burn_in < 0 || burn_in >= trace.size())
    throw std::invalid_argument("estimate_single: burn-in leaves no samples");
  double total = 0.0;
  for (Index j = burn_in; j < trace.size(); ++j) {
    const auto& e = trace.entries[static_cast<std::size_t>(j)];
    total += phi(e.param, e.states);
  }
  return total / static_cast<double>(trace.size() - burn_in);
}

double estimate_bilevel_difference(const ChainTrace& trace, const Functional& phi, Index burn_in) {
  if (trace.entries.empty()) throw std::invalid_argument("estimate_bilevel_difference: empty trace");
  if (burn_in < 0 || burn_in >= trace.size())
    throw std::invalid_argument("estimate_bilevel_difference: burn-in leaves no samples");
  double max_fine = -std::numeric_limits<double>::infinity();
  double max_coarse = -std::numeric_limits<double>::infinity();
  for (Index j = burn_in; j < trace.size(); ++j) {
    const auto& e = trace.entries[static_cast<std::size_t>(j)];
    max_fine = std::max(max_fine, e.log_weight_fine);
    max_coarse = std::max(max_coarse, e.log_weight_coarse);
  }
  if (!std::isfinite(max_fine) || !std::isfinite(max_coarse))
    throw NumericalError("estimate_bilevel_difference: total weight is zero");

  double fine_num = 0.0, fine_den = 0.0, coarse_num = 0.0, coarse_den = 0.0;
  for (Index j = burn_in; j < trace.size(); ++j) {
    const auto& e = trace.entries[static_cast<std::size_t>(j)];
    const double wf = std::exp(e.log_weight_fine - max_fine);
    const double wc = std::exp(e.log_weight_coarse - max_coarse);
    fine_num += wf * phi(e.param, e.states);
    fine_den += wf;
    coarse_num += wc * phi(e.param, e.coarse_states.size() > 0 ? e.coarse_states : e.states);
    coarse_den += wc;
  }
  return fine_num / fine_den - coarse_num / coarse_den;
}

}  // namespace mlpmcmc
