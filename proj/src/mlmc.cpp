#include "mlpmcmc/mlmc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mlpmcmc {
namespace {

void require_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
}

Index ceil_positive(double value) {
  return std::max<Index>(1, static_cast<Index>(std::ceil(value)));
}

int finest_level(double epsilon) {
  return static_cast<int>(std::ceil(std::log2(1.0 / epsilon)));
}

FilterSettings settings_for(const LevelEntry& entry, InteractionEval eval) {
  return FilterSettings{entry.level, entry.law_particles, entry.filter_particles, eval};
}

}  // namespace

void LevelPlan::validate() const {
  if (l_star < 0) throw std::invalid_argument("level plan: l_star must be >= 0");
  if (finest <= l_star) throw std::invalid_argument("level plan: L must exceed l_star");
  if (levels.size() != static_cast<std::size_t>(finest - l_star + 1))
    throw std::invalid_argument("level plan: one entry per level l_star..L required");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& e = levels[i];
    if (e.level != l_star + static_cast<int>(i))
      throw std::invalid_argument("level plan: levels must be consecutive and increasing");
    if (e.law_particles < 1 || e.iterations < 1 || e.filter_particles < 1)
      throw std::invalid_argument("level plan: N, I and M must all be >= 1");
  }
}

LevelPlan make_level_plan(const ScheduleInputs& in) {
  require_epsilon(in.epsilon);
  if (in.l_star < 0) throw std::invalid_argument("l_star must be non-negative");
  if (!(in.c_iterations > 0.0) || !(in.c_particles > 0.0))
    throw std::invalid_argument("schedule constants must be positive");

  LevelPlan plan;
  plan.epsilon = in.epsilon;
  plan.l_star = in.l_star;
  plan.finest = finest_level(in.epsilon);
  if (plan.finest <= in.l_star) {
    plan.finest = in.l_star + 1;
    plan.clamped = true;
  }
  const double inv_eps2 = 1.0 / (in.epsilon * in.epsilon);
  for (int l = plan.l_star; l <= plan.finest; ++l) {
    const double delta = step_size(l);
    plan.levels.push_back(LevelEntry{
        l,
        ceil_positive(in.c_particles * inv_eps2 * std::pow(delta, 0.5)),
        ceil_positive(in.c_iterations * inv_eps2 * std::pow(delta, 6.0 / 7.0)),
        std::max<Index>(1, in.filter_particles),
    });
  }
  plan.validate();
  return plan;
}

LevelEntry make_single_level_entry(const ScheduleInputs& in) {
  require_epsilon(in.epsilon);
  const double inv_eps2 = 1.0 / (in.epsilon * in.epsilon);
  return LevelEntry{std::max(0, finest_level(in.epsilon)), ceil_positive(in.c_particles * inv_eps2),
                    ceil_positive(in.c_iterations * inv_eps2),
                    std::max<Index>(1, in.filter_particles)};
}

double cost_units(const LevelEntry& e) {
  const auto n = static_cast<double>(e.law_particles);
  return static_cast<double>(e.iterations) * static_cast<double>(steps_per_unit(e.level)) *
         (static_cast<double>(e.filter_particles) * n + n * n);
}

double cost_units(const LevelPlan& plan) {
  double total = 0.0;
  for (const auto& e : plan.levels) total += cost_units(e);
  return total;
}

RandomStream level_stream(const RandomStream& stream, int level) {
  return stream.child(static_cast<std::uint64_t>(level));
}

MlmcResult combine_levels(std::vector<ChainTrace> traces, const LevelPlan& plan,
                          const std::vector<Functional>& functionals) {
  if (traces.size() != plan.levels.size())
    throw std::invalid_argument("combine_levels: one trace per plan level required");
  MlmcResult result;
  result.total_cost_units = cost_units(plan);
  for (const auto& phi : functionals) {
    std::vector<double> parts;
    parts.reserve(traces.size());
    parts.push_back(estimate_single(traces.front(), phi));
    for (std::size_t i = 1; i < traces.size(); ++i)
      parts.push_back(estimate_bilevel_difference(traces[i], phi));
    double total = 0.0;
    for (double v : parts) total += v;
    result.estimate.push_back(total);
    result.contributions.push_back(std::move(parts));
  }
  result.traces = std::move(traces);
  return result;
}

MlmcResult mlmc_estimate(const ModelSpec& model, const ObservationSeries& obs, const LevelPlan& plan,
                         const std::vector<Functional>& functionals, const ProposalSpec& proposal,
                         const RandomStream& stream, const MlmcOptions& options) {
  plan.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = plan.levels.size();
  std::vector<ChainTrace> traces(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_level = [&](std::size_t i) {
    const LevelEntry& e = plan.levels[i];
    try {
      const RandomStream s = level_stream(stream, e.level);
      const FilterSettings settings = settings_for(e, options.eval);
      traces[i] = (i == 0) ? run_single_level(model, obs, settings, e.iterations, proposal, s)
                           : run_bilevel(model, obs, settings, e.iterations, proposal, s);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (options.threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_level(i);
  } else {
    std::vector<std::jthread> workers;
    std::atomic<std::size_t> next{0};
    const unsigned count = std::min<unsigned>(options.threads, static_cast<unsigned>(n));
    for (unsigned w = 0; w < count; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_level(i);
      });
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "level " << plan.levels[i].level << ": " << e.what();
      if (dynamic_cast<const NumericalError*>(&e) != nullptr) throw NumericalError(msg.str());
      throw std::runtime_error(msg.str());
    }
  }

  MlmcResult result = combine_levels(std::move(traces), plan, functionals);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace mlpmcmc
