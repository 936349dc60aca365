#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mlpmcmc/law_approx.hpp"
#include "mlpmcmc/model.hpp"

namespace mlpmcmc {

SimulatedData simulate_trajectory(const ModelSpec& model, const Parameter& truth, Index T, int level,
                                  Index N, std::uint64_t seed) {
  if (T < 1) throw std::invalid_argument("simulate_data: T must be positive");
  if (level < 0) throw std::invalid_argument("simulate_data: level must be non-negative");
  if (N < 1) throw std::invalid_argument("simulate_data: N must be positive");
  if (truth.size() != model.parameter_dim() || !truth.is_finite())
    throw std::invalid_argument("simulate_data: invalid true parameter");

  const RandomStream root(seed);
  const RandomStream cloud_stream = root.child(1);
  const RandomStream path_stream = root.child(2);
  const RandomStream obs_stream = root.child(3);

  const Index steps = steps_per_unit(level);
  const double dt = step_size(level);
  const double sqrt_dt = std::sqrt(dt);

  // The cloud is advanced in place; only the current law is kept.
  EmpiricalLaw law = EmpiricalLaw::dirac(model.x0, N, model, truth, InteractionEval::kAuto);
  Vector x = model.x0;
  Vector next(model.dim);
  Vector dW(model.dim);
  Matrix increments(model.dim, N);
  EulerWorkspace work(model.dim);

  SimulatedData data;
  data.level = level;
  data.law_particles = N;
  std::vector<Vector> y;
  y.reserve(static_cast<std::size_t>(T));
  data.latent.reserve(static_cast<std::size_t>(T));
  for (Index t = 1; t <= T; ++t) {
    const RandomStream interval = path_stream.child(static_cast<std::uint64_t>(t));
    for (Index k = 1; k <= steps; ++k) {
      interval.normals_at(static_cast<std::uint64_t>(k - 1),
                          std::span<double>(dW.data(), static_cast<std::size_t>(dW.size())));
      dW *= sqrt_dt;
      brownian_increments(law_step_stream(cloud_stream, t, k), dt, increments);
      try {
        euler_step_into(model, truth, x, law, dt, dW, work, next);
        law = EmpiricalLaw(advance_cloud(model, truth, law, dt, increments), model, truth,
                           InteractionEval::kAuto);
      } catch (const NumericalError&) {
        std::ostringstream msg;
        msg << "simulate_data: non-finite state in unit interval " << t << ", step " << k;
        throw NumericalError(msg.str());
      }
      x.swap(next);
    }
    RandomStream obs = obs_stream.child(static_cast<std::uint64_t>(t));
    data.latent.push_back(x);
    y.push_back(model.obs_sample(truth, x, obs));
  }
  data.observations = ObservationSeries(std::move(y));
  return data;
}

ObservationSeries simulate_data(const ModelSpec& model, const Parameter& truth, Index T, int level,
                                Index N, std::uint64_t seed) {
  return simulate_trajectory(model, truth, T, level, N, seed).observations;
}

}  // namespace mlpmcmc
