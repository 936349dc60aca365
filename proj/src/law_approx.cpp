#include "mlpmcmc/law_approx.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mlpmcmc {
namespace {

using FeatureBuffer = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, SeparableInteraction::kMaxRank, 1>;

void require_counts(int level, Index N, Index T) {
  if (level < 0) throw std::invalid_argument("level must be non-negative");
  if (N < 1) throw std::invalid_argument("particle count N must be positive");
  if (T < 1) throw std::invalid_argument("horizon T must be positive");
}

[[noreturn]] void throw_blowup(Index t, Index k, Index steps) {
  std::ostringstream msg;
  msg << "non-finite particle state at grid time " << (t - 1) << " + " << k << "/" << steps;
  throw NumericalError(msg.str());
}

}  // namespace

EmpiricalLaw::EmpiricalLaw(Matrix particles) : particles_(std::move(particles)) {}

EmpiricalLaw::EmpiricalLaw(Matrix particles, const ModelSpec& model, const Parameter& param,
                           InteractionEval eval)
    : particles_(std::move(particles)) {
  if (eval != InteractionEval::kAuto || !model.separable || particles_.cols() == 0) return;
  const auto& sep = *model.separable;
  feature_mean_ = Vector::Zero(sep.rank);
  has_feature_mean_ = true;
  if (sep.rank == 0) return;
  FeatureBuffer buffer(sep.rank);
  for (Index j = 0; j < particles_.cols(); ++j) {
    sep.right(param, particles_.col(j), buffer);
    feature_mean_ += buffer;
  }
  feature_mean_ /= static_cast<double>(particles_.cols());
}

EmpiricalLaw EmpiricalLaw::dirac(ConstVectorRef x, Index count, const ModelSpec& model,
                                 const Parameter& param, InteractionEval eval) {
  return EmpiricalLaw(x.replicate(1, count), model, param, eval);
}

LawGrid::LawGrid(int level, Index particles, Index horizon)
    : level_(level), particles_(particles), horizon_(horizon) {
  laws_.reserve(static_cast<std::size_t>(horizon * steps_per_unit(level) + 1));
}

std::span<const EmpiricalLaw> LawGrid::interval_inputs(Index t) const {
  if (t < 1 || t > horizon_) throw std::out_of_range("unit interval index out of range");
  const auto steps = static_cast<std::size_t>(steps_per_interval());
  return std::span<const EmpiricalLaw>(laws_).subspan(static_cast<std::size_t>(t - 1) * steps, steps);
}

std::span<const EmpiricalLaw> LawGrid::interval_outputs(Index t) const {
  if (t < 1 || t > horizon_) throw std::out_of_range("unit interval index out of range");
  const auto steps = static_cast<std::size_t>(steps_per_interval());
  return std::span<const EmpiricalLaw>(laws_).subspan(static_cast<std::size_t>(t - 1) * steps + 1, steps);
}

double mean_field_direct(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                         const EmpiricalLaw& law) {
  if (law.empty()) throw std::invalid_argument("mean_field: empirical law is empty");
  double total = 0.0;
  for (Index j = 0; j < law.size(); ++j) total += model.interaction(param, x, law.particle(j));
  return total / static_cast<double>(law.size());
}

double mean_field(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                  const EmpiricalLaw& law) {
  if (law.empty()) throw std::invalid_argument("mean_field: empirical law is empty");
  if (!law.has_feature_mean()) return mean_field_direct(model, param, x, law);
  const auto& sep = *model.separable;
  if (sep.rank == 0) return 0.0;
  FeatureBuffer left(sep.rank);
  sep.left(param, x, left);
  return left.dot(law.feature_mean());
}

void euler_step_into(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                     const EmpiricalLaw& law, double dt, ConstVectorRef dW, EulerWorkspace& work,
                     VectorRef out) {
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
  model.drift(param, x, mean_field(model, param, x, law), work.drift);
  if (!work.diffusion_cached) {
    model.diffusion(param, x, work.diffusion);
    work.diffusion_cached = model.constant_diffusion;
  }
  if (x.size() == 1) {
    out[0] = x[0] + dt * work.drift[0] + work.diffusion(0, 0) * dW[0];
    if (!std::isfinite(out[0])) throw NumericalError("euler_step: non-finite state");
    return;
  }
  out = x + dt * work.drift;
  out.noalias() += work.diffusion * dW;
  if (!out.allFinite()) throw NumericalError("euler_step: non-finite state");
}

Vector euler_step(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                  const EmpiricalLaw& law, double dt, ConstVectorRef dW) {
  EulerWorkspace work(model.dim);
  Vector out(model.dim);
  euler_step_into(model, param, x, law, dt, dW, work, out);
  return out;
}

void brownian_increments(const RandomStream& step_stream, double dt, MatrixRef out) {
  if (out.outerStride() != out.rows())
    throw std::invalid_argument("brownian_increments: output must be contiguous");
  step_stream.fill_normals(0, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  out *= std::sqrt(dt);
}

Matrix advance_cloud(const ModelSpec& model, const Parameter& param, const EmpiricalLaw& law,
                     double dt, ConstMatrixRef increments) {
  Matrix next(law.dim(), law.size());
  EulerWorkspace work(law.dim());
  for (Index i = 0; i < law.size(); ++i)
    euler_step_into(model, param, law.particle(i), law, dt, increments.col(i), work, next.col(i));
  return next;
}

LawGrid approximate_laws(const ModelSpec& model, const Parameter& param, int level, Index N,
                         Index T, const RandomStream& stream, InteractionEval eval) {
  require_counts(level, N, T);
  const Index steps = steps_per_unit(level);
  const double dt = step_size(level);

  LawGrid grid(level, N, T);
  grid.push(EmpiricalLaw::dirac(model.x0, N, model, param, eval));
  Matrix increments(model.dim, N);
  for (Index t = 1; t <= T; ++t) {
    for (Index k = 1; k <= steps; ++k) {
      brownian_increments(law_step_stream(stream, t, k), dt, increments);
      try {
        grid.push(EmpiricalLaw(advance_cloud(model, param, grid.terminal(), dt, increments), model,
                               param, eval));
      } catch (const NumericalError&) {
        throw_blowup(t, k, steps);
      }
    }
  }
  return grid;
}

CoupledLawGrid approximate_coupled_laws(const ModelSpec& model, const Parameter& param, int level,
                                        Index N, Index T, const RandomStream& stream,
                                        InteractionEval eval) {
  if (level < 1) throw std::invalid_argument("approximate_coupled_laws: level must be >= 1");
  require_counts(level, N, T);
  const Index fine_steps = steps_per_unit(level);
  const double fine_dt = step_size(level);
  const double coarse_dt = step_size(level - 1);

  CoupledLawGrid grids{LawGrid(level, N, T), LawGrid(level - 1, N, T)};
  grids.fine.push(EmpiricalLaw::dirac(model.x0, N, model, param, eval));
  grids.coarse.push(EmpiricalLaw::dirac(model.x0, N, model, param, eval));

  // Fine increments of the current unit interval only.
  std::vector<Matrix> increments(static_cast<std::size_t>(fine_steps), Matrix(model.dim, N));
  Matrix coarse_increment(model.dim, N);
  for (Index t = 1; t <= T; ++t) {
    for (Index k = 1; k <= fine_steps; ++k) {
      auto& dW = increments[static_cast<std::size_t>(k - 1)];
      brownian_increments(law_step_stream(stream, t, k), fine_dt, dW);
      try {
        grids.fine.push(EmpiricalLaw(advance_cloud(model, param, grids.fine.terminal(), fine_dt, dW),
                                     model, param, eval));
      } catch (const NumericalError&) {
        throw_blowup(t, k, fine_steps);
      }
    }
    for (Index k = 1; k <= fine_steps / 2; ++k) {
      coarse_increment = increments[static_cast<std::size_t>(2 * k - 2)] +
                         increments[static_cast<std::size_t>(2 * k - 1)];
      try {
        grids.coarse.push(EmpiricalLaw(
            advance_cloud(model, param, grids.coarse.terminal(), coarse_dt, coarse_increment), model,
            param, eval));
      } catch (const NumericalError&) {
        throw_blowup(t, 2 * k, fine_steps);
      }
    }
  }
  return grids;
}

}  // namespace mlpmcmc
