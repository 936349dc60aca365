#include "mlpmcmc/filters.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mlpmcmc {
namespace {

constexpr std::uint64_t kLawsTag = 1;
constexpr std::uint64_t kParticlesTag = 2;
constexpr std::uint64_t kResampleTag = 3;

constexpr double kLogHalf = -0.69314718055994530942;

using SegmentMap = Eigen::Map<Matrix>;

// x_prev -> out (dim x laws.size()); the fine increments are written to
// `increments` (dim x laws.size()) when it is non-null.
void propagate(const ModelSpec& model, const Parameter& param, ConstVectorRef x_prev,
               std::span<const EmpiricalLaw> laws, const RandomStream& stream, MatrixRef out,
               EulerWorkspace& work, Matrix* increments) {
  const auto steps = static_cast<Index>(laws.size());
  const double dt = 1.0 / static_cast<double>(steps);
  Matrix local;
  Matrix& dW = increments != nullptr ? *increments : local;
  dW.resize(model.dim, steps);
  stream.fill_normals(0, std::span<double>(dW.data(), static_cast<std::size_t>(dW.size())));
  dW *= std::sqrt(dt);
  for (Index k = 0; k < steps; ++k) {
    if (k == 0) {
      euler_step_into(model, param, x_prev, laws[0], dt, dW.col(0), work, out.col(0));
    } else {
      euler_step_into(model, param, out.col(k - 1), laws[static_cast<std::size_t>(k)], dt,
                      dW.col(k), work, out.col(k));
    }
  }
}

void propagate_coupled(const ModelSpec& model, const Parameter& param, ConstVectorRef x_fine,
                       ConstVectorRef x_coarse, std::span<const EmpiricalLaw> fine_laws,
                       std::span<const EmpiricalLaw> coarse_laws, const RandomStream& stream,
                       MatrixRef fine_out, MatrixRef coarse_out, EulerWorkspace& work,
                       Matrix& increments) {
  if (fine_laws.size() != 2 * coarse_laws.size())
    throw std::invalid_argument("coupled segment: fine laws must number twice the coarse laws");
  propagate(model, param, x_fine, fine_laws, stream, fine_out, work, &increments);
  const auto coarse_steps = static_cast<Index>(coarse_laws.size());
  const double dt = 1.0 / static_cast<double>(coarse_steps);
  Vector dW(model.dim);
  for (Index k = 0; k < coarse_steps; ++k) {
    dW = increments.col(2 * k) + increments.col(2 * k + 1);
    if (k == 0) {
      euler_step_into(model, param, x_coarse, coarse_laws[0], dt, dW, work, coarse_out.col(0));
    } else {
      euler_step_into(model, param, coarse_out.col(k - 1), coarse_laws[static_cast<std::size_t>(k)],
                      dt, dW, work, coarse_out.col(k));
    }
  }
}

[[noreturn]] void rethrow_at(const char* who, Index t, const std::exception& e) {
  std::ostringstream msg;
  msg << who << ": observation " << t << ": " << e.what();
  throw NumericalError(msg.str());
}

void record_weights(FilterDiagnostics* diag, double log_mean, std::span<const double> pmf,
                    std::span<const double> log_w) {
  if (diag == nullptr) return;
  diag->log_mean_weights.push_back(log_mean);
  diag->pmf_sums.push_back(std::accumulate(pmf.begin(), pmf.end(), 0.0));
  const auto [lo, hi] = std::minmax_element(log_w.begin(), log_w.end());
  diag->min_weights.push_back(std::exp(*lo));
  diag->max_weights.push_back(std::exp(*hi));
}

}  // namespace

void FilterSettings::validate(bool coupled) const {
  if (level < (coupled ? 1 : 0))
    throw std::invalid_argument(coupled ? "delta filter needs level >= 1" : "level must be >= 0");
  if (law_particles < 1) throw std::invalid_argument("law particle count N must be >= 1");
  if (filter_particles < 2) throw std::invalid_argument("filter particle count M must be >= 2");
}

PathSegment sample_segment(const ModelSpec& model, const Parameter& param, ConstVectorRef x_prev,
                           std::span<const EmpiricalLaw> laws, const RandomStream& stream) {
  const auto steps = static_cast<Index>(laws.size());
  if (steps < 1 || (steps & (steps - 1)) != 0)
    throw std::invalid_argument("sample_segment: law slice length must be a power of two");
  PathSegment segment{static_cast<int>(std::countr_zero(static_cast<std::uint64_t>(steps))),
                      Matrix(model.dim, steps)};
  EulerWorkspace work(model.dim);
  propagate(model, param, x_prev, laws, stream, segment.states, work, nullptr);
  return segment;
}

CoupledPathSegment sample_coupled_segment(const ModelSpec& model, const Parameter& param,
                                          ConstVectorRef x_prev_fine, ConstVectorRef x_prev_coarse,
                                          std::span<const EmpiricalLaw> fine_laws,
                                          std::span<const EmpiricalLaw> coarse_laws,
                                          const RandomStream& stream) {
  const auto steps = static_cast<Index>(fine_laws.size());
  if (steps < 2 || (steps & (steps - 1)) != 0)
    throw std::invalid_argument("sample_coupled_segment: fine slice length must be 2^l, l >= 1");
  const int level = static_cast<int>(std::countr_zero(static_cast<std::uint64_t>(steps)));
  CoupledPathSegment seg{PathSegment{level, Matrix(model.dim, steps)},
                         PathSegment{level - 1, Matrix(model.dim, steps / 2)}};
  EulerWorkspace work(model.dim);
  Matrix increments(model.dim, steps);
  propagate_coupled(model, param, x_prev_fine, x_prev_coarse, fine_laws, coarse_laws, stream,
                    seg.fine.states, seg.coarse.states, work, increments);
  return seg;
}

double log_h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                    ConstVectorRef x_other, ConstVectorRef y) {
  const double a = model.obs_logdensity(param, x, y);
  const double b = model.obs_logdensity(param, x_other, y);
  if (a == b) return a;
  const double hi = std::max(a, b);
  return kLogHalf + hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                ConstVectorRef x_other, ConstVectorRef y) {
  return std::exp(log_h_weight(model, param, x, x_other, y));
}

double log_check_h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                          ConstVectorRef x_other, ConstVectorRef y) {
  const double a = model.obs_logdensity(param, x, y);
  const double b = model.obs_logdensity(param, x_other, y);
  if (a == b) return 0.0;
  // G(x) / ((G(x) + G(x')) / 2) = 2 / (1 + exp(b - a)); log1p(exp(d)) kept finite for large d.
  const double d = b - a;
  const double softplus = d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
  return -kLogHalf - softplus;
}

double check_h_weight(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                      ConstVectorRef x_other, ConstVectorRef y) {
  return std::exp(log_check_h_weight(model, param, x, x_other, y));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(hi)) return hi;
  double total = 0.0;
  for (double v : values) total += std::exp(v - hi);
  return hi + std::log(total);
}

double normalize_log_weights(std::span<const double> log_weights, std::span<double> pmf) {
  if (log_weights.size() != pmf.size() || log_weights.empty())
    throw std::invalid_argument("normalize_log_weights: size mismatch");
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw NumericalError("invalid particle weight");
    hi = std::max(hi, v);
  }
  if (hi == -std::numeric_limits<double>::infinity())
    throw NumericalError("all particle weights are zero");
  double total = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    pmf[i] = std::exp(log_weights[i] - hi);
    total += pmf[i];
  }
  for (double& p : pmf) p /= total;
  return hi + std::log(total) - std::log(static_cast<double>(pmf.size()));
}

std::vector<Index> multinomial_resample(std::span<const double> pmf, Index count,
                                        RandomStream& stream) {
  if (pmf.empty()) throw std::invalid_argument("multinomial_resample: empty pmf");
  std::vector<double> u(static_cast<std::size_t>(count));
  for (double& v : u) v = stream.uniform();
  std::sort(u.begin(), u.end());
  std::vector<Index> out;
  out.reserve(u.size());
  const auto last = static_cast<Index>(pmf.size()) - 1;
  Index j = 0;
  double cumulative = pmf[0];
  for (double v : u) {
    while (v > cumulative && j < last) cumulative += pmf[static_cast<std::size_t>(++j)];
    out.push_back(j);
  }
  return out;
}

Index sample_index(std::span<const double> pmf, RandomStream& stream) {
  return multinomial_resample(pmf, 1, stream).front();
}

FilterOutput particle_filter(const ModelSpec& model, const Parameter& param,
                             const ObservationSeries& obs, const FilterSettings& settings,
                             const RandomStream& stream, FilterDiagnostics* diagnostics) {
  settings.validate(false);
  const Index T = obs.size();
  if (T < 1) throw std::invalid_argument("particle_filter: no observations");
  const Index M = settings.filter_particles;
  const Index d = model.dim;
  const Index steps = steps_per_unit(settings.level);

  const LawGrid laws = approximate_laws(model, param, settings.level, settings.law_particles, T,
                                        stream.child(kLawsTag), settings.eval);
  const RandomStream particle_stream = stream.child(kParticlesTag);
  RandomStream resample_stream = stream.child(kResampleTag);

  // segments[t-1] column i holds particle i's path over unit interval t.
  std::vector<Matrix> segments(static_cast<std::size_t>(T), Matrix(d * steps, M));
  std::vector<std::vector<Index>> ancestors(static_cast<std::size_t>(T));
  ancestors[0].resize(static_cast<std::size_t>(M));
  std::iota(ancestors[0].begin(), ancestors[0].end(), Index{0});

  std::vector<double> log_w(static_cast<std::size_t>(M));
  std::vector<double> pmf(static_cast<std::size_t>(M));
  EulerWorkspace work(d);
  double log_likelihood = 0.0;
  Index selected = 0;

  for (Index t = 1; t <= T; ++t) {
    const auto inputs = laws.interval_inputs(t);
    const RandomStream interval_stream = particle_stream.child(static_cast<std::uint64_t>(t));
    const auto& anc = ancestors[static_cast<std::size_t>(t - 1)];
    Matrix& current = segments[static_cast<std::size_t>(t - 1)];
    const Vector y = obs.at(t);
    try {
      for (Index i = 0; i < M; ++i) {
        SegmentMap out(current.col(i).data(), d, steps);
        if (t == 1) {
          propagate(model, param, model.x0, inputs, interval_stream.child(static_cast<std::uint64_t>(i)),
                    out, work, nullptr);
        } else {
          const Matrix& previous = segments[static_cast<std::size_t>(t - 2)];
          const auto a = anc[static_cast<std::size_t>(i)];
          propagate(model, param, previous.col(a).tail(d), inputs,
                    interval_stream.child(static_cast<std::uint64_t>(i)), out, work, nullptr);
        }
        log_w[static_cast<std::size_t>(i)] = model.obs_logdensity(param, current.col(i).tail(d), y);
      }
      const double log_mean = normalize_log_weights(log_w, pmf);
      log_likelihood += log_mean;
      record_weights(diagnostics, log_mean, pmf, log_w);
    } catch (const NumericalError& e) {
      rethrow_at("particle_filter", t, e);
    }
    if (diagnostics != nullptr) {
      Matrix terminal(d, M);
      for (Index i = 0; i < M; ++i) terminal.col(i) = current.col(i).tail(d);
      diagnostics->terminal_states.push_back(std::move(terminal));
    }
    if (t < T) {
      ancestors[static_cast<std::size_t>(t)] = multinomial_resample(pmf, M, resample_stream);
    } else {
      selected = sample_index(pmf, resample_stream);
    }
  }

  FilterOutput result;
  result.log_likelihood = log_likelihood;
  result.path.resize(static_cast<std::size_t>(T));
  Index b = selected;
  for (Index t = T; t >= 1; --t) {
    const Matrix& seg = segments[static_cast<std::size_t>(t - 1)];
    result.path[static_cast<std::size_t>(t - 1)] =
        PathSegment{settings.level, Eigen::Map<const Matrix>(seg.col(b).data(), d, steps)};
    b = ancestors[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(b)];
  }
  if (diagnostics != nullptr) {
    diagnostics->ancestors = std::move(ancestors);
    diagnostics->selected = selected;
  }
  return result;
}

DeltaFilterOutput delta_particle_filter(const ModelSpec& model, const Parameter& param,
                                        const ObservationSeries& obs,
                                        const FilterSettings& settings, const RandomStream& stream,
                                        FilterDiagnostics* diagnostics) {
  settings.validate(true);
  const Index T = obs.size();
  if (T < 1) throw std::invalid_argument("delta_particle_filter: no observations");
  const Index M = settings.filter_particles;
  const Index d = model.dim;
  const Index steps = steps_per_unit(settings.level);
  const Index coarse_steps = steps / 2;

  const CoupledLawGrid laws = approximate_coupled_laws(
      model, param, settings.level, settings.law_particles, T, stream.child(kLawsTag), settings.eval);
  const RandomStream particle_stream = stream.child(kParticlesTag);
  RandomStream resample_stream = stream.child(kResampleTag);

  std::vector<Matrix> fine(static_cast<std::size_t>(T), Matrix(d * steps, M));
  std::vector<Matrix> coarse(static_cast<std::size_t>(T), Matrix(d * coarse_steps, M));
  std::vector<std::vector<Index>> ancestors(static_cast<std::size_t>(T));
  ancestors[0].resize(static_cast<std::size_t>(M));
  std::iota(ancestors[0].begin(), ancestors[0].end(), Index{0});

  std::vector<double> log_w(static_cast<std::size_t>(M));
  std::vector<double> pmf(static_cast<std::size_t>(M));
  EulerWorkspace work(d);
  Matrix increments(d, steps);
  double log_likelihood = 0.0;
  Index selected = 0;

  for (Index t = 1; t <= T; ++t) {
    const auto fine_inputs = laws.fine.interval_inputs(t);
    const auto coarse_inputs = laws.coarse.interval_inputs(t);
    const RandomStream interval_stream = particle_stream.child(static_cast<std::uint64_t>(t));
    const auto& anc = ancestors[static_cast<std::size_t>(t - 1)];
    Matrix& fine_now = fine[static_cast<std::size_t>(t - 1)];
    Matrix& coarse_now = coarse[static_cast<std::size_t>(t - 1)];
    const Vector y = obs.at(t);
    try {
      for (Index i = 0; i < M; ++i) {
        SegmentMap fine_out(fine_now.col(i).data(), d, steps);
        SegmentMap coarse_out(coarse_now.col(i).data(), d, coarse_steps);
        const RandomStream s = interval_stream.child(static_cast<std::uint64_t>(i));
        if (t == 1) {
          propagate_coupled(model, param, model.x0, model.x0, fine_inputs, coarse_inputs, s, fine_out,
                            coarse_out, work, increments);
        } else {
          const auto a = anc[static_cast<std::size_t>(i)];
          propagate_coupled(model, param, fine[static_cast<std::size_t>(t - 2)].col(a).tail(d),
                            coarse[static_cast<std::size_t>(t - 2)].col(a).tail(d), fine_inputs,
                            coarse_inputs, s, fine_out, coarse_out, work, increments);
        }
        log_w[static_cast<std::size_t>(i)] =
            log_h_weight(model, param, fine_now.col(i).tail(d), coarse_now.col(i).tail(d), y);
      }
      const double log_mean = normalize_log_weights(log_w, pmf);
      log_likelihood += log_mean;
      record_weights(diagnostics, log_mean, pmf, log_w);
    } catch (const NumericalError& e) {
      rethrow_at("delta_particle_filter", t, e);
    }
    if (diagnostics != nullptr) {
      Matrix f(d, M), c(d, M);
      for (Index i = 0; i < M; ++i) {
        f.col(i) = fine_now.col(i).tail(d);
        c.col(i) = coarse_now.col(i).tail(d);
      }
      diagnostics->terminal_states.push_back(std::move(f));
      diagnostics->coarse_terminal_states.push_back(std::move(c));
    }
    if (t < T) {
      ancestors[static_cast<std::size_t>(t)] = multinomial_resample(pmf, M, resample_stream);
    } else {
      selected = sample_index(pmf, resample_stream);
    }
  }

  DeltaFilterOutput result;
  result.log_likelihood = log_likelihood;
  result.path.resize(static_cast<std::size_t>(T));
  Index b = selected;
  for (Index t = T; t >= 1; --t) {
    const Matrix& f = fine[static_cast<std::size_t>(t - 1)];
    const Matrix& c = coarse[static_cast<std::size_t>(t - 1)];
    auto& seg = result.path[static_cast<std::size_t>(t - 1)];
    seg.fine = PathSegment{settings.level, Eigen::Map<const Matrix>(f.col(b).data(), d, steps)};
    seg.coarse = PathSegment{settings.level - 1, Eigen::Map<const Matrix>(c.col(b).data(), d, coarse_steps)};
    b = ancestors[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(b)];
  }
  if (diagnostics != nullptr) {
    diagnostics->ancestors = std::move(ancestors);
    diagnostics->selected = selected;
  }
  return result;
}

Matrix observation_states(std::span<const PathSegment> path) {
  if (path.empty()) return {};
  Matrix out(path.front().states.rows(), static_cast<Index>(path.size()));
  for (std::size_t t = 0; t < path.size(); ++t) out.col(static_cast<Index>(t)) = path[t].terminal();
  return out;
}

}  // namespace mlpmcmc
