#ifndef MLPMCMC_LAW_APPROX_HPP
#define MLPMCMC_LAW_APPROX_HPP

#include <span>
#include <vector>

#include "mlpmcmc/model.hpp"
#include "mlpmcmc/rng.hpp"
#include "mlpmcmc/types.hpp"

namespace mlpmcmc {

/// How the interaction average is evaluated. `kAuto` uses the model's
/// separable form when it has one; `kDirect` always sums xi over the cloud.
enum class InteractionEval { kAuto, kDirect };

/// Uniform particle cloud (1/N) sum delta_{X^j}, stored column-wise (dim x N).
class EmpiricalLaw {
 public:
  EmpiricalLaw() = default;
  explicit EmpiricalLaw(Matrix particles);
  /// Builds the law and, if the model is separable and `eval` allows it,
  /// caches the mean of the right interaction features.
  EmpiricalLaw(Matrix particles, const ModelSpec& model, const Parameter& param,
               InteractionEval eval);

  /// N copies of x.
  static EmpiricalLaw dirac(ConstVectorRef x, Index count, const ModelSpec& model,
                            const Parameter& param, InteractionEval eval);

  [[nodiscard]] Index size() const { return particles_.cols(); }
  [[nodiscard]] Index dim() const { return particles_.rows(); }
  [[nodiscard]] bool empty() const { return particles_.cols() == 0; }
  [[nodiscard]] const Matrix& particles() const { return particles_; }
  [[nodiscard]] auto particle(Index j) const { return particles_.col(j); }

  [[nodiscard]] bool has_feature_mean() const { return has_feature_mean_; }
  [[nodiscard]] const Vector& feature_mean() const { return feature_mean_; }

 private:
  Matrix particles_;
  Vector feature_mean_;
  bool has_feature_mean_ = false;
};

/// Laws on the grid 0, Delta_l, 2 Delta_l, ..., T. Index 0 is the initial
/// Dirac cloud at x0; every unit interval contributes 2^level further laws.
class LawGrid {
 public:
  LawGrid() = default;
  LawGrid(int level, Index particles, Index horizon);

  [[nodiscard]] int level() const { return level_; }
  [[nodiscard]] Index steps_per_interval() const { return steps_per_unit(level_); }
  [[nodiscard]] Index particle_count() const { return particles_; }
  [[nodiscard]] Index horizon() const { return horizon_; }
  [[nodiscard]] std::size_t size() const { return laws_.size(); }

  /// Law at grid time index * Delta_l.
  [[nodiscard]] const EmpiricalLaw& at(std::size_t index) const { return laws_.at(index); }
  /// The 2^level laws that drive the Euler steps of unit interval t (1-based):
  /// those at times t-1, t-1+Delta_l, ..., t-Delta_l.
  [[nodiscard]] std::span<const EmpiricalLaw> interval_inputs(Index t) const;
  /// The 2^level laws produced in unit interval t: times t-1+Delta_l, ..., t.
  [[nodiscard]] std::span<const EmpiricalLaw> interval_outputs(Index t) const;
  [[nodiscard]] const EmpiricalLaw& terminal() const { return laws_.back(); }

  void push(EmpiricalLaw law) { laws_.push_back(std::move(law)); }

 private:
  int level_ = 0;
  Index particles_ = 0;
  Index horizon_ = 0;
  std::vector<EmpiricalLaw> laws_;
};

struct CoupledLawGrid {
  LawGrid fine;
  LawGrid coarse;
};

/// (1/N) sum_j xi(x, X^j). Throws std::invalid_argument on an empty law.
double mean_field(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                  const EmpiricalLaw& law);
/// Always the O(N) sum, ignoring any cached features.
double mean_field_direct(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                         const EmpiricalLaw& law);

/// Scratch storage for repeated Euler steps at one parameter value. For
/// models with constant diffusion the matrix is evaluated on first use and
/// kept, so a workspace must not be reused across parameters.
struct EulerWorkspace {
  explicit EulerWorkspace(Index dim) : drift(dim), diffusion(dim, dim) {}
  Vector drift;
  Matrix diffusion;
  bool diffusion_cached = false;
};

/// x + a(x, xibar(x, law)) dt + sigma(x) dW, written into `out`.
/// Throws NumericalError if the result is not finite.
void euler_step_into(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                     const EmpiricalLaw& law, double dt, ConstVectorRef dW, EulerWorkspace& work,
                     VectorRef out);
Vector euler_step(const ModelSpec& model, const Parameter& param, ConstVectorRef x,
                  const EmpiricalLaw& law, double dt, ConstVectorRef dW);

/// Brownian increments N(0, dt I) for all N particles of one grid step.
/// Column i holds flat normals i*dim .. i*dim + dim - 1 of `step_stream`
/// (see RandomStream::fill_normals), scaled by sqrt(dt). `out` is dim x N.
void brownian_increments(const RandomStream& step_stream, double dt, MatrixRef out);

/// Advances every particle of `law` by one Euler step with the given
/// increments (dim x N); all particles read the same frozen `law`.
Matrix advance_cloud(const ModelSpec& model, const Parameter& param, const EmpiricalLaw& law,
                     double dt, ConstMatrixRef increments);

/// Random-stream layout shared by the single and coupled law approximations:
/// increments of fine step k (1-based) in unit interval t come from
/// stream.child(t, k), addressed by particle index.
inline RandomStream law_step_stream(const RandomStream& stream, Index t, Index k) {
  return stream.child(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k));
}

/// Interacting-particle approximation of the laws at level `level`, run
/// sequentially over unit intervals 1..T from the Dirac law at x0.
LawGrid approximate_laws(const ModelSpec& model, const Parameter& param, int level, Index N,
                         Index T, const RandomStream& stream,
                         InteractionEval eval = InteractionEval::kAuto);

/// Synchronously coupled approximation at levels `level` and `level - 1`:
/// the coarse cloud is driven by pairwise sums of the fine increments. The
/// fine grid is bit-identical to approximate_laws on the same stream.
CoupledLawGrid approximate_coupled_laws(const ModelSpec& model, const Parameter& param, int level,
                                        Index N, Index T, const RandomStream& stream,
                                        InteractionEval eval = InteractionEval::kAuto);

}  // namespace mlpmcmc

#endif  // MLPMCMC_LAW_APPROX_HPP
