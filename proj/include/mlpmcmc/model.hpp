#ifndef MLPMCMC_MODEL_HPP
#define MLPMCMC_MODEL_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "mlpmcmc/rng.hpp"
#include "mlpmcmc/types.hpp"

namespace mlpmcmc {

/// Static parameter in its natural (unconstrained) coordinates. For the
/// bundled models these are (theta, log sigma, log tau).
class Parameter {
 public:
  Parameter() = default;
  explicit Parameter(Vector values) : values_(std::move(values)) {}
  Parameter(std::initializer_list<double> values);

  [[nodiscard]] Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  double& operator[](Index i) { return values_[i]; }
  [[nodiscard]] const Vector& values() const { return values_; }
  [[nodiscard]] bool is_finite() const { return values_.allFinite(); }

  friend bool operator==(const Parameter& a, const Parameter& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Vector values_;
};

/// Independent Gaussian prior on every coordinate of a Parameter.
struct GaussianPrior {
  Vector mean;
  Vector sd;

  static GaussianPrior standard(Index dim);
  [[nodiscard]] double log_density(const Parameter& p) const;
  [[nodiscard]] Parameter sample(RandomStream& stream) const;
};

/// xi(x, x') = sum_k left_k(x) * right_k(x'). When a model supplies this, the
/// empirical mean of the right features can be cached once per law and the
/// mean field evaluated in O(rank) instead of O(N).
struct SeparableInteraction {
  static constexpr Index kMaxRank = 8;
  Index rank = 0;
  std::function<void(const Parameter&, ConstVectorRef x, VectorRef out)> left;
  std::function<void(const Parameter&, ConstVectorRef x, VectorRef out)> right;
};

/// Linear-Gaussian structure: drift theta * direction + drift_matrix * x,
/// diffusion sigma * diffusion_shape, observations N(observation_matrix * x, tau^2 I),
/// no interaction. Parameter = (theta, log sigma, log tau).
struct LinearGaussianSpec {
  Matrix drift_matrix;
  Vector drift_direction;
  Matrix diffusion_shape;
  Matrix observation_matrix;
  Vector x0;
};

/// A McKean-Vlasov SDE with an observation model and a prior.
///
///   dX_t = a(X_t, xibar(X_t, mu_t)) dt + sigma(X_t) dW_t,  Y_k | X_k ~ G(X_k, .)
///
/// Function members write into caller-provided storage so the particle loops
/// do not allocate.
struct ModelSpec {
  using DriftFn = std::function<void(const Parameter&, ConstVectorRef x, double mean_field, VectorRef out)>;
  using InteractionFn = std::function<double(const Parameter&, ConstVectorRef x, ConstVectorRef other)>;
  using DiffusionFn = std::function<void(const Parameter&, ConstVectorRef x, MatrixRef out)>;
  using ObsLogDensityFn = std::function<double(const Parameter&, ConstVectorRef x, ConstVectorRef y)>;
  using ObsSamplerFn = std::function<Vector(const Parameter&, ConstVectorRef x, RandomStream&)>;

  std::string name;
  Index dim = 1;
  Index obs_dim = 1;
  std::vector<std::string> parameter_names;

  DriftFn drift;
  InteractionFn interaction;
  std::optional<SeparableInteraction> separable;
  /// Declared sup-norm bound on the interaction kernel.
  double interaction_bound = 0.0;
  DiffusionFn diffusion;
  /// sigma(x) does not depend on x, so one evaluation per parameter suffices.
  bool constant_diffusion = false;
  ObsLogDensityFn obs_logdensity;
  ObsSamplerFn obs_sample;
  GaussianPrior prior;
  Vector x0;

  /// Present only for models the Kalman oracle can evaluate exactly.
  std::optional<LinearGaussianSpec> linear;

  [[nodiscard]] Index parameter_dim() const { return static_cast<Index>(parameter_names.size()); }
  [[nodiscard]] double prior_logdensity(const Parameter& p) const { return prior.log_density(p); }
  void validate() const;
};

struct KuramotoOptions {
  /// Hold sigma at `fixed_sigma`; the parameter vector is then (theta, log tau).
  bool sigma_fixed = false;
  double fixed_sigma = 0.2;
  bool interaction = true;
  double x0 = 1.0;
  std::optional<GaussianPrior> prior;
};

/// dX = (theta + E sin(X - X')) dt + sigma dW,  Y_k ~ N(X_k, tau^2).
ModelSpec kuramoto_model(const KuramotoOptions& options = {});
/// As kuramoto_model with diffusion sigma / (1 + x^2).
ModelSpec modified_kuramoto_model(const KuramotoOptions& options = {});
ModelSpec linear_gaussian_model(LinearGaussianSpec spec, std::optional<GaussianPrior> prior = {});
/// Resolves "kuramoto" / "modified_kuramoto".
ModelSpec model_by_name(const std::string& name, const KuramotoOptions& options = {});

/// sigma and tau for the bundled parameterizations.
double diffusion_scale(const ModelSpec& model, const Parameter& p);
double observation_scale(const ModelSpec& model, const Parameter& p);

/// Parameter from (theta, sigma, tau) in the model's own coordinates.
Parameter natural_parameter(const ModelSpec& model, double theta, double sigma, double tau);

struct ObservationSeries {
  std::vector<Vector> y;

  ObservationSeries() = default;
  explicit ObservationSeries(std::vector<Vector> values);

  [[nodiscard]] Index size() const { return static_cast<Index>(y.size()); }
  /// 1-based, matching observation times k = 1..T.
  [[nodiscard]] const Vector& at(Index k) const { return y.at(static_cast<std::size_t>(k - 1)); }
};

struct SimulatedData {
  ObservationSeries observations;
  /// Tracked latent state at unit times 1..T.
  std::vector<Vector> latent;
  int level = 0;
  Index law_particles = 0;
};

/// Reference-resolution defaults for data generation.
inline constexpr int kDataLevel = 10;
inline constexpr Index kDataParticles = 1000;

/// Simulates one tracked path of the particle-approximated Euler scheme at
/// `level` (driven by an N-particle law cloud) and observes it at unit times.
SimulatedData simulate_trajectory(const ModelSpec& model, const Parameter& truth, Index T, int level,
                                  Index N, std::uint64_t seed);
ObservationSeries simulate_data(const ModelSpec& model, const Parameter& truth, Index T,
                                int level = kDataLevel, Index N = kDataParticles,
                                std::uint64_t seed = 0);

}  // namespace mlpmcmc

#endif  // MLPMCMC_MODEL_HPP
