#ifndef MLPMCMC_HARNESS_VALIDATION_HPP
#define MLPMCMC_HARNESS_VALIDATION_HPP

#include <cstdint>
#include <vector>

#include "mlpmcmc/model.hpp"

namespace mlpmcmc {

/// Scalar linear-Gaussian test model: dX = (theta - 0.5 X) dt + sigma dW,
/// Y ~ N(X, tau^2), X_0 = 1.
ModelSpec scalar_linear_model();

struct KalmanCheckSettings {
  int level = 6;
  Index filter_particles = 10000;
  Index T = 5;
  Index seeds = 5;
  std::uint64_t seed = 11;
};

struct KalmanCheckResult {
  double exact = 0.0;
  double mean_estimate = 0.0;
  std::vector<double> estimates;
  [[nodiscard]] double relative_error() const;
};

KalmanCheckResult check_kalman(const KalmanCheckSettings& settings);

struct CouplingCheckSettings {
  int min_level = 3;
  int max_level = 7;
  Index particles = 100;
  Index T = 1;
  Index seeds = 20;
  std::uint64_t seed = 5;
};

struct CouplingCheckResult {
  std::vector<int> levels;
  /// Mean over seeds of (1/N) sum_i |X^i_T - X~^i_T|^2.
  std::vector<double> mean_square;
  /// OLS slope of log2(mean_square) on level.
  double slope = 0.0;
};

CouplingCheckResult check_coupling_rate(const CouplingCheckSettings& settings);

struct WeightCheckResult {
  Index checks = 0;
  Index symmetry_failures = 0;
  Index range_failures = 0;
  Index identity_failures = 0;
  Index pmf_steps = 0;
  Index pmf_failures = 0;
  [[nodiscard]] Index failures() const {
    return symmetry_failures + range_failures + identity_failures + pmf_failures;
  }
};

/// `count` random (x, x', y, theta) draws checking H symmetry, check-H in
/// (0, 2) and check-H * H = G, plus pmf normalization at every step of
/// `filter_runs` single and delta filter runs.
WeightCheckResult check_weight_properties(Index count, Index filter_runs, std::uint64_t seed);

/// OLS slope of ys on xs.
double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace mlpmcmc

#endif  // MLPMCMC_HARNESS_VALIDATION_HPP
