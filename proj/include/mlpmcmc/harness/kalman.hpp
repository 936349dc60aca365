#ifndef MLPMCMC_HARNESS_KALMAN_HPP
#define MLPMCMC_HARNESS_KALMAN_HPP

#include "mlpmcmc/model.hpp"

namespace mlpmcmc {

/// x_{t} = A x_{t-1} + b + w,  w ~ N(0, Q): the composition of the 2^level
/// Euler steps of one unit interval for a linear-Gaussian model.
struct UnitTransition {
  Matrix A;
  Vector b;
  Matrix Q;
};

UnitTransition unit_transition(const LinearGaussianSpec& spec, const Parameter& param, int level);

/// Exact log p(y_{1:T}) of the Euler-discretized linear-Gaussian model by
/// the Kalman recursion. Throws std::invalid_argument for models without a
/// linear-Gaussian structure.
double kalman_oracle(const ModelSpec& model, const ObservationSeries& obs, const Parameter& param,
                     int level);

}  // namespace mlpmcmc

#endif  // MLPMCMC_HARNESS_KALMAN_HPP
