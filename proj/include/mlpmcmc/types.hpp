#ifndef MLPMCMC_TYPES_HPP
#define MLPMCMC_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mlpmcmc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<Eigen::VectorXd>;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;
using MatrixRef = Eigen::Ref<Eigen::MatrixXd>;
using ConstMatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

/// A simulation or weight computation produced a non-finite value, or all
/// particle weights vanished. Callers that can recover (the MCMC kernels)
/// catch this specifically.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steps per unit time at discretization level `level`, i.e. 1 / Delta_l.
inline Index steps_per_unit(int level) {
  if (level < 0 || level > 30) throw std::invalid_argument("level must lie in [0, 30]");
  return Index{1} << level;
}

inline double step_size(int level) { return 1.0 / static_cast<double>(steps_per_unit(level)); }

}  // namespace mlpmcmc

#endif  // MLPMCMC_TYPES_HPP
