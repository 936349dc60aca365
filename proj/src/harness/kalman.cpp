#include "mlpmcmc/harness/kalman.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mlpmcmc {

UnitTransition unit_transition(const LinearGaussianSpec& spec, const Parameter& param, int level) {
  const Index d = spec.x0.size();
  const Index n = steps_per_unit(level);
  const double dt = step_size(level);
  const double sigma = std::exp(param[1]);

  // One Euler step: x' = F x + f + G dW,  dW ~ N(0, dt I).
  const Matrix F = Matrix::Identity(d, d) + dt * spec.drift_matrix;
  const Vector f = dt * param[0] * spec.drift_direction;
  const Matrix GGt = sigma * sigma * dt * spec.diffusion_shape * spec.diffusion_shape.transpose();

  UnitTransition tr{Matrix::Identity(d, d), Vector::Zero(d), Matrix::Zero(d, d)};
  for (Index k = 0; k < n; ++k) {
    tr.A = F * tr.A;
    tr.b = F * tr.b + f;
    tr.Q = F * tr.Q * F.transpose() + GGt;
  }
  return tr;
}

double kalman_oracle(const ModelSpec& model, const ObservationSeries& obs, const Parameter& param,
                     int level) {
  if (!model.linear) throw std::invalid_argument("kalman_oracle: model is not linear-Gaussian");
  if (param.size() != 3) throw std::invalid_argument("kalman_oracle: expected (theta, log sigma, log tau)");
  const LinearGaussianSpec& spec = *model.linear;
  const UnitTransition tr = unit_transition(spec, param, level);
  const Matrix& H = spec.observation_matrix;
  const double tau = std::exp(param[2]);
  const Index dy = H.rows();
  const Matrix R = tau * tau * Matrix::Identity(dy, dy);

  Vector m = spec.x0;
  Matrix P = Matrix::Zero(m.size(), m.size());
  double log_like = 0.0;
  for (Index k = 1; k <= obs.size(); ++k) {
    m = tr.A * m + tr.b;
    P = tr.A * P * tr.A.transpose() + tr.Q;

    const Vector r = obs.at(k) - H * m;
    const Matrix S = H * P * H.transpose() + R;
    const Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("kalman_oracle: innovation covariance not SPD");
    const Vector Sinv_r = llt.solve(r);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    log_like += -0.5 * (static_cast<double>(dy) * std::log(2.0 * std::numbers::pi) + log_det +
                        r.dot(Sinv_r));

    const Matrix K = llt.solve(H * P).transpose();
    m += K * r;
    P -= K * H * P;
    P = 0.5 * (P + P.transpose());
  }
  return log_like;
}

}  // namespace mlpmcmc
