#include "mlpmcmc/harness/validation.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "mlpmcmc/filters.hpp"
#include "mlpmcmc/harness/kalman.hpp"
#include "mlpmcmc/law_approx.hpp"

namespace mlpmcmc {

double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("ols_slope: need paired points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 1e-300)) throw std::invalid_argument("ols_slope: regressor values are all equal");
  return sxy / sxx;
}

ModelSpec scalar_linear_model() {
  LinearGaussianSpec spec;
  spec.drift_matrix = Matrix::Constant(1, 1, -0.5);
  spec.drift_direction = Vector::Ones(1);
  spec.diffusion_shape = Matrix::Identity(1, 1);
  spec.observation_matrix = Matrix::Identity(1, 1);
  spec.x0 = Vector::Ones(1);
  return linear_gaussian_model(std::move(spec));
}

double KalmanCheckResult::relative_error() const {
  return std::abs(mean_estimate - exact) / std::abs(exact);
}

KalmanCheckResult check_kalman(const KalmanCheckSettings& s) {
  const ModelSpec model = scalar_linear_model();
  const Parameter param{0.5, std::log(0.5), 0.0};
  const ObservationSeries obs = simulate_data(model, param, s.T, s.level, 1, s.seed);

  KalmanCheckResult result;
  result.exact = kalman_oracle(model, obs, param, s.level);
  const FilterSettings settings{s.level, 1, s.filter_particles, InteractionEval::kAuto};
  const RandomStream root = RandomStream(s.seed).child(1);
  for (Index i = 0; i < s.seeds; ++i) {
    const FilterOutput out =
        particle_filter(model, param, obs, settings, root.child(static_cast<std::uint64_t>(i)));
    result.estimates.push_back(out.log_likelihood);
  }
  result.mean_estimate = std::accumulate(result.estimates.begin(), result.estimates.end(), 0.0) /
                         static_cast<double>(result.estimates.size());
  return result;
}

CouplingCheckResult check_coupling_rate(const CouplingCheckSettings& s) {
  const ModelSpec model = kuramoto_model();
  const Parameter param = natural_parameter(model, 0.0, 0.2, 1.0);
  CouplingCheckResult result;
  std::vector<double> log2_ms;
  for (int l = s.min_level; l <= s.max_level; ++l) {
    double total = 0.0;
    for (Index seed = 0; seed < s.seeds; ++seed) {
      const RandomStream stream =
          RandomStream(s.seed).child(static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(seed));
      const CoupledLawGrid grid = approximate_coupled_laws(model, param, l, s.particles, s.T, stream);
      const Matrix diff = grid.fine.terminal().particles() - grid.coarse.terminal().particles();
      total += diff.colwise().squaredNorm().mean();
    }
    const double ms = total / static_cast<double>(s.seeds);
    result.levels.push_back(l);
    result.mean_square.push_back(ms);
    log2_ms.push_back(std::log2(ms));
  }
  std::vector<double> xs(result.levels.begin(), result.levels.end());
  result.slope = ols_slope(xs, log2_ms);
  return result;
}

WeightCheckResult check_weight_properties(Index count, Index filter_runs, std::uint64_t seed) {
  const ModelSpec model = kuramoto_model();
  WeightCheckResult result;
  RandomStream rng = RandomStream(seed).child(1);
  Vector x(1), xo(1), y(1);
  for (Index i = 0; i < count; ++i) {
    x[0] = 2.0 * rng.normal();
    xo[0] = 2.0 * rng.normal();
    y[0] = 2.0 * rng.normal();
    const Parameter p{rng.normal(), std::log(0.2), 2.0 * rng.uniform() - 1.0};
    const double h = h_weight(model, p, x, xo, y);
    const double h_swap = h_weight(model, p, xo, x, y);
    const double ch = check_h_weight(model, p, x, xo, y);
    const double ch_swap = check_h_weight(model, p, xo, x, y);
    const double g = std::exp(model.obs_logdensity(p, x, y));
    ++result.checks;
    if (std::abs(h - h_swap) > 1e-15 * h) ++result.symmetry_failures;
    // 0 < check-H < 2 read in log space, where neither order of the pair can
    // round to 0 or 2; the two orders must sum to 2.
    const double log_ch = log_check_h_weight(model, p, x, xo, y);
    const double log_ch_swap = log_check_h_weight(model, p, xo, x, y);
    const bool in_range = std::isfinite(log_ch) && std::isfinite(log_ch_swap) &&
                          log_ch < std::log(2.0) + 1e-15 && log_ch_swap < std::log(2.0) + 1e-15 &&
                          std::abs(ch + ch_swap - 2.0) <= 1e-15;
    if (!in_range) ++result.range_failures;
    if (!(std::abs(ch * h - g) <= 1e-12 * g)) ++result.identity_failures;
  }

  const Parameter truth = natural_parameter(model, 0.0, 0.2, 1.0);
  const ObservationSeries obs = simulate_data(model, truth, 10, 4, 50, seed);
  const FilterSettings settings{2, 20, 50, InteractionEval::kAuto};
  const RandomStream filter_root = RandomStream(seed).child(2);
  auto check_pmfs = [&](const FilterDiagnostics& d, double max_g) {
    for (std::size_t k = 0; k < d.pmf_sums.size(); ++k) {
      ++result.pmf_steps;
      const bool ok = std::abs(d.pmf_sums[k] - 1.0) <= 1e-12 && d.min_weights[k] >= 0.0 &&
                      d.max_weights[k] <= max_g;
      if (!ok) ++result.pmf_failures;
    }
  };
  for (Index r = 0; r < filter_runs; ++r) {
    RandomStream ps = filter_root.child(static_cast<std::uint64_t>(r), 0);
    const Parameter p{0.3 * ps.normal(), std::log(0.2) + 0.3 * ps.normal(), 0.3 * ps.normal()};
    const double max_g = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * std::exp(p[2]));
    FilterDiagnostics single, delta;
    particle_filter(model, p, obs, settings, filter_root.child(static_cast<std::uint64_t>(r), 1),
                    &single);
    delta_particle_filter(model, p, obs, settings,
                          filter_root.child(static_cast<std::uint64_t>(r), 2), &delta);
    check_pmfs(single, max_g);
    check_pmfs(delta, max_g);
  }
  return result;
}

}  // namespace mlpmcmc
