#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mlpmcmc/filters.hpp"
#include "mlpmcmc/harness/kalman.hpp"
#include "mlpmcmc/harness/validation.hpp"

using namespace mlpmcmc;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

ModelSpec drift_only_model() {
  LinearGaussianSpec s;
  s.drift_matrix = Matrix::Zero(1, 1);
  s.drift_direction = Vector::Ones(1);
  s.diffusion_shape = Matrix::Zero(1, 1);
  s.observation_matrix = Matrix::Identity(1, 1);
  s.x0 = Vector::Ones(1);
  return linear_gaussian_model(s);
}

ObservationSeries kuramoto_data(Index T, std::uint64_t seed) {
  const ModelSpec m = kuramoto_model();
  return simulate_data(m, natural_parameter(m, 0.0, 0.2, 1.0), T, 4, 50, seed);
}

double sample_variance(const std::vector<double>& xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - mean) * (x - mean);
  return v / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST_CASE("segment shapes and preconditions") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.0, 0.2, 1.0);
  const LawGrid l0 = approximate_laws(m, p, 0, 10, 2, RandomStream(1));
  const PathSegment s0 = sample_segment(m, p, m.x0, l0.interval_inputs(1), RandomStream(2));
  CHECK(s0.level == 0);
  CHECK(s0.states.cols() == 1);

  const LawGrid l3 = approximate_laws(m, p, 3, 10, 2, RandomStream(1));
  const PathSegment s3 = sample_segment(m, p, m.x0, l3.interval_inputs(2), RandomStream(2));
  CHECK(s3.level == 3);
  CHECK(s3.states.cols() == 8);
  CHECK(s3.terminal()[0] == s3.states(0, 7));

  CHECK_THROWS_AS(sample_segment(m, p, m.x0, l3.interval_inputs(1).first(3), RandomStream(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_coupled_segment(m, p, m.x0, m.x0, l0.interval_inputs(1),
                                         l0.interval_inputs(1).first(0), RandomStream(2)),
                  std::invalid_argument);
}

TEST_CASE("deterministic dynamics give a deterministic segment") {
  const ModelSpec m = drift_only_model();
  const Parameter p{0.0, 0.0, 0.0};
  const LawGrid laws = approximate_laws(m, p, 2, 3, 1, RandomStream(1));
  const PathSegment s = sample_segment(m, p, v1(-0.4), laws.interval_inputs(1), RandomStream(9));
  CHECK(s.states == Matrix::Constant(1, 4, -0.4));
}

TEST_CASE("coupled segment") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.1, 0.3, 1.0);
  const int level = 3;
  const CoupledLawGrid laws = approximate_coupled_laws(m, p, level, 20, 1, RandomStream(3));
  const RandomStream stream(4);
  const CoupledPathSegment c = sample_coupled_segment(
      m, p, v1(0.2), v1(0.25), laws.fine.interval_inputs(1), laws.coarse.interval_inputs(1), stream);
  CHECK(c.fine.level == 3);
  CHECK(c.coarse.level == 2);
  CHECK(c.coarse.states.cols() == 4);

  const PathSegment alone = sample_segment(m, p, v1(0.2), laws.fine.interval_inputs(1), stream);
  CHECK(alone.states == c.fine.states);

  std::vector<double> z(8);
  stream.fill_normals(0, z);
  const double sqrt_dt = std::sqrt(step_size(level));
  Vector x = v1(0.25);
  for (Index k = 0; k < 4; ++k) {
    const Vector dW = v1(z[static_cast<std::size_t>(2 * k)] * sqrt_dt + z[static_cast<std::size_t>(2 * k + 1)] * sqrt_dt);
    x = euler_step(m, p, x, laws.coarse.interval_inputs(1)[static_cast<std::size_t>(k)], step_size(level - 1), dW);
    CHECK(x[0] == c.coarse.states(0, k));
  }
}

TEST_CASE("free segment endpoint has mean x + theta and variance sigma^2") {
  KuramotoOptions o;
  o.interaction = false;
  const ModelSpec m = kuramoto_model(o);
  const double theta = 0.3, sigma = 0.2;
  const Parameter p = natural_parameter(m, theta, sigma, 1.0);
  const LawGrid laws = approximate_laws(m, p, 8, 4, 1, RandomStream(1));
  constexpr int n = 10000;
  std::vector<double> xs;
  xs.reserve(n);
  for (int i = 0; i < n; ++i)
    xs.push_back(sample_segment(m, p, v1(0.5), laws.interval_inputs(1), RandomStream(77).child(i)).terminal()[0]);
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  CHECK(std::abs(mean - 0.8) < 4.0 * sigma / std::sqrt(n));
  CHECK(std::abs(sample_variance(xs) / (sigma * sigma) - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("coupled segments converge at the strong rate") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.0, 0.2, 1.0);
  std::vector<double> levels, log_ms;
  for (int l = 2; l <= 7; ++l) {
    const CoupledLawGrid laws = approximate_coupled_laws(m, p, l, 50, 1, RandomStream(5).child(l));
    double ms = 0.0;
    constexpr int n = 1000;
    for (int i = 0; i < n; ++i) {
      const CoupledPathSegment c =
          sample_coupled_segment(m, p, m.x0, m.x0, laws.fine.interval_inputs(1),
                                 laws.coarse.interval_inputs(1), RandomStream(6).child(l, i));
      ms += std::pow(c.fine.terminal()[0] - c.coarse.terminal()[0], 2);
    }
    levels.push_back(l);
    log_ms.push_back(std::log2(ms / n));
  }
  CHECK(ols_slope(levels, log_ms) <= -0.8);
}

TEST_CASE("averaged and change-of-measure weights") {
  const ModelSpec m = kuramoto_model();
  const Parameter p{0.0, 0.0, 0.0};
  CHECK(h_weight(m, p, v1(0.0), v1(0.0), v1(0.0)) == doctest::Approx(phi(0.0)).epsilon(1e-14));
  CHECK(check_h_weight(m, p, v1(0.0), v1(0.0), v1(0.0)) == 1.0);

  const double h = 0.5 * (phi(0.0) + phi(1.0));
  CHECK(h_weight(m, p, v1(0.0), v1(1.0), v1(0.0)) == doctest::Approx(h).epsilon(1e-14));
  CHECK(h_weight(m, p, v1(1.0), v1(0.0), v1(0.0)) == doctest::Approx(h).epsilon(1e-14));
  CHECK(check_h_weight(m, p, v1(0.0), v1(1.0), v1(0.0)) == doctest::Approx(phi(0.0) / h).epsilon(1e-14));
  CHECK(check_h_weight(m, p, v1(0.0), v1(1.0), v1(0.0)) + check_h_weight(m, p, v1(1.0), v1(0.0), v1(0.0)) ==
        doctest::Approx(2.0).epsilon(1e-14));

  // Far apart: the ratio saturates at 2 in double precision, but its
  // complement stays positive in log space.
  CHECK(check_h_weight(m, p, v1(0.0), v1(100.0), v1(0.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(log_check_h_weight(m, p, v1(100.0), v1(0.0), v1(0.0)) ==
        doctest::Approx(std::log(2.0) - 5000.0).epsilon(1e-15));
  CHECK(std::isfinite(log_h_weight(m, p, v1(0.0), v1(100.0), v1(0.0))));

  const WeightCheckResult r = check_weight_properties(2000, 1, 3);
  CHECK(r.checks == 2000);
  CHECK(r.failures() == 0);
}

TEST_CASE("log-sum-exp and weight normalization") {
  const std::vector<double> a{0.0, std::log(3.0)};
  CHECK(log_sum_exp(a) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp(std::vector<double>{}) == -std::numeric_limits<double>::infinity());

  std::vector<double> pmf(2);
  CHECK(normalize_log_weights(a, pmf) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(pmf[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pmf[1] == doctest::Approx(0.75).epsilon(1e-15));

  const double ninf = -std::numeric_limits<double>::infinity();
  const std::vector<double> with_zero{ninf, -800.0};
  normalize_log_weights(with_zero, pmf);
  CHECK(pmf[0] == 0.0);
  CHECK(pmf[1] == 1.0);

  CHECK_THROWS_AS(normalize_log_weights(std::vector<double>{ninf, ninf}, pmf), NumericalError);
  CHECK_THROWS_AS(normalize_log_weights(std::vector<double>{0.0, std::nan("")}, pmf), NumericalError);
  CHECK_THROWS_AS(normalize_log_weights(std::vector<double>{0.0}, pmf), std::invalid_argument);
}

TEST_CASE("multinomial resampling") {
  RandomStream s(12);
  const std::vector<double> point{0.0, 1.0, 0.0};
  for (Index i : multinomial_resample(point, 50, s)) CHECK(i == 1);

  const std::vector<double> pmf{0.2, 0.8};
  constexpr Index n = 100000;
  const std::vector<Index> draws = multinomial_resample(pmf, n, s);
  CHECK(std::is_sorted(draws.begin(), draws.end()));
  const double ones = static_cast<double>(std::count(draws.begin(), draws.end(), Index{1})) / n;
  CHECK(std::abs(ones - 0.8) < 4.0 * std::sqrt(0.16 / n));
  CHECK_THROWS_AS(multinomial_resample(std::vector<double>{}, 1, s), std::invalid_argument);
}

TEST_CASE("filter settings validation") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.0, 0.2, 1.0);
  const ObservationSeries obs({v1(1.0)});
  CHECK_THROWS_AS(particle_filter(m, p, obs, FilterSettings{2, 10, 1}, RandomStream(1)), std::invalid_argument);
  CHECK_THROWS_AS(particle_filter(m, p, obs, FilterSettings{2, 0, 5}, RandomStream(1)), std::invalid_argument);
  CHECK_THROWS_AS(delta_particle_filter(m, p, obs, FilterSettings{0, 10, 5}, RandomStream(1)),
                  std::invalid_argument);
  CHECK_NOTHROW(particle_filter(m, p, obs, FilterSettings{0, 1, 2}, RandomStream(1)));
}

TEST_CASE("particle filter matches the Kalman likelihood") {
  const ModelSpec m = scalar_linear_model();
  const Parameter p{0.5, std::log(0.5), 0.0};
  const ObservationSeries obs = simulate_data(m, p, 3, 2, 1, 4);
  const double exact = kalman_oracle(m, obs, p, 2);
  const FilterOutput out = particle_filter(m, p, obs, FilterSettings{2, 1, 20000}, RandomStream(8));
  CHECK(std::abs(out.log_likelihood - exact) < 0.05);
}

TEST_CASE("uninformative observations give uniform weights") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.0, 0.2, 1e6);
  const ObservationSeries obs = kuramoto_data(5, 2);
  FilterDiagnostics d;
  particle_filter(m, p, obs, FilterSettings{2, 10, 30}, RandomStream(3), &d);
  for (std::size_t k = 0; k < d.max_weights.size(); ++k)
    CHECK(d.max_weights[k] / d.min_weights[k] < 1.0 + 1e-9);
}

TEST_CASE("particle filter bookkeeping") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.0, 0.2, 1.0);
  const ObservationSeries obs = kuramoto_data(8, 3);
  const FilterSettings settings{2, 20, 25};

  FilterDiagnostics d;
  const FilterOutput out = particle_filter(m, p, obs, settings, RandomStream(10), &d);
  REQUIRE(out.path.size() == 8);
  REQUIRE(d.pmf_sums.size() == 8);
  for (double s : d.pmf_sums) CHECK(std::abs(s - 1.0) < 1e-12);
  CHECK(std::abs(std::accumulate(d.log_mean_weights.begin(), d.log_mean_weights.end(), 0.0) -
                 out.log_likelihood) < 1e-12);

  // The returned path is the selected particle's ancestral line.
  Index b = d.selected;
  for (Index t = 8; t >= 1; --t) {
    const auto k = static_cast<std::size_t>(t - 1);
    CHECK(out.path[k].terminal()[0] == d.terminal_states[k](0, b));
    b = d.ancestors[k][static_cast<std::size_t>(b)];
  }

  const FilterOutput again = particle_filter(m, p, obs, settings, RandomStream(10));
  CHECK(again.log_likelihood == out.log_likelihood);
  CHECK(observation_states(again.path) == observation_states(out.path));
  CHECK(particle_filter(m, p, obs, settings, RandomStream(11)).log_likelihood != out.log_likelihood);
}

TEST_CASE("delta particle filter bookkeeping") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.0, 0.2, 1.0);
  const ObservationSeries obs = kuramoto_data(8, 3);
  const FilterSettings settings{3, 20, 25};

  FilterDiagnostics d;
  const DeltaFilterOutput out = delta_particle_filter(m, p, obs, settings, RandomStream(10), &d);
  REQUIRE(out.path.size() == 8);
  for (double s : d.pmf_sums) CHECK(std::abs(s - 1.0) < 1e-12);
  CHECK(std::abs(std::accumulate(d.log_mean_weights.begin(), d.log_mean_weights.end(), 0.0) -
                 out.log_likelihood) < 1e-12);

  Index b = d.selected;
  for (Index t = 8; t >= 1; --t) {
    const auto k = static_cast<std::size_t>(t - 1);
    CHECK(out.path[k].fine.terminal()[0] == d.terminal_states[k](0, b));
    CHECK(out.path[k].coarse.terminal()[0] == d.coarse_terminal_states[k](0, b));
    CHECK(out.path[k].fine.states.cols() == 8);
    CHECK(out.path[k].coarse.states.cols() == 4);
    b = d.ancestors[k][static_cast<std::size_t>(b)];
  }
  CHECK(delta_particle_filter(m, p, obs, settings, RandomStream(10)).log_likelihood == out.log_likelihood);
}

TEST_CASE("delta filter reduces to the single filter when the levels agree") {
  // Constant drift and no noise: both levels are exact, so H = G.
  const ModelSpec m = drift_only_model();
  const Parameter p{0.75, 0.0, 0.0};
  const ObservationSeries obs({v1(1.5), v1(2.7), v1(3.1)});
  const FilterSettings settings{2, 3, 10};
  const FilterOutput single = particle_filter(m, p, obs, settings, RandomStream(5));
  const DeltaFilterOutput delta = delta_particle_filter(m, p, obs, settings, RandomStream(5));
  CHECK(single.log_likelihood == delta.log_likelihood);
  for (std::size_t k = 0; k < 3; ++k) CHECK(single.path[k].states == delta.path[k].fine.states);
}

TEST_CASE("likelihood estimator variance falls with the filter particle count") {
  const ModelSpec m = kuramoto_model();
  const Parameter p = natural_parameter(m, 0.0, 0.2, 1.0);
  const ObservationSeries obs = kuramoto_data(10, 6);
  std::vector<double> variances;
  for (Index M : {50, 100, 200}) {
    std::vector<double> ll;
    for (int s = 0; s < 40; ++s)
      ll.push_back(particle_filter(m, p, obs, FilterSettings{2, 20, M}, RandomStream(300).child(s)).log_likelihood);
    variances.push_back(sample_variance(ll));
  }
  CHECK(variances[0] > variances[1]);
  CHECK(variances[1] > variances[2]);
}
