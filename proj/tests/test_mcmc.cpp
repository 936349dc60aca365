#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mlpmcmc/harness/kalman.hpp"
#include "mlpmcmc/harness/validation.hpp"
#include "mlpmcmc/mcmc.hpp"

using namespace mlpmcmc;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

ProposalSpec steps(double a, double b, double c) { return ProposalSpec{Vector{{a, b, c}}}; }

// Kuramoto dynamics with a flat observation density, so the chain targets the prior.
ModelSpec flat_likelihood_model() {
  ModelSpec m = kuramoto_model();
  m.obs_logdensity = [](const Parameter&, ConstVectorRef, ConstVectorRef) { return 0.0; };
  return m;
}

// Mean and batch-means standard error.
std::pair<double, double> batch_mean(const std::vector<double>& xs, int batches = 50) {
  const std::size_t len = xs.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += xs[static_cast<std::size_t>(b) * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= batches - 1;
  return {mean, std::sqrt(var / batches)};
}

TraceEntry entry(double theta, double fine_state, double coarse_state, double log_wf, double log_wc) {
  TraceEntry e;
  e.param = Parameter{theta, 0.0, 0.0};
  e.states = Matrix::Constant(1, 1, fine_state);
  e.coarse_states = Matrix::Constant(1, 1, coarse_state);
  e.log_weight_fine = log_wf;
  e.log_weight_coarse = log_wc;
  return e;
}

double state_functional(const Parameter&, const Matrix& s) { return s(0, 0) * s(0, 0); }

}  // namespace

TEST_CASE("acceptance rule") {
  CHECK(log_acceptance_ratio(-10.0, -1.0, -9.0, -1.5) == doctest::Approx(0.5));
  CHECK(metropolis_accept(0.0, 0.999));
  CHECK(metropolis_accept(std::log(0.5), 0.49));
  CHECK_FALSE(metropolis_accept(std::log(0.5), 0.51));
  CHECK_FALSE(metropolis_accept(std::nan(""), 0.01));
  CHECK_FALSE(metropolis_accept(-std::numeric_limits<double>::infinity(), 1e-300));
}

TEST_CASE("proposal validation") {
  const ProposalSpec short_spec{Vector{{0.1, 0.1}}};
  CHECK_THROWS_AS(short_spec.validate(3), std::invalid_argument);
  CHECK_THROWS_AS(steps(0.1, 0.0, 0.1).validate(3), std::invalid_argument);
  CHECK_THROWS_AS(steps(0.1, -1.0, 0.1).validate(3), std::invalid_argument);
  CHECK_NOTHROW(steps(0.1, 0.1, 0.1).validate(3));
}

TEST_CASE("chain length and determinism") {
  const ModelSpec m = kuramoto_model();
  const ObservationSeries obs = simulate_data(m, natural_parameter(m, 0.0, 0.2, 1.0), 4, 3, 20, 1);
  const FilterSettings settings{1, 5, 4};

  const ChainTrace zero = run_single_level(m, obs, settings, 0, steps(0.1, 0.1, 0.1), RandomStream(1));
  CHECK(zero.size() == 1);
  CHECK(zero.acceptance_rate() == 0.0);
  CHECK(zero.entries[0].states.cols() == 4);

  const ChainTrace a = run_single_level(m, obs, settings, 30, steps(0.1, 0.1, 0.1), RandomStream(2));
  const ChainTrace b = run_single_level(m, obs, settings, 30, steps(0.1, 0.1, 0.1), RandomStream(2));
  REQUIRE(a.size() == 31);
  for (std::size_t j = 0; j < a.entries.size(); ++j) {
    CHECK(a.entries[j].param == b.entries[j].param);
    CHECK(a.entries[j].log_likelihood == b.entries[j].log_likelihood);
  }
  CHECK_THROWS_AS(run_single_level(m, obs, settings, -1, steps(0.1, 0.1, 0.1), RandomStream(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_bilevel(m, obs, FilterSettings{0, 5, 4}, 3, steps(0.1, 0.1, 0.1), RandomStream(1)),
                  std::invalid_argument);
}

TEST_CASE("vanishing proposal steps leave the parameter fixed") {
  const ModelSpec m = kuramoto_model();
  const ObservationSeries obs = simulate_data(m, natural_parameter(m, 0.0, 0.2, 1.0), 3, 3, 20, 1);
  const ChainTrace t = run_single_level(m, obs, FilterSettings{1, 5, 4}, 50,
                                        steps(1e-300, 1e-300, 1e-300), RandomStream(3));
  for (const auto& e : t.entries) CHECK(e.param == t.entries[0].param);
}

TEST_CASE("accepted moves change the state and rejections keep it") {
  const ModelSpec m = kuramoto_model();
  const ObservationSeries obs = simulate_data(m, natural_parameter(m, 0.0, 0.2, 1.0), 3, 3, 20, 1);
  const ChainTrace t = run_single_level(m, obs, FilterSettings{1, 5, 4}, 200, steps(0.3, 0.3, 0.3), RandomStream(4));
  Index accepted = 0;
  for (std::size_t j = 1; j < t.entries.size(); ++j) {
    if (t.entries[j].accepted) {
      ++accepted;
    } else {
      CHECK(t.entries[j].param == t.entries[j - 1].param);
      CHECK(t.entries[j].log_likelihood == t.entries[j - 1].log_likelihood);
    }
  }
  CHECK(accepted == t.acceptance_count);
  CHECK(accepted > 0);
  CHECK(accepted < 200);
}

TEST_CASE("with a flat likelihood the chain is random-walk Metropolis on the prior") {
  const ModelSpec m = flat_likelihood_model();
  const ObservationSeries obs({v1(0.0)});
  const double step = 1.5;
  const ChainTrace t = run_single_level(m, obs, FilterSettings{0, 1, 2}, 20000, steps(step, step, step),
                                        RandomStream(5));

  // Independent reference: the same random walk on N(0, I_3).
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  long long acc = 0;
  constexpr long long n = 2000000;
  for (long long i = 0; i < n; ++i) {
    const Eigen::Vector3d y = x + step * Eigen::Vector3d(z(gen), z(gen), z(gen));
    if (std::log(u(gen)) < 0.5 * (x.squaredNorm() - y.squaredNorm())) {
      x = y;
      ++acc;
    }
  }
  const double reference_rate = static_cast<double>(acc) / n;

  std::vector<double> accepted, theta;
  for (std::size_t j = 1; j < t.entries.size(); ++j) {
    accepted.push_back(t.entries[j].accepted ? 1.0 : 0.0);
    theta.push_back(t.entries[j].param[0]);
  }
  const auto [rate, rate_se] = batch_mean(accepted);
  CHECK(std::abs(rate - reference_rate) < 3.0 * rate_se + 3.0 * std::sqrt(reference_rate / n));
  const auto [mean, mean_se] = batch_mean(theta);
  CHECK(std::abs(mean) < 4.0 * mean_se);
}

TEST_CASE("posterior mean of the drift in a conjugate linear model") {
  // sigma and tau are pinned by a near-degenerate prior; theta then has a
  // Gaussian posterior whose mean follows from the exact Kalman likelihood.
  const ModelSpec base = scalar_linear_model();
  const double log_sigma = std::log(0.5);
  GaussianPrior prior{Vector{{0.0, log_sigma, 0.0}}, Vector{{1.0, 1e-9, 1e-9}}};
  const ModelSpec m = linear_gaussian_model(*base.linear, prior);
  const int level = 2;
  const ObservationSeries obs = simulate_data(m, Parameter{0.4, log_sigma, 0.0}, 5, level, 1, 21);

  const auto loglik = [&](double theta) { return kalman_oracle(m, obs, Parameter{theta, log_sigma, 0.0}, level); };
  const double l0 = loglik(0.0), lp = loglik(1.0), lm = loglik(-1.0);
  const double b = 0.5 * (lp - lm);
  const double c = 0.5 * (lp + lm) - l0;
  const double exact = -b / (2.0 * (c - 0.5));

  const ChainTrace t = run_single_level(m, obs, FilterSettings{level, 1, 200}, 10000,
                                        steps(0.6, 1e-12, 1e-12), RandomStream(6));
  std::vector<double> theta;
  for (std::size_t j = 500; j < t.entries.size(); ++j) theta.push_back(t.entries[j].param[0]);
  const auto [mean, se] = batch_mean(theta);
  MESSAGE("posterior mean " << mean << " +- " << se << ", exact " << exact);
  CHECK(std::abs(mean - exact) < 4.0 * se);
}

TEST_CASE("bi-level chain") {
  const ModelSpec m = kuramoto_model();
  const ObservationSeries obs = simulate_data(m, natural_parameter(m, 0.0, 0.2, 1.0), 10, 6, 50, 2);
  const ChainTrace t = run_bilevel(m, obs, FilterSettings{3, 20, 10}, 400, steps(0.05, 0.1, 0.1), RandomStream(7));
  CHECK(t.bilevel);
  CHECK(t.size() == 401);
  MESSAGE("bi-level acceptance " << t.acceptance_rate());
  CHECK(t.acceptance_rate() > 0.05);
  CHECK(t.acceptance_rate() < 0.6);
  for (const auto& e : t.entries) {
    CHECK(e.states.cols() == 10);
    CHECK(e.coarse_states.cols() == 10);
    const auto [wf, wc] = bilevel_log_weights(m, e.param, obs, e.states, e.coarse_states);
    CHECK(wf == e.log_weight_fine);
    CHECK(wc == e.log_weight_coarse);
    // log(2) per observation bounds each change-of-measure factor.
    CHECK(wf < 10.0 * std::log(2.0));
  }
}

TEST_CASE("single-level estimator") {
  ChainTrace t;
  t.entries = {entry(0.1, 0, 0, 0, 0), entry(0.3, 0, 0, 0, 0)};
  CHECK(estimate_single(t, coordinate_functional(0)) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(estimate_single(t, coordinate_functional(0), 1) == 0.3);
  CHECK_THROWS_AS(estimate_single(t, coordinate_functional(0), 2), std::invalid_argument);
  CHECK_THROWS_AS(estimate_single(ChainTrace{}, coordinate_functional(0)), std::invalid_argument);
}

TEST_CASE("bi-level difference estimator") {
  ChainTrace t;
  t.bilevel = true;
  t.entries = {entry(0.0, 0, 0, std::log(1.0), 0.0), entry(1.0, 0, 0, std::log(3.0), 0.0)};
  CHECK(estimate_bilevel_difference(t, coordinate_functional(0)) == doctest::Approx(0.25).epsilon(1e-15));

  SUBCASE("constant functional") {
    const Functional c = [](const Parameter&, const Matrix&) { return 2.5; };
    CHECK(std::abs(estimate_bilevel_difference(t, c)) < 1e-15);
  }

  SUBCASE("collapsed levels give zero") {
    ChainTrace same;
    same.entries = {entry(0.2, 1.5, 1.5, 0, 0), entry(0.4, -0.5, -0.5, 0, 0), entry(0.1, 2.0, 2.0, 0, 0)};
    CHECK(estimate_bilevel_difference(same, state_functional) == 0.0);
  }

  SUBCASE("weights enter only through their ratios") {
    ChainTrace a, b;
    a.entries = {entry(0.2, 1.0, 1.2, -0.3, -0.1), entry(0.4, -0.5, -0.4, -0.2, -0.7),
                 entry(0.1, 2.0, 1.7, -1.1, -0.2)};
    b = a;
    for (auto& e : b.entries) {
      e.log_weight_fine -= 700.0;
      e.log_weight_coarse += 300.0;
    }
    CHECK(estimate_bilevel_difference(a, state_functional) ==
          doctest::Approx(estimate_bilevel_difference(b, state_functional)).epsilon(1e-13));

    ChainTrace swapped = a;
    for (auto& e : swapped.entries) {
      std::swap(e.states, e.coarse_states);
      std::swap(e.log_weight_fine, e.log_weight_coarse);
    }
    CHECK(estimate_bilevel_difference(swapped, state_functional) ==
          doctest::Approx(-estimate_bilevel_difference(a, state_functional)).epsilon(1e-13));
  }

  SUBCASE("zero total weight") {
    ChainTrace z;
    const double ninf = -std::numeric_limits<double>::infinity();
    z.entries = {entry(0.0, 0, 0, ninf, 0.0), entry(1.0, 0, 0, ninf, 0.0)};
    CHECK_THROWS_AS(estimate_bilevel_difference(z, coordinate_functional(0)), NumericalError);
  }
}

TEST_CASE("filter failure at a proposal counts as a rejection") {
  ModelSpec m = kuramoto_model();
  const auto drift = m.drift;
  m.drift = [drift](const Parameter& p, ConstVectorRef x, double mf, VectorRef out) {
    drift(p, x, mf, out);
    if (p[0] > 0.5) out[0] = std::numeric_limits<double>::infinity();
  };
  m.prior = GaussianPrior{Vector{{0.0, std::log(0.2), 0.0}}, Vector{{1e-3, 1e-3, 1e-3}}};
  const ObservationSeries obs = simulate_data(kuramoto_model(), natural_parameter(m, 0.0, 0.2, 1.0), 3, 3, 20, 1);
  const ChainTrace t = run_single_level(m, obs, FilterSettings{1, 5, 4}, 40, steps(3.0, 1e-3, 1e-3), RandomStream(8));
  CHECK(t.filter_failures > 0);
  CHECK(t.filter_failures + t.acceptance_count <= 40);
  for (const auto& e : t.entries) CHECK(e.param[0] <= 0.5);
}
