#include "mlpmcmc/harness/config.hpp"

#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "mlpmcmc/harness/csv.hpp"

namespace mlpmcmc {
namespace {

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("config: ") + key + " " + what);
}

std::string join(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) s += ' ';
    s += format_double(values[i]);
  }
  return s;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

void ExperimentConfig::validate() const {
  require(model == "kuramoto" || model == "modified_kuramoto", "model",
          "must be kuramoto or modified_kuramoto");
  require(T >= 1, "T", "must be positive");
  require(true_sigma > 0.0 && true_tau > 0.0, "sigma/tau", "must be positive");
  require(data_level >= 0 && data_level <= 20, "data-level", "must lie in [0, 20]");
  require(data_particles >= 1, "data-particles", "must be positive");
  require(prior_mean.size() == 3 && prior_sd.size() == 3, "prior-mean/prior-sd",
          "need three entries");
  for (double sd : prior_sd) require(sd > 0.0, "prior-sd", "entries must be positive");
  require(level >= 0 && level <= 20, "level", "must lie in [0, 20]");
  require(N >= 1, "N", "must be positive");
  require(M == 0 || M >= 2, "M", "must be 0 (meaning T) or at least 2");
  require(filter_particles() >= 2, "M", "resolves to fewer than 2 filter particles");
  require(iters >= 0, "iters", "must be non-negative");
  require(burn_in >= 0 && burn_in <= iters, "burn-in", "must lie in [0, iters]");
  require(steps.size() == 3, "steps", "needs three entries");
  for (double s : steps) require(s > 0.0, "steps", "entries must be positive");
  require(!epsilons.empty(), "epsilons", "must be non-empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] > 0.0 && epsilons[i] < 1.0, "epsilons", "entries must lie in (0, 1)");
    if (i > 0) require(epsilons[i] < epsilons[i - 1], "epsilons", "must be strictly decreasing");
  }
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon", "must lie in (0, 1)");
  require(l_star >= 0, "l-star", "must be non-negative");
  require(c_iter > 0.0 && c_particles > 0.0, "c-iter/c-particles", "must be positive");
  require(replicates >= 1, "replicates", "must be positive");
  require(ref_level_offset >= 0, "ref-level-offset", "must be non-negative");
  require(ref_iter_factor >= 1.0, "ref-iter-factor", "must be at least 1");
  require(threads >= 1, "threads", "must be positive");
  require(!out.empty(), "out", "must be non-empty");
}

ModelSpec ExperimentConfig::build_model() const {
  KuramotoOptions options;
  options.prior = GaussianPrior{to_vector(prior_mean), to_vector(prior_sd)};
  return model_by_name(model, options);
}

Parameter ExperimentConfig::truth(const ModelSpec& m) const {
  return natural_parameter(m, true_theta, true_sigma, true_tau);
}

ProposalSpec ExperimentConfig::proposal() const { return ProposalSpec{to_vector(steps)}; }

FilterSettings ExperimentConfig::filter_settings() const {
  return FilterSettings{level, N, filter_particles(), InteractionEval::kAuto};
}

ScheduleInputs ExperimentConfig::schedule(double eps) const {
  return ScheduleInputs{eps, l_star, c_iter, c_particles, filter_particles()};
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  auto i = [](auto v) { return std::to_string(v); };
  return {
      {"model", model},
      {"theta", format_double(true_theta)},
      {"sigma", format_double(true_sigma)},
      {"tau", format_double(true_tau)},
      {"T", i(T)},
      {"seed", i(seed)},
      {"data-seed", i(data_seed)},
      {"data-level", i(data_level)},
      {"data-particles", i(data_particles)},
      {"obs", obs},
      {"prior-mean", join(prior_mean)},
      {"prior-sd", join(prior_sd)},
      {"level", i(level)},
      {"N", i(N)},
      {"M", i(M)},
      {"iters", i(iters)},
      {"burn-in", i(burn_in)},
      {"steps", join(steps)},
      {"epsilons", join(epsilons)},
      {"epsilon", format_double(epsilon)},
      {"l-star", i(l_star)},
      {"c-iter", format_double(c_iter)},
      {"c-particles", format_double(c_particles)},
      {"replicates", i(replicates)},
      {"ref-level-offset", i(ref_level_offset)},
      {"ref-iter-factor", format_double(ref_iter_factor)},
      {"threads", i(threads)},
      {"out", out},
  };
}

std::filesystem::path resolve_output_dir(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_absolute()) return p;
  const char* root = std::getenv(kOutputRootEnv);
  if (root == nullptr || *root == '\0') return p;
  return std::filesystem::path(root) / p;
}

}  // namespace mlpmcmc
