#ifndef MLPMCMC_HARNESS_CONFIG_HPP
#define MLPMCMC_HARNESS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mlpmcmc/mcmc.hpp"
#include "mlpmcmc/mlmc.hpp"
#include "mlpmcmc/model.hpp"

namespace mlpmcmc {

/// Every knob of the experiments. Field names mirror the config-file keys
/// and CLI flags (with '_' written as '-').
struct ExperimentConfig {
  std::string model = "kuramoto";
  double true_theta = 0.0;
  double true_sigma = 0.2;
  double true_tau = 1.0;
  Index T = 100;
  std::uint64_t seed = 1;
  std::uint64_t data_seed = 1;
  int data_level = kDataLevel;
  Index data_particles = kDataParticles;
  /// Observations CSV to read instead of simulating.
  std::string obs;

  std::vector<double> prior_mean = {0.0, 0.0, 0.0};
  std::vector<double> prior_sd = {1.0, 1.0, 1.0};

  int level = 3;
  Index N = 50;
  /// Filter particles; 0 means M = T.
  Index M = 0;
  Index iters = 5000;
  Index burn_in = 0;
  std::vector<double> steps = {0.1, 0.1, 0.1};

  std::vector<double> epsilons = {0.25, 0.125, 0.0625};
  double epsilon = 0.0625;
  int l_star = 2;
  double c_iter = 1.0;
  double c_particles = 1.0;
  Index replicates = 20;
  int ref_level_offset = 2;
  double ref_iter_factor = 10.0;

  unsigned threads = 1;
  std::string out = "results";

  /// Throws std::invalid_argument naming the first offending key.
  void validate() const;

  [[nodiscard]] Index filter_particles() const { return M > 0 ? M : T; }
  [[nodiscard]] ModelSpec build_model() const;
  [[nodiscard]] Parameter truth(const ModelSpec& model) const;
  [[nodiscard]] ProposalSpec proposal() const;
  [[nodiscard]] FilterSettings filter_settings() const;
  [[nodiscard]] ScheduleInputs schedule(double eps) const;

  /// key = value pairs in a stable order, for metadata and config echo.
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Output directory: `out` itself if absolute or MLPMCMC_OUTPUT_ROOT is
/// unset, otherwise $MLPMCMC_OUTPUT_ROOT/out.
std::filesystem::path resolve_output_dir(const std::string& out);

inline constexpr const char* kOutputRootEnv = "MLPMCMC_OUTPUT_ROOT";

}  // namespace mlpmcmc

#endif  // MLPMCMC_HARNESS_CONFIG_HPP
