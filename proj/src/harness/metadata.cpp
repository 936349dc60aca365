#include "mlpmcmc/harness/metadata.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#ifndef MLPMCMC_VERSION
#define MLPMCMC_VERSION "unknown"
#endif

namespace mlpmcmc {

const char* version_string() { return MLPMCMC_VERSION; }

void write_metadata(const std::filesystem::path& path, const std::string& command,
                    const ExperimentConfig& config, double wall_time_seconds,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = version_string();
  j["seed"] = config.seed;
  j["data_seed"] = config.data_seed;
  j["data_generation"] = {{"level", config.data_level},
                          {"law_particles", config.data_particles},
                          {"scheme", "Euler-Maruyama, particle-approximated law"}};
  nlohmann::ordered_json echo;
  for (const auto& [k, v] : config.entries()) echo[k] = v;
  j["config"] = echo;
  for (const auto& [k, v] : extra) j[k] = v;
  j["wall_time_seconds"] = wall_time_seconds;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mlpmcmc
