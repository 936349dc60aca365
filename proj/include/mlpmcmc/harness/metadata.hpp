#ifndef MLPMCMC_HARNESS_METADATA_HPP
#define MLPMCMC_HARNESS_METADATA_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mlpmcmc/harness/config.hpp"

namespace mlpmcmc {

/// `git describe` of the source tree at build time.
const char* version_string();

/// Writes a JSON record with the command, the full config echo, the version,
/// the wall time and any extra key/value pairs.
void write_metadata(const std::filesystem::path& path, const std::string& command,
                    const ExperimentConfig& config, double wall_time_seconds,
                    const std::vector<std::pair<std::string, std::string>>& extra = {});

}  // namespace mlpmcmc

#endif  // MLPMCMC_HARNESS_METADATA_HPP
