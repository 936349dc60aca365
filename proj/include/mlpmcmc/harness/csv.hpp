#ifndef MLPMCMC_HARNESS_CSV_HPP
#define MLPMCMC_HARNESS_CSV_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mlpmcmc/mcmc.hpp"
#include "mlpmcmc/model.hpp"

namespace mlpmcmc {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
/// Throws std::invalid_argument unless the whole field is a number.
double parse_double(std::string_view field);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws if absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
};

/// Plain comma-separated text with a header line; fields are never quoted.
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

CsvTable observations_table(const ObservationSeries& obs);
ObservationSeries observations_from_table(const CsvTable& table);

/// Header iter,<parameter names>,log_like,accepted; bi-level traces append
/// log_w_fine,log_w_coarse.
CsvTable trace_table(const ChainTrace& trace, const std::vector<std::string>& parameter_names);

}  // namespace mlpmcmc

#endif  // MLPMCMC_HARNESS_CSV_HPP
