#ifndef MLPMCMC_HARNESS_RATE_HPP
#define MLPMCMC_HARNESS_RATE_HPP

#include <string>
#include <vector>

#include "mlpmcmc/harness/csv.hpp"

namespace mlpmcmc {

struct RatePoint {
  double cost_units = 0.0;
  double mse = 0.0;
};

/// OLS slope of log(cost) on log(MSE). Needs at least 3 points, all
/// positive, and MSEs that are not all equal.
double fit_rate(const std::vector<RatePoint>& points);

/// One replicate of one method at one epsilon.
struct RunRecord {
  std::string method;
  std::string parameter;
  double epsilon = 0.0;
  Index replicate = 0;
  double cost_units = 0.0;
  double estimate = 0.0;
};

struct ReferenceRecord {
  std::string parameter;
  double value = 0.0;
};

struct RateRow {
  std::string method;
  std::string parameter;
  double epsilon = 0.0;
  double cost_units = 0.0;
  double mse = 0.0;
  double slope = 0.0;
};

/// Averages squared errors per (method, parameter, epsilon) and fits one
/// slope per (method, parameter). Rows come out sorted by method, parameter,
/// then decreasing epsilon.
std::vector<RateRow> rate_table(const std::vector<RunRecord>& runs,
                                const std::vector<ReferenceRecord>& reference);

CsvTable runs_table(const std::vector<RunRecord>& runs);
std::vector<RunRecord> runs_from_table(const CsvTable& table);
CsvTable reference_table(const std::vector<ReferenceRecord>& reference);
std::vector<ReferenceRecord> reference_from_table(const CsvTable& table);
/// Header method,parameter,epsilon,cost_units,mse,slope.
CsvTable rate_csv_table(const std::vector<RateRow>& rows);

}  // namespace mlpmcmc

#endif  // MLPMCMC_HARNESS_RATE_HPP
