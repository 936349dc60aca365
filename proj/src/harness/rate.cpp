#include "mlpmcmc/harness/rate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "mlpmcmc/harness/validation.hpp"

namespace mlpmcmc {

double fit_rate(const std::vector<RatePoint>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  std::vector<double> log_mse;
  std::vector<double> log_cost;
  for (const auto& p : points) {
    if (!(p.cost_units > 0.0) || !(p.mse > 0.0) || !std::isfinite(p.cost_units) ||
        !std::isfinite(p.mse))
      throw std::invalid_argument("fit_rate: cost and MSE must be positive and finite");
    log_mse.push_back(std::log(p.mse));
    log_cost.push_back(std::log(p.cost_units));
  }
  return ols_slope(log_mse, log_cost);
}

std::vector<RateRow> rate_table(const std::vector<RunRecord>& runs,
                                const std::vector<ReferenceRecord>& reference) {
  std::map<std::string, double> ref;
  for (const auto& r : reference) ref[r.parameter] = r.value;

  struct Acc {
    double cost = 0.0;
    double sq = 0.0;
    Index n = 0;
  };
  // (method, parameter, -epsilon) so epsilons come out decreasing.
  std::map<std::tuple<std::string, std::string, double>, Acc> acc;
  for (const auto& r : runs) {
    const auto it = ref.find(r.parameter);
    if (it == ref.end())
      throw std::invalid_argument("rate_table: no reference value for " + r.parameter);
    Acc& a = acc[{r.method, r.parameter, -r.epsilon}];
    if (a.n > 0 && a.cost != r.cost_units)
      throw std::invalid_argument("rate_table: cost_units differ across replicates");
    a.cost = r.cost_units;
    const double e = r.estimate - it->second;
    a.sq += e * e;
    ++a.n;
  }

  std::vector<RateRow> rows;
  std::map<std::pair<std::string, std::string>, std::vector<RatePoint>> fits;
  for (const auto& [key, a] : acc) {
    const auto& [method, parameter, neg_eps] = key;
    RateRow row{method, parameter, -neg_eps, a.cost, a.sq / static_cast<double>(a.n), 0.0};
    fits[{method, parameter}].push_back(RatePoint{row.cost_units, row.mse});
    rows.push_back(std::move(row));
  }
  for (auto& row : rows) row.slope = fit_rate(fits.at({row.method, row.parameter}));
  return rows;
}

CsvTable runs_table(const std::vector<RunRecord>& runs) {
  CsvTable t;
  t.header = {"method", "parameter", "epsilon", "replicate", "cost_units", "estimate"};
  for (const auto& r : runs)
    t.rows.push_back({r.method, r.parameter, format_double(r.epsilon), std::to_string(r.replicate),
                      format_double(r.cost_units), format_double(r.estimate)});
  return t;
}

std::vector<RunRecord> runs_from_table(const CsvTable& t) {
  const auto m = t.column("method"), p = t.column("parameter"), e = t.column("epsilon"),
             r = t.column("replicate"), c = t.column("cost_units"), v = t.column("estimate");
  std::vector<RunRecord> runs;
  for (const auto& row : t.rows)
    runs.push_back(RunRecord{row[m], row[p], parse_double(row[e]),
                             static_cast<Index>(parse_double(row[r])), parse_double(row[c]),
                             parse_double(row[v])});
  return runs;
}

CsvTable reference_table(const std::vector<ReferenceRecord>& reference) {
  CsvTable t;
  t.header = {"parameter", "reference"};
  for (const auto& r : reference) t.rows.push_back({r.parameter, format_double(r.value)});
  return t;
}

std::vector<ReferenceRecord> reference_from_table(const CsvTable& t) {
  const auto p = t.column("parameter"), v = t.column("reference");
  std::vector<ReferenceRecord> out;
  for (const auto& row : t.rows) out.push_back(ReferenceRecord{row[p], parse_double(row[v])});
  return out;
}

CsvTable rate_csv_table(const std::vector<RateRow>& rows) {
  CsvTable t;
  t.header = {"method", "parameter", "epsilon", "cost_units", "mse", "slope"};
  for (const auto& r : rows)
    t.rows.push_back({r.method, r.parameter, format_double(r.epsilon), format_double(r.cost_units),
                      format_double(r.mse), format_double(r.slope)});
  return t;
}

}  // namespace mlpmcmc
