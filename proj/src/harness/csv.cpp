#include "mlpmcmc/harness/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace mlpmcmc {

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

double parse_double(std::string_view field) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument("not a number: '" + std::string(field) + "'");
  return value;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("csv: missing column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file " + path.string());
  table.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != table.header.size())
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                  ": wrong number of fields");
    table.rows.push_back(std::move(fields));
  }
  return table;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out << ',';
      out << fields[i];
    }
    out << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CsvTable observations_table(const ObservationSeries& obs) {
  CsvTable table;
  table.header = {"k", "y"};
  for (Index k = 1; k <= obs.size(); ++k) {
    const Vector& y = obs.at(k);
    if (y.size() != 1) throw std::invalid_argument("observations CSV holds scalar observations only");
    table.rows.push_back({std::to_string(k), format_double(y[0])});
  }
  return table;
}

ObservationSeries observations_from_table(const CsvTable& table) {
  const std::size_t kc = table.column("k");
  const std::size_t yc = table.column("y");
  std::vector<Vector> y;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i][kc] != std::to_string(i + 1))
      throw std::invalid_argument("observations CSV: k must run 1..T in order");
    y.push_back(Vector::Constant(1, parse_double(table.rows[i][yc])));
  }
  return ObservationSeries(std::move(y));
}

CsvTable trace_table(const ChainTrace& trace, const std::vector<std::string>& parameter_names) {
  CsvTable table;
  table.header.push_back("iter");
  for (const auto& n : parameter_names) table.header.push_back(n);
  table.header.push_back("log_like");
  table.header.push_back("accepted");
  if (trace.bilevel) {
    table.header.push_back("log_w_fine");
    table.header.push_back("log_w_coarse");
  }
  for (std::size_t j = 0; j < trace.entries.size(); ++j) {
    const auto& e = trace.entries[j];
    if (e.param.size() != static_cast<Index>(parameter_names.size()))
      throw std::invalid_argument("trace_table: parameter name count mismatch");
    std::vector<std::string> row;
    row.push_back(std::to_string(j));
    for (Index i = 0; i < e.param.size(); ++i) row.push_back(format_double(e.param[i]));
    row.push_back(format_double(e.log_likelihood));
    row.push_back(e.accepted ? "1" : "0");
    if (trace.bilevel) {
      row.push_back(format_double(e.log_weight_fine));
      row.push_back(format_double(e.log_weight_coarse));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace mlpmcmc
