#include "kere/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kere::io {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.emplace_back(trim(std::string_view(line).substr(start)));
      return out;
    }
    out.emplace_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
}

struct RawTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  RawTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
  table.names = split_fields(line);
  if (table.names.empty() || (table.names.size() == 1 && table.names[0].empty()))
    throw std::runtime_error("'" + path + "' has an empty header row");

  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;  // ignore blank lines
    ++data_row;
    const auto fields = split_fields(line);
    if (fields.size() != table.names.size()) {
      std::ostringstream msg;
      msg << "'" << path << "' row " << data_row << ": expected " << table.names.size()
          << " fields, found " << fields.size();
      throw std::runtime_error(msg.str());
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& cell = fields[j];
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr != end || cell.empty() || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "'" << path << "' row " << data_row << ", column '" << table.names[j]
            << "': cannot parse '" << cell << "' as a finite number";
        throw std::runtime_error(msg.str());
      }
      row[j] = value;
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw std::runtime_error("'" + path + "' has no data rows");
  return table;
}

std::size_t resolve_column(const RawTable& table, const std::string& wanted,
                           const std::string& path) {
  for (std::size_t j = 0; j < table.names.size(); ++j)
    if (table.names[j] == wanted) return j;
  std::size_t index = 0;
  const char* begin = wanted.data();
  const char* end = begin + wanted.size();
  const auto [ptr, ec] = std::from_chars(begin, end, index);
  if (ec == std::errc() && ptr == end && index < table.names.size()) return index;
  std::ostringstream msg;
  msg << "'" << path << "': no column named '" << wanted << "' (columns:";
  for (const auto& name : table.names) msg << " " << name;
  msg << ")";
  throw std::runtime_error(msg.str());
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& response) {
  const RawTable table = read_table(path);
  const std::size_t yj = resolve_column(table, response, path);
  if (table.names.size() < 2)
    throw std::runtime_error("'" + path + "' needs at least one feature besides the response");

  Dataset data;
  data.source_path = path;
  data.response_name = table.names[yj];
  for (std::size_t j = 0; j < table.names.size(); ++j)
    if (j != yj) data.feature_names.push_back(table.names[j]);

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(table.names.size() - 1);
  data.X.resize(n, p);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == yj)
        data.y[i] = row[j];
      else
        data.X(i, col++) = row[j];
    }
  }
  return data;
}

FeatureTable load_feature_csv(const std::string& path, const std::optional<std::string>& drop) {
  const RawTable table = read_table(path);
  std::size_t skip = table.names.size();  // sentinel: keep everything
  if (drop) skip = resolve_column(table, *drop, path);

  FeatureTable out;
  for (std::size_t j = 0; j < table.names.size(); ++j)
    if (j != skip) out.names.push_back(table.names[j]);
  if (out.names.empty()) throw std::runtime_error("'" + path + "' has no feature columns");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  out.X.resize(n, static_cast<Eigen::Index>(out.names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < row.size(); ++j)
      if (j != skip) out.X(i, col++) = row[j];
  }
  return out;
}

}  // namespace kere::io
