#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "tsel/types.hpp"

namespace tsel {

struct DataTable {
  std::vector<std::string> names;
  Matrix values;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

}  // namespace detail

/// Header row then numeric rows; ',' separated, '.' decimal. Blank lines and
/// lines starting with '#' are skipped. Errors name the offending line.
inline DataTable read_data_csv(std::istream& is, const std::string& source = "input") {
  DataTable t;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string body = detail::trim(line);
    if (body.empty() || body[0] == '#') continue;
    auto cells = detail::split_csv(body);
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (!header) {
      for (const auto& c : cells)
        if (c.empty()) throw InvalidArgument(where + "empty column name");
      t.names = std::move(cells);
      header = true;
      continue;
    }
    if (cells.size() != t.names.size())
      throw InvalidArgument(where + "expected " + std::to_string(t.names.size()) + " fields, found " +
                            std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto& c = cells[j];
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), row[j]);
      if (ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(row[j]))
        throw InvalidArgument(where + "column '" + t.names[j] + "': not a finite number: '" + c + "'");
    }
    rows.push_back(std::move(row));
  }
  if (!header) throw InvalidArgument(source + ": missing header row");
  if (rows.empty()) throw InvalidArgument(source + ": no data rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

inline DataTable read_data_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(path + ": cannot open file");
  return read_data_csv(in, path);
}

}  // namespace tsel
