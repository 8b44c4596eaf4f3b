#include "bsm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bsm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw std::invalid_argument("unknown column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw std::invalid_argument("CSV input is empty (a header row is required)");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return read_csv(in);
}

std::vector<double> squeeze_unit_interval(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] * (n - 1.0) + 0.5) / n;
  return out;
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& response,
                         const std::vector<std::string>& covariates, BoundaryPolicy policy,
                         Contrast contrast) {
  const std::size_t n = table.rows.size();
  if (n == 0) throw std::invalid_argument("CSV has no data rows");
  const std::size_t ycol = table.column(response);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!parse_double(table.rows[i][ycol], y[i])) {
      throw std::invalid_argument("row " + std::to_string(i + 1) + ": response '" +
                                  table.rows[i][ycol] + "' is not a number");
    }
    if (policy == BoundaryPolicy::Reject && !(y[i] > 0.0 && y[i] < 1.0)) {
      throw std::domain_error("row " + std::to_string(i + 1) + ": response " + table.rows[i][ycol] +
                              " is outside the open interval (0,1); use --boundary squeeze to "
                              "compress the responses");
    }
    if (policy == BoundaryPolicy::Squeeze && !(y[i] >= 0.0 && y[i] <= 1.0)) {
      throw std::domain_error("row " + std::to_string(i + 1) + ": response " + table.rows[i][ycol] +
                              " is outside [0,1]");
    }
  }
  if (policy == BoundaryPolicy::Squeeze) y = squeeze_unit_interval(y);

  std::vector<std::vector<double>> cols;
  std::vector<std::string> names{"(Intercept)"};
  for (const auto& name : covariates) {
    const std::size_t c = table.column(name);
    std::vector<double> values(n);
    bool numeric = true;
    for (std::size_t i = 0; i < n && numeric; ++i) numeric = parse_double(table.rows[i][c], values[i]);
    if (numeric) {
      cols.push_back(std::move(values));
      names.push_back(name);
      continue;
    }
    std::vector<std::string> levels;
    for (const auto& row : table.rows) {
      if (row[c].empty()) throw std::invalid_argument("covariate '" + name + "' has an empty value");
      levels.push_back(row[c]);
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    const bool sum = contrast == Contrast::Sum;
    for (std::size_t l = sum ? 0 : 1; l < (sum ? levels.size() - 1 : levels.size()); ++l) {
      std::vector<double> dummy(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& v = table.rows[i][c];
        dummy[i] = v == levels[l] ? 1.0 : (sum && v == levels.back() ? -1.0 : 0.0);
      }
      cols.push_back(std::move(dummy));
      names.push_back(name + "[" + levels[l] + "]");
    }
  }
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size() + 1));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    for (std::size_t j = 0; j < cols.size(); ++j) x(r, static_cast<Eigen::Index>(j + 1)) = cols[j][i];
  }
  return Dataset(std::move(y), std::move(x), std::move(names));
}

}  // namespace bsm
