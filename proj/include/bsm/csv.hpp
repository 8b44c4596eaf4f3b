#pragma once

#include <istream>
#include <string>
#include <vector>

#include "bsm/regression.hpp"

namespace bsm {

// Comma-separated, header row required, '.' decimal point, optional double quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws std::invalid_argument if the column does not exist.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

enum class BoundaryPolicy { Reject, Squeeze };

// Coding of non-numeric covariates. Levels are sorted bytewise.
//   Treatment: one 0/1 column per level after the first.
//   Sum: one column per level except the last; +1 for its level, -1 for the
//        last level, 0 otherwise.
enum class Contrast { Treatment, Sum };

// (y (n - 1) + 0.5) / n applied to every response.
std::vector<double> squeeze_unit_interval(const std::vector<double>& y);

// Builds a regression dataset. Numeric covariates enter as-is; a covariate
// with any non-numeric value is expanded per `contrast` into columns named
// "name[level]".
//
// Errors (std::invalid_argument / std::domain_error) name the offending data
// row, counted from 1 after the header.
Dataset dataset_from_csv(const CsvTable& table, const std::string& response,
                         const std::vector<std::string>& covariates, BoundaryPolicy policy,
                         Contrast contrast = Contrast::Treatment);

}  // namespace bsm
