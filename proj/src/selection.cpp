#include "bsm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace bsm {

double aic(double loglik, std::size_t k) {
  if (k < 1) throw std::invalid_argument("aic: parameter count must be >= 1");
  return 2.0 * static_cast<double>(k) - 2.0 * loglik;
}

double bic(double loglik, std::size_t k, std::size_t n) {
  if (k < 1 || n < 1) throw std::invalid_argument("bic: need k >= 1 and n >= 1");
  return std::log(static_cast<double>(n)) * static_cast<double>(k) - 2.0 * loglik;
}

namespace {

void assign_ranks(std::vector<RankedRow>& rows, double RankedRow::*value, std::size_t RankedRow::*rank,
                  bool RankedRow::*tie) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].*value < rows[b].*value; });
  for (std::size_t r = 0; r < order.size(); ++r) {
    rows[order[r]].*rank = r + 1;
    if (r > 0 && rows[order[r]].*value == rows[order[r - 1]].*value) {
      rows[order[r]].*tie = true;
      rows[order[r - 1]].*tie = true;
    }
  }
}

}  // namespace

RankedTable rank_models(const std::vector<ModelScore>& fits, std::size_t n) {
  if (fits.empty()) throw std::invalid_argument("rank_models: no models to rank");
  std::set<std::string> seen;
  RankedTable table;
  for (const auto& f : fits) {
    if (!seen.insert(f.label).second) {
      throw std::invalid_argument("rank_models: duplicate model label '" + f.label + "'");
    }
    RankedRow row;
    row.label = f.label;
    row.k = f.k;
    row.loglik = f.loglik;
    row.aic = aic(f.loglik, f.k);
    row.bic = bic(f.loglik, f.k, n);
    table.rows.push_back(row);
  }
  assign_ranks(table.rows, &RankedRow::aic, &RankedRow::aic_rank, &RankedRow::aic_tie);
  assign_ranks(table.rows, &RankedRow::bic, &RankedRow::bic_rank, &RankedRow::bic_tie);
  return table;
}

}  // namespace bsm
