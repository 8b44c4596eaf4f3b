#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bsm {

// 2k - 2 loglik.
double aic(double loglik, std::size_t k);
// ln(n) k - 2 loglik.
double bic(double loglik, std::size_t k, std::size_t n);

struct ModelScore {
  std::string label;
  double loglik = 0.0;
  std::size_t k = 0;
};

struct RankedRow {
  std::string label;
  std::size_t k = 0;
  double loglik = 0.0;
  double aic = 0.0;
  std::size_t aic_rank = 0;
  double bic = 0.0;
  std::size_t bic_rank = 0;
  bool aic_tie = false;
  bool bic_tie = false;
};

// Rows in input order; ranks ascend with the criterion value, equal values
// keep input order and are flagged.
struct RankedTable {
  std::vector<RankedRow> rows;
};

// Throws std::invalid_argument on empty input, k == 0, n == 0 or duplicate labels.
RankedTable rank_models(const std::vector<ModelScore>& fits, std::size_t n);

}  // namespace bsm
