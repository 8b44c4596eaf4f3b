#pragma once

#include <cmath>
#include <span>

namespace bsm {

// ln Gamma(x) for x > 0. Thread-safe (does not touch signgam).
double log_gamma(double x);

// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
//
// Large arguments go through the Stirling remainder so that the
// cancellation between ln Gamma(q) and ln Gamma(p + q) never happens
// explicitly. Throws std::domain_error unless a > 0 and b > 0.
double log_beta_fn(double a, double b);

// Remainder of Stirling's series: ln Gamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)].
// Valid for x >= 10.
double stirling_remainder(double x);

// Numerically stable ln(1 + e^x).
inline double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// ln sum_j exp(terms[j]) with a max shift. Empty input gives -inf.
double log_sum_exp(std::span<const double> terms);

// Pairwise (cascade) summation; the reduction tree depends only on size.
double pairwise_sum(std::span<const double> values);

}  // namespace bsm
