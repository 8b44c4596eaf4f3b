#include "bsm/special.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bsm {

namespace {

constexpr double kLnSqrt2Pi = 0.91893853320467274178032973640562;

}  // namespace

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double stirling_remainder(double x) {
  // Bernoulli terms B_2k / (2k (2k-1) x^(2k-1)); eight terms reach below
  // 1e-17 at x = 10.
  static constexpr double kCoef[] = {
      1.0 / 12.0,         -1.0 / 360.0,   1.0 / 1260.0,  -1.0 / 1680.0,
      1.0 / 1188.0,       -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0,
  };
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double acc = 0.0;
  for (int k = 7; k >= 0; --k) acc = acc * inv2 + kCoef[k];
  return acc * inv;
}

double log_beta_fn(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::domain_error("log_beta_fn: arguments must be positive and finite (a=" +
                            std::to_string(a) + ", b=" + std::to_string(b) + ")");
  }
  const double p = std::min(a, b);
  const double q = std::max(a, b);
  const double s = p + q;

  if (p >= 10.0) {
    const double corr = stirling_remainder(p) + stirling_remainder(q) - stirling_remainder(s);
    return -0.5 * std::log(q) + kLnSqrt2Pi + corr + (p - 0.5) * std::log(p / s) +
           q * std::log1p(-p / s);
  }
  if (q >= 10.0) {
    const double corr = stirling_remainder(q) - stirling_remainder(s);
    return log_gamma(p) + corr + p - p * std::log(s) + (q - 0.5) * std::log1p(-p / s);
  }
  return log_gamma(p) + log_gamma(q) - log_gamma(s);
}

double log_sum_exp(std::span<const double> terms) {
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 32;
  if (values.size() <= kBlock) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace bsm
