#pragma once

#include <span>

#include "bsm/quadrature.hpp"

// Per-observation density kernels. Every kernel has a serial reference and an
// OpenMP version; both write element i from the same arithmetic, so their
// outputs are bit-identical and the caller's fixed-order reduction keeps
// log-likelihoods reproducible regardless of the thread count.
namespace bsm::kernels {

// out[i] = log sum_j weights[j] * f_B(y_i; mu[i], phi / nodes[j]).
void bsm_log_density_serial(std::span<const double> log_y, std::span<const double> log_1my,
                            std::span<const double> mu, double phi, const QuadratureRule& rule,
                            std::span<double> out);
void bsm_log_density_parallel(std::span<const double> log_y, std::span<const double> log_1my,
                              std::span<const double> mu, double phi, const QuadratureRule& rule,
                              std::span<double> out);

// Component log densities of the two-point beta:
// reference[i] = ln f_B(y_i; mu[i], phi), contaminant[i] = ln f_B(y_i; mu[i], theta2 * phi).
void tpb_components_serial(std::span<const double> log_y, std::span<const double> log_1my,
                           std::span<const double> mu, double phi, double theta2,
                           std::span<double> reference, std::span<double> contaminant);
void tpb_components_parallel(std::span<const double> log_y, std::span<const double> log_1my,
                             std::span<const double> mu, double phi, double theta2,
                             std::span<double> reference, std::span<double> contaminant);

// Observations per thread below which the parallel kernels stay serial.
inline constexpr std::size_t kParallelGrain = 64;

}  // namespace bsm::kernels
