#pragma once

#include <cstddef>
#include <vector>

#include "bsm/mixing.hpp"
#include "bsm/quadrature.hpp"
#include "bsm/special.hpp"

namespace bsm {

// Mean-parameterized beta law: mean mu in (0,1), variability phi > 0.
struct BetaParams {
  double mu = 0.5;
  double phi = 0.5;

  void validate() const;
};

struct ClassicalShapes {
  double alpha = 1.0;
  double beta = 1.0;
};

// alpha = mu / phi, beta = (1 - mu) / phi.
ClassicalShapes to_classical(const BetaParams& p);
// mu = alpha / (alpha + beta), phi = 1 / (alpha + beta).
BetaParams from_classical(const ClassicalShapes& s);

// Beta scale mixture: Y | W = w ~ B(mu, phi / w), W ~ h(theta).
struct BsmParams {
  BetaParams base;
  MixingSpec mixing;
  std::size_t quadrature_nodes = kDefaultQuadratureNodes;

  void validate() const;
};

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

// Log density of B(mu, phi). Throws std::domain_error for y outside (0,1).
double beta_log_pdf(double y, const BetaParams& p);

// Same, from precomputed ln y and ln(1 - y). No argument checks.
inline double beta_log_pdf_logs(double log_y, double log_1my, double mu, double phi) {
  const double a = mu / phi;
  const double b = (1.0 - mu) / phi;
  return (a - 1.0) * log_y + (b - 1.0) * log_1my - log_beta_fn(a, b);
}

MomentSummary beta_moments(const BetaParams& p);

// log f_BSM(y) = log sum_j w_j exp(beta_log_pdf(y; mu, phi / node_j)).
double bsm_log_pdf(double y, const BsmParams& p);
double bsm_log_pdf(double y, const BetaParams& base, const QuadratureRule& rule);

// Raw moments via E_h[prod_{r<k} (mu W + r phi) / (W + r phi)], converted to
// central moments.
MomentSummary bsm_moments(const BsmParams& p);

// mu (1 - mu) phi E_h[1 / (phi + W)].
double bsm_variance_display(const BsmParams& p);

// Posterior probability that y came from the reference component of the
// two-point beta: theta1 f_B(y; mu, phi) / f_TPB(y).
double tpb_posterior_prob(double y, double mu, double phi, double theta1, double theta2);
inline bool tpb_is_reference(double posterior) { return posterior > 0.5; }

// log f_TPB written as the explicit two-component mixture.
double tpb_log_pdf(double y, double mu, double phi, double theta1, double theta2);

// Classical beta variate; stays inside the open unit interval even for tiny shapes.
double sample_beta(double alpha, double beta, Rng& rng);

// Hierarchical draws: W from the mixing law, then Y | W from B(mu, phi / W).
std::vector<double> bsm_sample(const BsmParams& p, Rng& rng, std::size_t n);

}  // namespace bsm
