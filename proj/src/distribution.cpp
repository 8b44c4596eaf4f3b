#include "bsm/distribution.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bsm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_unit_open(double y, const char* who) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::domain_error(std::string(who) + ": y must lie in the open interval (0,1), got " +
                            std::to_string(y));
  }
}

// One-pass log-sum-exp accumulator.
struct LogSumExp {
  double max = kNegInf;
  double scaled = 0.0;

  void add(double t) {
    if (t == kNegInf) return;
    if (t <= max) {
      scaled += std::exp(t - max);
    } else {
      scaled = scaled * std::exp(max - t) + 1.0;
      max = t;
    }
  }
  double value() const { return max == kNegInf ? kNegInf : max + std::log(scaled); }
};

}  // namespace

void BetaParams::validate() const {
  if (!(mu > 0.0 && mu < 1.0) || !(phi > 0.0) || !std::isfinite(phi)) {
    throw std::domain_error("beta parameters need 0 < mu < 1 and phi > 0 (mu=" +
                            std::to_string(mu) + ", phi=" + std::to_string(phi) + ")");
  }
}

void BsmParams::validate() const {
  base.validate();
  mixing.validate();
  if (quadrature_nodes < 1) throw std::domain_error("quadrature_nodes must be >= 1");
}

ClassicalShapes to_classical(const BetaParams& p) {
  p.validate();
  return {p.mu / p.phi, (1.0 - p.mu) / p.phi};
}

BetaParams from_classical(const ClassicalShapes& s) {
  const double total = s.alpha + s.beta;
  return {s.alpha / total, 1.0 / total};
}

double beta_log_pdf(double y, const BetaParams& p) {
  check_unit_open(y, "beta_log_pdf");
  p.validate();
  return beta_log_pdf_logs(std::log(y), std::log1p(-y), p.mu, p.phi);
}

MomentSummary beta_moments(const BetaParams& p) {
  p.validate();
  const double mu = p.mu, phi = p.phi;
  const double q = mu * (1.0 - mu);
  MomentSummary m;
  m.mean = mu;
  m.variance = q * phi / (1.0 + phi);
  m.skewness = 2.0 * (1.0 - 2.0 * mu) * std::sqrt(1.0 + 1.0 / phi) / ((2.0 + 1.0 / phi) * std::sqrt(q));
  m.excess_kurtosis =
      6.0 * phi * (1.0 + phi - q * (5.0 + 6.0 * phi)) / (q * (1.0 + 2.0 * phi) * (1.0 + 3.0 * phi));
  return m;
}

double bsm_log_pdf(double y, const BetaParams& base, const QuadratureRule& rule) {
  check_unit_open(y, "bsm_log_pdf");
  const double ly = std::log(y);
  const double l1y = std::log1p(-y);
  LogSumExp acc;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    if (rule.weights[j] <= 0.0) continue;
    acc.add(std::log(rule.weights[j]) + beta_log_pdf_logs(ly, l1y, base.mu, base.phi / rule.nodes[j]));
  }
  return acc.value();
}

double bsm_log_pdf(double y, const BsmParams& p) {
  check_unit_open(y, "bsm_log_pdf");
  p.validate();
  const auto rule = cached_quadrature(p.mixing, p.quadrature_nodes);
  return bsm_log_pdf(y, p.base, *rule);
}

MomentSummary bsm_moments(const BsmParams& p) {
  p.validate();
  const auto rule = cached_quadrature(p.mixing, p.quadrature_nodes);
  const double mu = p.base.mu, phi = p.base.phi;
  // E[Y^k] = mu * E_h[prod_{r=1}^{k-1} (mu W + r phi) / (W + r phi)]; the r = 0 factor is mu.
  auto raw = [&](int k) {
    return mu * expect_mixing(
                    [&](double w) {
                      double prod = 1.0;
                      for (int r = 1; r < k; ++r) prod *= (mu * w + r * phi) / (w + r * phi);
                      return prod;
                    },
                    *rule);
  };
  const double e2 = raw(2), e3 = raw(3), e4 = raw(4);
  const double mu2 = mu * mu;
  const double m2 = e2 - mu2;
  const double m3 = e3 - 3.0 * mu * e2 + 2.0 * mu2 * mu;
  const double m4 = e4 - 4.0 * mu * e3 + 6.0 * mu2 * e2 - 3.0 * mu2 * mu2;
  MomentSummary m;
  m.mean = mu;
  m.variance = m2;
  m.skewness = m3 / std::pow(m2, 1.5);
  m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return m;
}

double bsm_variance_display(const BsmParams& p) {
  p.validate();
  const auto rule = cached_quadrature(p.mixing, p.quadrature_nodes);
  const double phi = p.base.phi;
  return p.base.mu * (1.0 - p.base.mu) * phi *
         expect_mixing([phi](double w) { return 1.0 / (phi + w); }, *rule);
}

double tpb_log_pdf(double y, double mu, double phi, double theta1, double theta2) {
  check_unit_open(y, "tpb_log_pdf");
  const double ly = std::log(y), l1y = std::log1p(-y);
  LogSumExp acc;
  acc.add(std::log1p(-theta1) + beta_log_pdf_logs(ly, l1y, mu, theta2 * phi));
  acc.add(std::log(theta1) + beta_log_pdf_logs(ly, l1y, mu, phi));
  return acc.value();
}

double tpb_posterior_prob(double y, double mu, double phi, double theta1, double theta2) {
  check_unit_open(y, "tpb_posterior_prob");
  BetaParams{mu, phi}.validate();
  MixingSpec::two_point(theta1, theta2);
  const double ly = std::log(y), l1y = std::log1p(-y);
  const double ref = std::log(theta1) + beta_log_pdf_logs(ly, l1y, mu, phi);
  const double con = std::log1p(-theta1) + beta_log_pdf_logs(ly, l1y, mu, theta2 * phi);
  // 1 / (1 + exp(con - ref)) without overflow.
  const double d = con - ref;
  return d > 0.0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
}

double sample_beta(double alpha, double beta, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // ln of a Gamma(shape, 1) variate; shapes below one use G(a) = G(a + 1) U^(1/a).
  auto log_gamma_variate = [&](double shape) {
    if (shape >= 1.0) {
      std::gamma_distribution<double> g(shape, 1.0);
      double v;
      do v = g(rng); while (!(v > 0.0));
      return std::log(v);
    }
    std::gamma_distribution<double> g(shape + 1.0, 1.0);
    double v, u;
    do v = g(rng); while (!(v > 0.0));
    do u = unif(rng); while (!(u > 0.0));
    return std::log(v) + std::log(u) / shape;
  };
  const double la = log_gamma_variate(alpha);
  const double lb = log_gamma_variate(beta);
  const double d = lb - la;
  double y = d > 0.0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  constexpr double kLo = std::numeric_limits<double>::min();
  const double kHi = std::nextafter(1.0, 0.0);
  if (y < kLo) y = kLo;
  if (y > kHi) y = kHi;
  return y;
}

std::vector<double> bsm_sample(const BsmParams& p, Rng& rng, std::size_t n) {
  p.validate();
  std::vector<double> out;
  out.reserve(n);
  const double mu = p.base.mu, phi = p.base.phi;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sample_mixing_one(p.mixing, rng);
    out.push_back(sample_beta(mu * w / phi, (1.0 - mu) * w / phi, rng));
  }
  return out;
}

}  // namespace bsm
