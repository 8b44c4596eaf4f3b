#include "bsm/mixing.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "bsm/special.hpp"

namespace bsm {

std::string_view family_label(MixingKind kind) {
  switch (kind) {
    case MixingKind::Degenerate: return "beta";
    case MixingKind::TwoPoint: return "tpb";
    case MixingKind::Gamma: return "gb";
    case MixingKind::LogNormal: return "lnb";
    case MixingKind::InverseGaussian: return "igb";
  }
  return "?";
}

std::optional<MixingKind> parse_family(std::string_view label) {
  for (auto kind : {MixingKind::Degenerate, MixingKind::TwoPoint, MixingKind::Gamma,
                    MixingKind::LogNormal, MixingKind::InverseGaussian}) {
    if (family_label(kind) == label) return kind;
  }
  return std::nullopt;
}

int mixing_parameter_count(MixingKind kind) {
  switch (kind) {
    case MixingKind::Degenerate: return 0;
    case MixingKind::TwoPoint: return 2;
    default: return 1;
  }
}

MixingSpec MixingSpec::degenerate() { return {}; }

MixingSpec MixingSpec::two_point(double theta1, double theta2) {
  MixingSpec s;
  s.kind = MixingKind::TwoPoint;
  s.theta1 = theta1;
  s.theta2 = theta2;
  s.validate();
  return s;
}

MixingSpec MixingSpec::scalar(MixingKind kind, double theta) {
  if (kind == MixingKind::Degenerate || kind == MixingKind::TwoPoint) {
    throw std::domain_error("MixingSpec::scalar: kind has no scalar theta");
  }
  MixingSpec s;
  s.kind = kind;
  s.theta = theta;
  s.validate();
  return s;
}

MixingSpec MixingSpec::gamma(double theta) { return scalar(MixingKind::Gamma, theta); }
MixingSpec MixingSpec::log_normal(double theta) { return scalar(MixingKind::LogNormal, theta); }
MixingSpec MixingSpec::inverse_gaussian(double theta) {
  return scalar(MixingKind::InverseGaussian, theta);
}

void MixingSpec::validate() const {
  switch (kind) {
    case MixingKind::Degenerate:
      return;
    case MixingKind::TwoPoint:
      if (!(theta1 > 0.0 && theta1 < 1.0) || !(theta2 > 1.0) || !std::isfinite(theta2)) {
        throw std::domain_error("two-point mixing needs 0 < theta1 < 1 and theta2 > 1, got " +
                                describe(*this));
      }
      return;
    default:
      if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw std::domain_error("mixing tail weight must be positive and finite, got " +
                                describe(*this));
      }
  }
}

std::string describe(const MixingSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << family_label(spec.kind);
  switch (spec.kind) {
    case MixingKind::Degenerate: break;
    case MixingKind::TwoPoint: os << "(theta1=" << spec.theta1 << ", theta2=" << spec.theta2 << ")"; break;
    default: os << "(theta=" << spec.theta << ")";
  }
  return os.str();
}

double mixing_log_density(const MixingSpec& spec, double w) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!(w > 0.0)) return kNegInf;
  const double t = spec.theta;
  switch (spec.kind) {
    case MixingKind::Degenerate:
      return w == 1.0 ? 0.0 : kNegInf;
    case MixingKind::TwoPoint: {
      if (w == 1.0) return std::log(spec.theta1);
      if (w == 1.0 / spec.theta2) return std::log1p(-spec.theta1);
      return kNegInf;
    }
    case MixingKind::Gamma: {
      // shape 1/theta + 1, scale theta: mode at 1.
      const double shape = 1.0 / t + 1.0;
      return (shape - 1.0) * std::log(w) - w / t - shape * std::log(t) - log_gamma(shape);
    }
    case MixingKind::LogNormal: {
      const double lw = std::log(w);
      return -lw - 0.5 * std::log(2.0 * std::numbers::pi * t) - (lw - t) * (lw - t) / (2.0 * t);
    }
    case MixingKind::InverseGaussian: {
      const double m = std::sqrt(3.0 * t + 1.0);
      const double lw = std::log(w);
      const double r = (w - m) / std::sqrt(w);  // no overflow in (w - m)^2 / w
      return 0.5 * std::log((3.0 * t + 1.0) / (2.0 * std::numbers::pi * t)) - 1.5 * lw -
             r * r / (2.0 * t);
    }
  }
  return kNegInf;
}

double mixing_density(const MixingSpec& spec, double w) {
  if (!(w > 0.0)) throw std::domain_error("mixing_density: w must be positive");
  return std::exp(mixing_log_density(spec, w));
}

double mixing_mean(const MixingSpec& spec) {
  const double t = spec.theta;
  switch (spec.kind) {
    case MixingKind::Degenerate: return 1.0;
    case MixingKind::TwoPoint: return spec.theta1 + (1.0 - spec.theta1) / spec.theta2;
    case MixingKind::Gamma: return 1.0 + t;
    case MixingKind::LogNormal: return std::exp(1.5 * t);
    case MixingKind::InverseGaussian: return std::sqrt(3.0 * t + 1.0);
  }
  return 1.0;
}

double sample_inverse_gaussian(double mean, double shape, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double v = normal(rng);
  const double y = v * v;
  const double my = mean * y;
  const double x = mean + mean * my / (2.0 * shape) -
                   mean / (2.0 * shape) * std::sqrt(4.0 * mean * shape * y + my * my);
  if (unif(rng) <= mean / (mean + x)) return x;
  return mean * mean / x;
}

double sample_mixing_one(const MixingSpec& spec, Rng& rng) {
  const double t = spec.theta;
  switch (spec.kind) {
    case MixingKind::Degenerate:
      return 1.0;
    case MixingKind::TwoPoint: {
      std::bernoulli_distribution good(spec.theta1);
      return good(rng) ? 1.0 : 1.0 / spec.theta2;
    }
    case MixingKind::Gamma: {
      std::gamma_distribution<double> g(1.0 / t + 1.0, t);
      return g(rng);
    }
    case MixingKind::LogNormal: {
      std::normal_distribution<double> z(0.0, 1.0);
      return std::exp(t + std::sqrt(t) * z(rng));
    }
    case MixingKind::InverseGaussian: {
      const double m2 = 3.0 * t + 1.0;
      return sample_inverse_gaussian(std::sqrt(m2), m2 / t, rng);
    }
  }
  return 1.0;
}

std::vector<double> sample_mixing(const MixingSpec& spec, Rng& rng, std::size_t n) {
  spec.validate();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_mixing_one(spec, rng));
  return out;
}

}  // namespace bsm
