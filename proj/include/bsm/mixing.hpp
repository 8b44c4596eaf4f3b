#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace bsm {

// Law of the mixing variable W that rescales the variability phi -> phi / W.
enum class MixingKind { Degenerate, TwoPoint, Gamma, LogNormal, InverseGaussian };

// Short names used on the command line and in reports: beta, tpb, gb, lnb, igb.
std::string_view family_label(MixingKind kind);
std::optional<MixingKind> parse_family(std::string_view label);

// Number of mixing parameters carried by a kind (0, 1 or 2).
int mixing_parameter_count(MixingKind kind);

// A mixing law together with its tail parameters.
//
// TwoPoint puts mass theta1 on w = 1 and 1 - theta1 on w = 1/theta2.
// Gamma, LogNormal and InverseGaussian are the mode-1 parameterizations
// with a single tail weight theta. Use the named constructors; they
// validate.
struct MixingSpec {
  MixingKind kind = MixingKind::Degenerate;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta = 0.0;

  static MixingSpec degenerate();
  static MixingSpec two_point(double theta1, double theta2);
  static MixingSpec gamma(double theta);
  static MixingSpec log_normal(double theta);
  static MixingSpec inverse_gaussian(double theta);
  // Scalar-theta kinds only.
  static MixingSpec scalar(MixingKind kind, double theta);

  // Throws std::domain_error when the parameters violate the kind's constraints.
  void validate() const;

  auto operator<=>(const MixingSpec&) const = default;
};

std::string describe(const MixingSpec& spec);

// h(w; theta): density for continuous kinds, mass for TwoPoint/Degenerate.
// Throws std::domain_error for w <= 0.
double mixing_density(const MixingSpec& spec, double w);

// ln h(w; theta) for the continuous kinds; -inf outside the support.
double mixing_log_density(const MixingSpec& spec, double w);

using Rng = std::mt19937_64;

// Draws n values of W. Mutates only `rng`.
std::vector<double> sample_mixing(const MixingSpec& spec, Rng& rng, std::size_t n);
double sample_mixing_one(const MixingSpec& spec, Rng& rng);

// Exact inverse-Gaussian variate with mean m and shape lambda
// (transformation with multiple roots).
double sample_inverse_gaussian(double mean, double shape, Rng& rng);

// Moments of W used throughout the tests and the quadrature builders.
double mixing_mean(const MixingSpec& spec);

}  // namespace bsm
