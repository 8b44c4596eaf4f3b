#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bsm/mixing.hpp"
#include "bsm/optimize.hpp"
#include "bsm/quadrature.hpp"

namespace bsm {

enum class Execution { Serial, Parallel };

// Ordered name -> value table (coefficients first, then phi, then mixing parameters).
class ParamTable {
 public:
  void set(std::string name, double value);
  double at(std::string_view name) const;  // throws std::out_of_range
  std::optional<double> find(std::string_view name) const;
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

// Responses strictly inside (0,1) and a design whose first column is the intercept.
class Dataset {
 public:
  Dataset() = default;
  // Validates: matching sizes, y in (0,1) (std::domain_error naming the row),
  // intercept column of ones and full column rank (std::invalid_argument).
  Dataset(std::vector<double> response, Matrix design, std::vector<std::string> column_names);

  const std::vector<double>& response() const { return response_; }
  const Matrix& design() const { return design_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<double>& log_response() const { return log_y_; }
  const std::vector<double>& log_complement() const { return log_1my_; }
  std::size_t size() const { return response_.size(); }
  std::size_t columns() const { return static_cast<std::size_t>(design_.cols()); }

 private:
  std::vector<double> response_;
  Matrix design_;
  std::vector<std::string> names_;
  std::vector<double> log_y_;
  std::vector<double> log_1my_;
};

// Rows of `a` followed by rows of `b`.
Dataset concatenate(const Dataset& a, const Dataset& b);
// Row i of the result is row order[i] of `data`.
Dataset permute_rows(const Dataset& data, const std::vector<std::size_t>& order);

// logit^-1, saturating to the open interval: link_inverse(40) < 1.
double link_inverse(double eta);
// 1 - link_inverse(eta) without cancellation.
double link_inverse_complement(double eta);
double logit(double mu);
// logit from a mean and its separately computed complement.
double logit(double mu, double complement);

struct RegressionModel {
  MixingKind family = MixingKind::Degenerate;
  Vector coefficients;
  double phi = 0.5;
  double theta1 = 0.95;  // TwoPoint
  double theta2 = 2.0;   // TwoPoint
  double theta = 0.1;    // Gamma / LogNormal / InverseGaussian

  MixingSpec mixing() const;
  void validate() const;
  std::size_t parameter_count() const;
  ParamTable natural() const;
};

// Working (unconstrained) scale: beta as is, log phi, log theta or
// (logit theta1, log(theta2 - 1)).
Vector to_working(const RegressionModel& model);
RegressionModel from_working(MixingKind family, const Vector& working, std::size_t coefficient_count);
// d natural / d working, elementwise (the map is diagonal).
Vector working_jacobian(MixingKind family, const Vector& working, std::size_t coefficient_count);
std::vector<std::string> parameter_names(MixingKind family, std::size_t coefficient_count);

// Per-observation mean mu_i = link_inverse(x_i' beta).
std::vector<double> fitted_means(const Matrix& design, const Vector& coefficients);

double log_likelihood(const RegressionModel& model, const Dataset& data,
                      std::size_t nodes = kDefaultQuadratureNodes,
                      Execution exec = Execution::Parallel);

struct FitOptions {
  std::size_t nodes = kDefaultQuadratureNodes;
  OptimOptions optim{};
  std::size_t restarts = 5;
  double jitter = 0.5;
  std::uint64_t seed = 0x5eedULL;
  std::optional<RegressionModel> start;  // overrides the least-squares start
  Execution exec = Execution::Parallel;
};

struct FitResult {
  MixingKind family = MixingKind::Degenerate;
  std::size_t nodes = kDefaultQuadratureNodes;
  std::size_t observations = 0;
  std::size_t parameter_count = 0;
  RegressionModel model;
  ParamTable natural_estimates;
  Vector working_estimates;
  ParamTable standard_errors;
  bool se_available = false;
  std::string se_diagnostic;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  ParamTable start_used;
};

// Least-squares start: beta from OLS of logit(y), phi by moment matching, mixing
// parameters near the beta limit.
RegressionModel initial_model(const Dataset& data, MixingKind family);

// Direct maximum likelihood on the working scale. Standard errors are
// attached when the Hessian allows it.
FitResult fit_mle(const Dataset& data, MixingKind family, const FitOptions& options = {});

// Observed-information covariance of a working-scale minimum of `negloglik`.
struct WorkingCovariance {
  bool ok = false;
  Matrix covariance;
  std::string diagnostic;
};
WorkingCovariance working_covariance(const Objective& negloglik, const Vector& point);

// Delta-method natural-scale standard errors for a fit. When the Hessian is not
// positive definite the table is empty and `diagnostic` explains why.
struct StandardErrors {
  bool ok = false;
  ParamTable values;
  std::string diagnostic;
};
StandardErrors standard_errors(const FitResult& fit, const Dataset& data);

// Fills loglik, aic, bic, natural estimates and standard errors of `fit` from
// its working estimates.
void finalize_fit(FitResult& fit, const Dataset& data);

}  // namespace bsm
