#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "bsm/regression.hpp"

namespace bsm {

// Two-point beta regression parameters.
struct TpbParams {
  Vector coefficients;
  double phi = 0.5;
  double theta1 = 0.95;
  double theta2 = 2.0;

  RegressionModel model() const;
};

// z_i (reference) and 1 - z_i (contaminant) posterior responsibilities.
struct Responsibilities {
  std::vector<double> reference;
  std::vector<double> contaminant;
};

Responsibilities e_step(const TpbParams& params, const Dataset& data,
                        Execution exec = Execution::Parallel);

// Closed-form theta1 update: mean of z, clipped to [1e-8, 1 - 1e-8].
double m_step_theta1(std::span<const double> z);

struct Q2Options {
  OptimOptions optim = [] {
    OptimOptions o;
    o.tol = 1e-12;
    o.gtol = 1e-6;
    o.simplex = false;
    return o;
  }();
  // Holds theta2 at its warm value and optimizes (beta, phi) only.
  bool fix_theta2 = false;
  Execution exec = Execution::Parallel;
};

// Q2 = sum_i z_i ln f_B(y_i; mu_i, phi) + (1 - z_i) ln f_B(y_i; mu_i, theta2 phi).
double q2_value(std::span<const double> z, const Dataset& data, const TpbParams& params,
                Execution exec = Execution::Parallel);

// Maximizes Q2 over (beta, ln phi, ln(theta2 - 1)) from `warm`; theta1 is carried over.
// Throws OptimizationError (quoting the warm values) if no usable point results.
TpbParams m_step_q2(std::span<const double> z, const Dataset& data, const TpbParams& warm,
                    const Q2Options& options = {});

// Observed-data log-likelihood of the two-point beta regression.
double tpb_log_likelihood(const TpbParams& params, const Dataset& data,
                          Execution exec = Execution::Parallel);

// One E-step followed by both M-step updates.
TpbParams em_iteration(const TpbParams& params, const Dataset& data, const Q2Options& options = {});

struct EmOptions {
  std::size_t max_iterations = 1000;
  double tol = 1e-8;        // relative observed log-likelihood change
  // Optionally also require the largest relative parameter move of the last
  // iteration to fall below this. Off by default; on weakly separated data EM
  // crawls and would hit the iteration cap.
  double step_tol = std::numeric_limits<double>::infinity();
  double slack = 1e-10;     // tolerated decrease before declaring an ascent violation
  Q2Options inner{};
  FitOptions start{};       // for the beta-regression start
};

struct EmTrace {
  std::vector<double> loglik_path;
  std::vector<double> responsibilities;
  std::size_t iterations = 0;
  bool converged = false;
};

struct EmFit {
  FitResult fit;
  EmTrace trace;
};

// EM for the two-point beta regression, started from the beta-regression MLE with
// theta1 = 0.95, theta2 = 2. Throws std::logic_error if the observed
// log-likelihood ever drops by more than options.slack.
EmFit em_fit(const Dataset& data, const EmOptions& options = {});
EmFit em_fit_from(const Dataset& data, const TpbParams& start, const EmOptions& options = {});

}  // namespace bsm
