#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bsm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Objective = std::function<double(const Vector&)>;

struct OptimOptions {
  double tol = 1e-8;             // relative objective change
  double gtol = 1e-6;            // gradient infinity norm
  double initial_step = 0.1;     // simplex edge, scaled by max(1, |x_i|)
  std::size_t max_simplex_iterations = 0;  // 0 -> 200 * dim
  std::size_t max_qn_iterations = 500;
  bool simplex = true;           // false skips the Nelder-Mead phase (warm starts)
};

enum class StopReason { Gradient, ObjectiveChange, IterationLimit, LineSearch };
std::string_view to_string(StopReason reason);

struct OptimResult {
  Vector argmin;
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double gradient_norm = 0.0;
  StopReason reason = StopReason::IterationLimit;
};

// Nelder-Mead followed by BFGS with central-difference gradients.
//
// Non-finite objective values inside the search are treated as +inf and
// rejected; a non-finite value at `start` throws OptimizationError. The best
// value never increases between iterations.
OptimResult minimize(const Objective& objective, const Vector& start,
                     const OptimOptions& options = {});

// Central differences with h_i = cbrt(eps) * (1 + |x_i|).
Vector numeric_gradient(const Objective& objective, const Vector& point);

// Central-difference Hessian, symmetrized as (H + H^T) / 2. Throws
// EvaluationError listing the offending coordinate pairs on non-finite entries.
Matrix numeric_hessian(const Objective& objective, const Vector& point);

}  // namespace bsm
