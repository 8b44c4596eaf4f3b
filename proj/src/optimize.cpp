#include "bsm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bsm/errors.hpp"

namespace bsm {

namespace {

const double kStepScale = std::cbrt(std::numeric_limits<double>::epsilon());
constexpr double kInf = std::numeric_limits<double>::infinity();

double fd_step(double x) { return kStepScale * (1.0 + std::abs(x)); }

class Counted {
 public:
  explicit Counted(const Objective& f) : f_(f) {}
  double operator()(const Vector& x) {
    ++count_;
    const double v = f_(x);
    return std::isfinite(v) ? v : kInf;
  }
  std::size_t count() const { return count_; }

 private:
  const Objective& f_;
  std::size_t count_ = 0;
};

bool small_change(double f_old, double f_new, double tol) {
  return 2.0 * std::abs(f_old - f_new) <= tol * (std::abs(f_old) + std::abs(f_new)) + 1e-300;
}

// Returns the iteration count.
std::size_t nelder_mead(Counted& f, Vector& best, double& best_value, const OptimOptions& opt) {
  const auto dim = best.size();
  const std::size_t max_iter =
      opt.max_simplex_iterations ? opt.max_simplex_iterations : 200 * static_cast<std::size_t>(dim);
  std::vector<Vector> simplex(static_cast<std::size_t>(dim) + 1, best);
  std::vector<double> values(simplex.size());
  values[0] = best_value;
  for (Eigen::Index i = 0; i < dim; ++i) {
    auto& v = simplex[static_cast<std::size_t>(i) + 1];
    v[i] += opt.initial_step * std::max(1.0, std::abs(v[i]));
    values[static_cast<std::size_t>(i) + 1] = f(v);
  }
  // Dimension-adaptive coefficients keep the simplex from collapsing in higher dimensions.
  const double n = static_cast<double>(dim);
  const double alpha = 1.0, gamma = 1.0 + 2.0 / n, rho = 0.75 - 0.5 / n, sigma = 1.0 - 1.0 / n;

  std::vector<std::size_t> order(simplex.size());
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t lo = order.front(), hi = order.back(), second = order[order.size() - 2];
    if (std::isfinite(values[hi]) && small_change(values[lo], values[hi], opt.tol)) {
      double spread = 0.0;
      for (const auto& v : simplex) spread = std::max(spread, (v - simplex[lo]).lpNorm<Eigen::Infinity>());
      if (spread < 1e-3) break;
    }

    Vector centroid = Vector::Zero(dim);
    for (std::size_t k = 0; k < simplex.size(); ++k)
      if (k != hi) centroid += simplex[k];
    centroid /= n;

    const Vector reflected = centroid + alpha * (centroid - simplex[hi]);
    const double fr = f(reflected);
    if (fr < values[lo]) {
      const Vector expanded = centroid + gamma * (reflected - centroid);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[hi] = expanded;
        values[hi] = fe;
      } else {
        simplex[hi] = reflected;
        values[hi] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[hi] = reflected;
      values[hi] = fr;
      continue;
    }
    const bool outside = fr < values[hi];
    const Vector contracted = outside ? Vector(centroid + rho * (reflected - centroid))
                                      : Vector(centroid + rho * (simplex[hi] - centroid));
    const double fc = f(contracted);
    if (fc < (outside ? fr : values[hi])) {
      simplex[hi] = contracted;
      values[hi] = fc;
      continue;
    }
    for (std::size_t k = 0; k < simplex.size(); ++k) {
      if (k == lo) continue;
      simplex[k] = simplex[lo] + sigma * (simplex[k] - simplex[lo]);
      values[k] = f(simplex[k]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  const std::size_t k = static_cast<std::size_t>(it - values.begin());
  if (values[k] < best_value) {
    best_value = values[k];
    best = simplex[k];
  }
  return iter;
}

Vector gradient_counted(Counted& f, const Vector& x) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Gradient: return "gradient";
    case StopReason::ObjectiveChange: return "objective_change";
    case StopReason::IterationLimit: return "iteration_limit";
    case StopReason::LineSearch: return "line_search";
  }
  return "?";
}

OptimResult minimize(const Objective& objective, const Vector& start, const OptimOptions& options) {
  Counted f(objective);
  const double f0 = objective(start);
  if (!std::isfinite(f0)) {
    throw OptimizationError("minimize: objective is not finite at the start point");
  }
  OptimResult result;
  Vector x = start;
  double fx = f0;
  if (options.simplex) result.iterations = nelder_mead(f, x, fx, options);

  // BFGS refinement on the inverse Hessian.
  const auto dim = x.size();
  Vector g = gradient_counted(f, x);
  Matrix hinv = Matrix::Identity(dim, dim);
  bool scaled = false;
  result.reason = StopReason::IterationLimit;
  for (std::size_t it = 0; it < options.max_qn_iterations; ++it, ++result.iterations) {
    if (!g.allFinite()) {
      result.reason = StopReason::LineSearch;
      break;
    }
    if (g.lpNorm<Eigen::Infinity>() < options.gtol) {
      result.reason = StopReason::Gradient;
      break;
    }
    Vector dir = -hinv * g;
    if (!(dir.dot(g) < 0.0)) {
      hinv.setIdentity();
      dir = -g;
    }
    const double slope = dir.dot(g);
    double step = 1.0;
    double f_new = kInf;
    Vector x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new);
      if (f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(f_new <= fx)) {
      if (hinv.isIdentity()) {
        result.reason = StopReason::LineSearch;
        break;
      }
      hinv.setIdentity();  // retry along steepest descent
      continue;
    }
    const Vector g_new = gradient_counted(f, x_new);
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double f_old = fx;
    x = x_new;
    fx = f_new;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv *= sy / y.dot(y);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix left = Matrix::Identity(dim, dim) - rho * s * y.transpose();
      hinv = left * hinv * left.transpose() + rho * s * s.transpose();
    }
    // Realized decrease negligible and the quasi-Newton decrement g' H^-1 g / 2
    // (the decrease still on offer) below tol^2, floored at what f can resolve.
    const double decrement = 0.5 * std::abs(g.dot(hinv * g));
    const double offer = std::max(options.tol * options.tol, std::numeric_limits<double>::epsilon());
    if (small_change(f_old, fx, options.tol) && decrement <= offer * std::max(1.0, std::abs(fx))) {
      result.reason = StopReason::ObjectiveChange;
      break;
    }
  }
  result.argmin = x;
  result.value = fx;
  result.gradient_norm = g.allFinite() ? g.lpNorm<Eigen::Infinity>() : kInf;
  // A failed line search at a gradient within finite-difference noise is a
  // stationary point for all practical purposes.
  const double noise_floor =
      100.0 * std::numeric_limits<double>::epsilon() / kStepScale * std::max(1.0, std::abs(fx));
  result.converged = result.reason == StopReason::Gradient ||
                     result.reason == StopReason::ObjectiveChange ||
                     (result.reason == StopReason::LineSearch &&
                      result.gradient_norm < std::max(options.gtol, noise_floor));
  result.evaluations = f.count() + 1;
  return result;
}

Vector numeric_gradient(const Objective& objective, const Vector& point) {
  Counted f(objective);
  return gradient_counted(f, point);
}

Matrix numeric_hessian(const Objective& objective, const Vector& point) {
  const auto dim = point.size();
  Matrix h(dim, dim);
  const double f0 = objective(point);
  Vector probe = point;
  std::vector<double> steps(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) steps[static_cast<std::size_t>(i)] = fd_step(point[i]);

  for (Eigen::Index i = 0; i < dim; ++i) {
    const double hi = steps[static_cast<std::size_t>(i)];
    probe[i] = point[i] + hi;
    const double fp = objective(probe);
    probe[i] = point[i] - hi;
    const double fm = objective(probe);
    probe[i] = point[i];
    h(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double hj = steps[static_cast<std::size_t>(j)];
      auto at = [&](double si, double sj) {
        probe[i] = point[i] + si * hi;
        probe[j] = point[j] + sj * hj;
        const double v = objective(probe);
        probe[i] = point[i];
        probe[j] = point[j];
        return v;
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  Matrix sym = 0.5 * (h + h.transpose());
  if (!sym.allFinite()) {
    std::ostringstream os;
    os << "numeric_hessian: non-finite entries at";
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        if (!std::isfinite(sym(i, j))) os << " (" << i << "," << j << ")";
    throw EvaluationError(os.str());
  }
  return sym;
}

}  // namespace bsm
