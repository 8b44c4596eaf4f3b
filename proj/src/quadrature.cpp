#include "bsm/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "bsm/errors.hpp"

namespace bsm {

namespace {

// Orthonormal polynomial values p_0..p_{n-1} at x, plus the (unnormalized)
// degree-n polynomial and its derivative for Newton polishing.
struct RecurrenceEval {
  double sum_sq = 0.0;
  double pn = 0.0;
  double dpn = 0.0;
};

RecurrenceEval eval_recurrence(const std::vector<double>& a, const std::vector<double>& b,
                               double x) {
  const std::size_t n = a.size();
  RecurrenceEval r;
  double p_prev = 0.0, p = 1.0;
  double d_prev = 0.0, d = 0.0;
  r.sum_sq = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double bk = k == 0 ? 0.0 : b[k - 1];
    double p_next = (x - a[k]) * p - bk * p_prev;
    double d_next = p + (x - a[k]) * d - bk * d_prev;
    if (k + 1 < n) {
      p_next /= b[k];
      d_next /= b[k];
      r.sum_sq += p_next * p_next;
    }
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
  }
  r.pn = p;
  r.dpn = d;
  return r;
}

}  // namespace

QuadratureRule gauss_from_recurrence(const std::vector<double>& diag,
                                     const std::vector<double>& offdiag) {
  const std::size_t n = diag.size();
  if (n == 0 || offdiag.size() + 1 != n) {
    throw std::invalid_argument("gauss_from_recurrence: inconsistent Jacobi matrix");
  }
  QuadratureRule rule;
  if (n == 1) {
    rule.nodes = {diag[0]};
    rule.weights = {1.0};
    return rule;
  }
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd e =
      Eigen::Map<const Eigen::VectorXd>(offdiag.data(), static_cast<Eigen::Index>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("gauss_from_recurrence: eigenvalue iteration failed");
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();

  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double x = ev[static_cast<Eigen::Index>(j)];
    for (int it = 0; it < 3; ++it) {
      const auto r = eval_recurrence(diag, offdiag, x);
      if (r.dpn == 0.0 || !std::isfinite(r.pn / r.dpn)) break;
      const double step = r.pn / r.dpn;
      if (std::abs(step) > 1e-6 * (1.0 + std::abs(x))) break;
      x -= step;
      if (std::abs(step) <= 1e-17 * (1.0 + std::abs(x))) break;
    }
    rule.nodes[j] = x;
    rule.weights[j] = 1.0 / eval_recurrence(diag, offdiag, x).sum_sq;
    total += rule.weights[j];
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

QuadratureRule gauss_hermite_normal(std::size_t n) {
  std::vector<double> a(n, 0.0), b(n > 0 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) b[k - 1] = std::sqrt(static_cast<double>(k));
  return gauss_from_recurrence(a, b);
}

QuadratureRule gauss_legendre_unit(std::size_t n) {
  std::vector<double> a(n, 0.5), b(n > 0 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    b[k - 1] = 0.5 * kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  auto rule = gauss_from_recurrence(a, b);
  // Symmetrize about 1/2 so the rule is exact under reflection.
  for (std::size_t j = 0; j < n / 2; ++j) {
    const std::size_t k = n - 1 - j;
    const double half_gap = 0.5 * ((1.0 - rule.nodes[k]) + rule.nodes[j]);
    rule.nodes[j] = half_gap;
    rule.nodes[k] = 1.0 - half_gap;
    const double w = 0.5 * (rule.weights[j] + rule.weights[k]);
    rule.weights[j] = rule.weights[k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

QuadratureRule gauss_laguerre_gamma(std::size_t n, double alpha) {
  if (!(alpha > -1.0)) throw std::domain_error("gauss_laguerre_gamma: alpha must exceed -1");
  std::vector<double> a(n), b(n > 0 ? n - 1 : 0);
  for (std::size_t k = 0; k < n; ++k) a[k] = 2.0 * static_cast<double>(k) + alpha + 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    b[k - 1] = std::sqrt(kk * (kk + alpha));
  }
  return gauss_from_recurrence(a, b);
}

namespace {

const QuadratureRule& base_rule(std::size_t n, bool hermite) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, bool>, std::unique_ptr<QuadratureRule>> rules;
  std::lock_guard lock(mu);
  auto& slot = rules[{n, hermite}];
  if (!slot) {
    slot = std::make_unique<QuadratureRule>(hermite ? gauss_hermite_normal(n)
                                                    : gauss_legendre_unit(n));
  }
  return *slot;
}

}  // namespace

namespace {

// Interval around the mode w = 1 outside which the density is below
// e^-45 of its peak. Bisection in ln w; the laws are unimodal.
std::pair<double, double> effective_support(const MixingSpec& spec) {
  constexpr double kDrop = 45.0;
  const double floor = mixing_log_density(spec, 1.0) - kDrop;
  auto inside = [&](double lw) { return mixing_log_density(spec, std::exp(lw)) >= floor; };
  auto edge = [&](double in, double out) {
    for (int i = 0; i < 200 && std::abs(out - in) > 1e-12; ++i) {
      const double mid = 0.5 * (in + out);
      (inside(mid) ? in : out) = mid;
    }
    return out;
  };
  double lo = -1.0;
  while (inside(lo) && lo > -700.0) lo *= 2.0;
  double hi = 1.0;
  while (inside(hi) && hi < 700.0) hi *= 2.0;
  return {std::exp(edge(0.0, lo)), std::exp(edge(0.0, hi))};
}

}  // namespace

QuadratureRule build_quadrature(const MixingSpec& spec, std::size_t node_count) {
  if (node_count == 0) throw std::domain_error("build_quadrature: node_count must be >= 1");
  spec.validate();
  const double t = spec.theta;
  QuadratureRule rule;
  switch (spec.kind) {
    case MixingKind::Degenerate:
      rule.nodes = {1.0};
      rule.weights = {1.0};
      return rule;
    case MixingKind::TwoPoint:
      rule.nodes = {1.0 / spec.theta2, 1.0};
      rule.weights = {1.0 - spec.theta1, spec.theta1};
      return rule;
    case MixingKind::Gamma: {
      // W = theta * X with X ~ Gamma(1/theta + 1, 1).
      rule = gauss_laguerre_gamma(node_count, 1.0 / t);
      for (double& x : rule.nodes) x *= t;
      return rule;
    }
    case MixingKind::LogNormal: {
      // W = exp(theta + sqrt(theta) Z).
      rule = base_rule(node_count, true);
      const double s = std::sqrt(t);
      for (double& z : rule.nodes) z = std::exp(t + s * z);
      return rule;
    }
    case MixingKind::InverseGaussian: {
      // W = V / (1 - V), Gauss-Legendre in V over the image of the interval
      // carrying all but a negligible part of the mass; density and Jacobian
      // folded into the weights.
      const auto [w_lo, w_hi] = effective_support(spec);
      const double v_lo = w_lo / (1.0 + w_lo), v_hi = w_hi / (1.0 + w_hi);
      const QuadratureRule& leg = base_rule(node_count, false);
      rule.nodes.resize(node_count);
      rule.weights.resize(node_count);
      double total = 0.0;
      for (std::size_t j = 0; j < node_count; ++j) {
        const double v = v_lo + (v_hi - v_lo) * leg.nodes[j];
        const double w = v / (1.0 - v);
        const double log_jac = -2.0 * std::log1p(-v);
        const double weight =
            leg.weights[j] * (v_hi - v_lo) * std::exp(mixing_log_density(spec, w) + log_jac);
        rule.nodes[j] = w;
        rule.weights[j] = weight;
        total += weight;
      }
      if (!(total > 0.0) || !std::isfinite(total)) {
        throw std::domain_error("build_quadrature: inverse-Gaussian rule degenerated for " +
                                describe(spec));
      }
      for (double& w : rule.weights) w /= total;
      return rule;
    }
  }
  return rule;
}

std::shared_ptr<const QuadratureRule> cached_quadrature(const MixingSpec& spec,
                                                        std::size_t node_count) {
  using Key = std::tuple<MixingKind, double, double, double, std::size_t>;
  static std::shared_mutex mu;
  static std::map<Key, std::shared_ptr<const QuadratureRule>> cache;
  constexpr std::size_t kMaxEntries = 4096;

  const Key key{spec.kind, spec.theta1, spec.theta2, spec.theta, node_count};
  {
    std::shared_lock lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto rule = std::make_shared<const QuadratureRule>(build_quadrature(spec, node_count));
  std::unique_lock lock(mu);
  if (cache.size() >= kMaxEntries) cache.clear();
  auto [it, inserted] = cache.emplace(key, rule);
  return it->second;
}

double expect_mixing(const std::function<double(double)>& g, const QuadratureRule& rule) {
  double acc = 0.0;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const double v = g(rule.nodes[j]);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "expect_mixing: integrand is not finite at node " << j << " (w=" << rule.nodes[j]
         << ", g=" << v << ")";
      throw EvaluationError(os.str());
    }
    acc += rule.weights[j] * v;
  }
  return acc;
}

}  // namespace bsm
