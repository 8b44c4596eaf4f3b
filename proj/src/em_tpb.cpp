#include "bsm/em_tpb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bsm/errors.hpp"
#include "bsm/kernels.hpp"
#include "bsm/special.hpp"

namespace bsm {

namespace {

constexpr double kTheta1Clip = 1e-8;

struct Components {
  std::vector<double> reference;
  std::vector<double> contaminant;
};

Components component_logs(const Vector& coefficients, double phi, double theta2, const Dataset& data,
                          Execution exec) {
  const auto mu = fitted_means(data.design(), coefficients);
  Components c{std::vector<double>(data.size()), std::vector<double>(data.size())};
  if (exec == Execution::Parallel) {
    kernels::tpb_components_parallel(data.log_response(), data.log_complement(), mu, phi, theta2,
                                     c.reference, c.contaminant);
  } else {
    kernels::tpb_components_serial(data.log_response(), data.log_complement(), mu, phi, theta2,
                                   c.reference, c.contaminant);
  }
  return c;
}

std::string describe_params(const TpbParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "beta=(";
  for (Eigen::Index i = 0; i < p.coefficients.size(); ++i) os << (i ? ", " : "") << p.coefficients[i];
  os << "), phi=" << p.phi << ", theta1=" << p.theta1 << ", theta2=" << p.theta2;
  return os.str();
}

}  // namespace

RegressionModel TpbParams::model() const {
  RegressionModel m;
  m.family = MixingKind::TwoPoint;
  m.coefficients = coefficients;
  m.phi = phi;
  m.theta1 = theta1;
  m.theta2 = theta2;
  return m;
}

Responsibilities e_step(const TpbParams& params, const Dataset& data, Execution exec) {
  params.model().validate();
  const auto c = component_logs(params.coefficients, params.phi, params.theta2, data, exec);
  const double log_t1 = std::log(params.theta1);
  const double log_t0 = std::log1p(-params.theta1);
  Responsibilities r{std::vector<double>(data.size()), std::vector<double>(data.size())};
  for (std::size_t i = 0; i < data.size(); ++i) {
    // Difference of the two joint log densities; the larger side is computed
    // as 1 / (1 + e^-|d|) and the smaller as 1 minus it, which is exact for
    // values in [1/2, 1], so each pair sums to exactly one.
    const double d = (log_t1 + c.reference[i]) - (log_t0 + c.contaminant[i]);
    const double big = 1.0 / (1.0 + std::exp(-std::abs(d)));
    const double small = 1.0 - big;
    r.reference[i] = d >= 0.0 ? big : small;
    r.contaminant[i] = d >= 0.0 ? small : big;
  }
  return r;
}

double m_step_theta1(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("m_step_theta1: no responsibilities");
  const double mean = pairwise_sum(z) / static_cast<double>(z.size());
  return std::clamp(mean, kTheta1Clip, 1.0 - kTheta1Clip);
}

double q2_value(std::span<const double> z, const Dataset& data, const TpbParams& params,
                Execution exec) {
  const auto c = component_logs(params.coefficients, params.phi, params.theta2, data, exec);
  std::vector<double> terms(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    terms[i] = z[i] * c.reference[i] + (1.0 - z[i]) * c.contaminant[i];
  }
  return pairwise_sum(terms);
}

TpbParams m_step_q2(std::span<const double> z, const Dataset& data, const TpbParams& warm,
                    const Q2Options& options) {
  if (z.size() != data.size()) throw std::invalid_argument("m_step_q2: z length mismatch");
  const auto p = static_cast<Eigen::Index>(data.columns());
  const bool free_theta2 = !options.fix_theta2;

  auto unpack = [&](const Vector& w) {
    TpbParams t = warm;
    t.coefficients = w.head(p);
    t.phi = std::exp(w[p]);
    if (free_theta2) t.theta2 = 1.0 + std::exp(w[p + 1]);
    return t;
  };
  const Objective objective = [&](const Vector& w) {
    const TpbParams t = unpack(w);
    if (!(t.phi > 0.0) || !std::isfinite(t.phi) || !(t.theta2 >= 1.0) || !std::isfinite(t.theta2)) {
      return std::numeric_limits<double>::infinity();
    }
    try {
      return -q2_value(z, data, t, options.exec);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Vector w0(p + 1 + (free_theta2 ? 1 : 0));
  w0.head(p) = warm.coefficients;
  w0[p] = std::log(warm.phi);
  if (free_theta2) w0[p + 1] = std::log(warm.theta2 - 1.0);

  OptimResult res;
  try {
    res = minimize(objective, w0, options.optim);
  } catch (const OptimizationError& e) {
    throw OptimizationError(std::string("m_step_q2: ") + e.what() + "; warm values " +
                            describe_params(warm));
  }
  if (!res.argmin.allFinite() || !std::isfinite(res.value)) {
    throw OptimizationError("m_step_q2: no finite maximizer; warm values " + describe_params(warm));
  }
  return unpack(res.argmin);
}

double tpb_log_likelihood(const TpbParams& params, const Dataset& data, Execution exec) {
  const auto c = component_logs(params.coefficients, params.phi, params.theta2, data, exec);
  const double log_t1 = std::log(params.theta1);
  const double log_t0 = std::log1p(-params.theta1);
  std::vector<double> terms(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double a = log_t1 + c.reference[i];
    const double b = log_t0 + c.contaminant[i];
    const double hi = std::max(a, b);
    terms[i] = hi + std::log1p(std::exp(std::min(a, b) - hi));
  }
  return pairwise_sum(terms);
}

namespace {

double max_relative_step(const TpbParams& a, const TpbParams& b) {
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(x)); };
  double m = std::max({rel(a.phi, b.phi), rel(a.theta1, b.theta1), rel(a.theta2, b.theta2)});
  for (Eigen::Index j = 0; j < a.coefficients.size(); ++j) {
    m = std::max(m, rel(a.coefficients[j], b.coefficients[j]));
  }
  return m;
}

}  // namespace

TpbParams em_iteration(const TpbParams& params, const Dataset& data, const Q2Options& options) {
  const Responsibilities r = e_step(params, data, options.exec);
  TpbParams next = params;
  next.theta1 = m_step_theta1(r.reference);
  next = m_step_q2(r.reference, data, next, options);
  return next;
}

EmFit em_fit_from(const Dataset& data, const TpbParams& start, const EmOptions& options) {
  start.model().validate();
  EmFit out;
  TpbParams params = start;
  double ll = tpb_log_likelihood(params, data, options.inner.exec);
  out.trace.loglik_path.push_back(ll);

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const TpbParams next = em_iteration(params, data, options.inner);
    const double ll_next = tpb_log_likelihood(next, data, options.inner.exec);
    if (ll_next < ll - options.slack) {
      std::ostringstream os;
      os.precision(17);
      os << "em_fit: observed log-likelihood decreased from " << ll << " to " << ll_next
         << " at iteration " << it;
      throw std::logic_error(os.str());
    }
    out.trace.loglik_path.push_back(ll_next);
    out.trace.iterations = it;
    const bool done = std::abs(ll_next - ll) <= options.tol * std::max(1.0, std::abs(ll_next)) &&
                      max_relative_step(params, next) <= options.step_tol;
    params = next;
    ll = ll_next;
    if (done) {
      out.trace.converged = true;
      break;
    }
  }
  out.trace.responsibilities = e_step(params, data, options.inner.exec).reference;

  FitResult& fit = out.fit;
  fit.family = MixingKind::TwoPoint;
  fit.nodes = options.start.nodes;
  fit.working_estimates = to_working(params.model());
  fit.converged = out.trace.converged;
  fit.iterations = out.trace.iterations;
  fit.start_used = start.model().natural();
  finalize_fit(fit, data);
  return out;
}

EmFit em_fit(const Dataset& data, const EmOptions& options) {
  const FitResult beta_fit = fit_mle(data, MixingKind::Degenerate, options.start);
  TpbParams start;
  start.coefficients = beta_fit.model.coefficients;
  start.phi = beta_fit.model.phi;
  start.theta1 = 0.95;
  start.theta2 = 2.0;
  return em_fit_from(data, start, options);
}

}  // namespace bsm
