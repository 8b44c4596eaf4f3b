#include "bsm/regression.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bsm/errors.hpp"
#include "bsm/kernels.hpp"
#include "bsm/selection.hpp"
#include "bsm/special.hpp"

namespace bsm {

// ---------------------------------------------------------------- ParamTable

void ParamTable::set(std::string name, double value) {
  for (auto& [k, v] : entries_) {
    if (k == name) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(std::move(name), value);
}

std::optional<double> ParamTable::find(std::string_view name) const {
  for (const auto& [k, v] : entries_)
    if (k == name) return v;
  return std::nullopt;
}

double ParamTable::at(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw std::out_of_range("ParamTable: no parameter named '" + std::string(name) + "'");
}

// ------------------------------------------------------------------- Dataset

Dataset::Dataset(std::vector<double> response, Matrix design, std::vector<std::string> column_names)
    : response_(std::move(response)), design_(std::move(design)), names_(std::move(column_names)) {
  const auto n = response_.size();
  if (static_cast<std::size_t>(design_.rows()) != n) {
    throw std::invalid_argument("Dataset: design has " + std::to_string(design_.rows()) +
                                " rows but there are " + std::to_string(n) + " responses");
  }
  if (design_.cols() < 1) throw std::invalid_argument("Dataset: design has no columns");
  if (names_.size() != static_cast<std::size_t>(design_.cols())) {
    throw std::invalid_argument("Dataset: column name count does not match the design");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double y = response_[i];
    if (!(y > 0.0 && y < 1.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "Dataset: response at row " << i + 1 << " is " << y
         << ", outside the open interval (0,1)";
      throw std::domain_error(os.str());
    }
  }
  for (Eigen::Index i = 0; i < design_.rows(); ++i) {
    if (design_(i, 0) != 1.0) {
      throw std::invalid_argument("Dataset: first design column must be the intercept (all ones)");
    }
  }
  if (!design_.allFinite()) throw std::invalid_argument("Dataset: design has non-finite entries");
  Eigen::ColPivHouseholderQR<Matrix> qr(design_);
  if (qr.rank() < design_.cols()) {
    throw std::invalid_argument("Dataset: design matrix is rank deficient (rank " +
                                std::to_string(qr.rank()) + " < " +
                                std::to_string(design_.cols()) + " columns)");
  }
  log_y_.resize(n);
  log_1my_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_y_[i] = std::log(response_[i]);
    log_1my_[i] = std::log1p(-response_[i]);
  }
}

Dataset concatenate(const Dataset& a, const Dataset& b) {
  if (a.columns() != b.columns()) throw std::invalid_argument("concatenate: column mismatch");
  std::vector<double> y = a.response();
  y.insert(y.end(), b.response().begin(), b.response().end());
  Matrix x(a.design().rows() + b.design().rows(), a.design().cols());
  x << a.design(), b.design();
  return Dataset(std::move(y), std::move(x), a.column_names());
}

Dataset permute_rows(const Dataset& data, const std::vector<std::size_t>& order) {
  if (order.size() != data.size()) throw std::invalid_argument("permute_rows: size mismatch");
  std::vector<double> y(order.size());
  Matrix x(data.design().rows(), data.design().cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    y[i] = data.response().at(order[i]);
    x.row(static_cast<Eigen::Index>(i)) = data.design().row(static_cast<Eigen::Index>(order[i]));
  }
  return Dataset(std::move(y), std::move(x), data.column_names());
}

// ---------------------------------------------------------------------- link

double link_inverse(double eta) {
  constexpr double kLo = std::numeric_limits<double>::min();
  const double kHi = std::nextafter(1.0, 0.0);
  double mu;
  if (eta >= 0.0) {
    mu = 1.0 / (1.0 + std::exp(-eta));
  } else {
    const double e = std::exp(eta);
    mu = e / (1.0 + e);
  }
  return std::clamp(mu, kLo, kHi);
}

double link_inverse_complement(double eta) { return link_inverse(-eta); }

double logit(double mu) { return std::log(mu) - std::log1p(-mu); }

double logit(double mu, double complement) { return std::log(mu) - std::log(complement); }

// ----------------------------------------------------------- RegressionModel

MixingSpec RegressionModel::mixing() const {
  switch (family) {
    case MixingKind::Degenerate: return MixingSpec::degenerate();
    case MixingKind::TwoPoint: return MixingSpec::two_point(theta1, theta2);
    default: return MixingSpec::scalar(family, theta);
  }
}

void RegressionModel::validate() const {
  if (coefficients.size() < 1) throw std::invalid_argument("RegressionModel: no coefficients");
  if (!coefficients.allFinite()) throw std::domain_error("RegressionModel: non-finite coefficient");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw std::domain_error("RegressionModel: phi must be positive");
  (void)mixing();
}

std::size_t RegressionModel::parameter_count() const {
  return static_cast<std::size_t>(coefficients.size()) + 1 +
         static_cast<std::size_t>(mixing_parameter_count(family));
}

std::vector<std::string> parameter_names(MixingKind family, std::size_t coefficient_count) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < coefficient_count; ++j) names.push_back("beta" + std::to_string(j));
  names.emplace_back("phi");
  if (family == MixingKind::TwoPoint) {
    names.emplace_back("theta1");
    names.emplace_back("theta2");
  } else if (family != MixingKind::Degenerate) {
    names.emplace_back("theta");
  }
  return names;
}

ParamTable RegressionModel::natural() const {
  ParamTable t;
  const auto names = parameter_names(family, static_cast<std::size_t>(coefficients.size()));
  std::size_t i = 0;
  for (; i < static_cast<std::size_t>(coefficients.size()); ++i)
    t.set(names[i], coefficients[static_cast<Eigen::Index>(i)]);
  t.set("phi", phi);
  if (family == MixingKind::TwoPoint) {
    t.set("theta1", theta1);
    t.set("theta2", theta2);
  } else if (family != MixingKind::Degenerate) {
    t.set("theta", theta);
  }
  return t;
}

Vector to_working(const RegressionModel& model) {
  const auto p = model.coefficients.size();
  const auto extra = mixing_parameter_count(model.family);
  Vector w(p + 1 + extra);
  w.head(p) = model.coefficients;
  w[p] = std::log(model.phi);
  if (model.family == MixingKind::TwoPoint) {
    w[p + 1] = logit(model.theta1);
    w[p + 2] = std::log(model.theta2 - 1.0);
  } else if (model.family != MixingKind::Degenerate) {
    w[p + 1] = std::log(model.theta);
  }
  return w;
}

RegressionModel from_working(MixingKind family, const Vector& working, std::size_t coefficient_count) {
  const auto p = static_cast<Eigen::Index>(coefficient_count);
  if (working.size() != p + 1 + mixing_parameter_count(family)) {
    throw std::invalid_argument("from_working: vector length does not match the family");
  }
  RegressionModel m;
  m.family = family;
  m.coefficients = working.head(p);
  m.phi = std::exp(working[p]);
  if (family == MixingKind::TwoPoint) {
    m.theta1 = 1.0 / (1.0 + std::exp(-working[p + 1]));
    m.theta2 = 1.0 + std::exp(working[p + 2]);
  } else if (family != MixingKind::Degenerate) {
    m.theta = std::exp(working[p + 1]);
  }
  return m;
}

Vector working_jacobian(MixingKind family, const Vector& working, std::size_t coefficient_count) {
  const auto p = static_cast<Eigen::Index>(coefficient_count);
  Vector j = Vector::Ones(working.size());
  j[p] = std::exp(working[p]);
  if (family == MixingKind::TwoPoint) {
    const double t1 = 1.0 / (1.0 + std::exp(-working[p + 1]));
    j[p + 1] = t1 * (1.0 - t1);
    j[p + 2] = std::exp(working[p + 2]);
  } else if (family != MixingKind::Degenerate) {
    j[p + 1] = std::exp(working[p + 1]);
  }
  return j;
}

std::vector<double> fitted_means(const Matrix& design, const Vector& coefficients) {
  const Vector eta = design * coefficients;
  std::vector<double> mu(static_cast<std::size_t>(eta.size()));
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[static_cast<std::size_t>(i)] = link_inverse(eta[i]);
  return mu;
}

double log_likelihood(const RegressionModel& model, const Dataset& data, std::size_t nodes,
                      Execution exec) {
  model.validate();
  if (static_cast<std::size_t>(model.coefficients.size()) != data.columns()) {
    throw std::invalid_argument("log_likelihood: coefficient count does not match the design");
  }
  const MixingSpec spec = model.mixing();
  const QuadratureRule rule = build_quadrature(spec, nodes);
  const auto mu = fitted_means(data.design(), model.coefficients);
  std::vector<double> terms(data.size());
  if (exec == Execution::Parallel) {
    kernels::bsm_log_density_parallel(data.log_response(), data.log_complement(), mu, model.phi,
                                      rule, terms);
  } else {
    kernels::bsm_log_density_serial(data.log_response(), data.log_complement(), mu, model.phi, rule,
                                    terms);
  }
  return pairwise_sum(terms);
}

// -------------------------------------------------------------------- fitting

RegressionModel initial_model(const Dataset& data, MixingKind family) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = static_cast<Eigen::Index>(data.columns());
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = logit(data.response()[static_cast<std::size_t>(i)]);
  Eigen::ColPivHouseholderQR<Matrix> qr(data.design());
  if (qr.rank() < p) throw std::invalid_argument("initial_model: design is rank deficient");
  const Vector beta = qr.solve(z);
  const Vector resid = z - data.design() * beta;
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - p, 1));
  const double sigma2 = resid.squaredNorm() / dof;

  // Delta method on the logit scale: Var(y_i) ~ sigma2 * (mu_i (1 - mu_i))^2, matched to
  // mu (1 - mu) phi / (1 + phi).
  double precision_sum = 0.0;
  const auto mu = fitted_means(data.design(), beta);
  for (double m : mu) {
    const double q = m * (1.0 - m);
    const double var = sigma2 * q * q;
    precision_sum += q / var - 1.0;
  }
  const double precision = std::clamp(precision_sum / static_cast<double>(n), 0.1, 1e6);

  RegressionModel model;
  model.family = family;
  model.coefficients = beta;
  model.phi = 1.0 / precision;
  model.theta1 = 0.95;
  model.theta2 = 2.0;
  model.theta = 0.1;
  return model;
}

WorkingCovariance working_covariance(const Objective& negloglik, const Vector& point) {
  WorkingCovariance out;
  Matrix h;
  try {
    h = numeric_hessian(negloglik, point);
  } catch (const EvaluationError& e) {
    out.diagnostic = e.what();
    return out;
  }
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os.precision(6);
    os << "observed information is not positive definite (smallest eigenvalue "
       << es.eigenvalues().minCoeff() << ")";
    out.diagnostic = os.str();
    return out;
  }
  out.covariance = llt.solve(Matrix::Identity(h.rows(), h.cols()));
  if (!out.covariance.allFinite() || (out.covariance.diagonal().array() <= 0.0).any()) {
    out.diagnostic = "inverse observed information has non-positive variances";
    return out;
  }
  out.ok = true;
  return out;
}

namespace {

Objective negative_loglik(const Dataset& data, MixingKind family, std::size_t nodes, Execution exec) {
  const std::size_t p = data.columns();
  return [&data, family, nodes, exec, p](const Vector& w) {
    RegressionModel m = from_working(family, w, p);
    if (!(m.phi > 0.0) || !std::isfinite(m.phi)) return std::numeric_limits<double>::infinity();
    if (family == MixingKind::TwoPoint && !(m.theta1 > 0.0 && m.theta1 < 1.0 && m.theta2 > 1.0 &&
                                            std::isfinite(m.theta2))) {
      return std::numeric_limits<double>::infinity();
    }
    if (family != MixingKind::TwoPoint && family != MixingKind::Degenerate &&
        !(m.theta > 0.0 && std::isfinite(m.theta))) {
      return std::numeric_limits<double>::infinity();
    }
    try {
      return -log_likelihood(m, data, nodes, exec);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
}

}  // namespace

StandardErrors standard_errors(const FitResult& fit, const Dataset& data) {
  StandardErrors out;
  const std::size_t p = data.columns();
  const auto cov = working_covariance(negative_loglik(data, fit.family, fit.nodes, Execution::Parallel),
                                      fit.working_estimates);
  if (!cov.ok) {
    out.diagnostic = cov.diagnostic;
    return out;
  }
  const Vector jac = working_jacobian(fit.family, fit.working_estimates, p);
  const auto names = parameter_names(fit.family, p);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.values.set(names[i], std::abs(jac[k]) * std::sqrt(cov.covariance(k, k)));
  }
  out.ok = true;
  return out;
}

void finalize_fit(FitResult& fit, const Dataset& data) {
  const std::size_t p = data.columns();
  fit.model = from_working(fit.family, fit.working_estimates, p);
  fit.natural_estimates = fit.model.natural();
  fit.observations = data.size();
  fit.parameter_count = fit.model.parameter_count();
  fit.loglik = log_likelihood(fit.model, data, fit.nodes);
  fit.aic = aic(fit.loglik, fit.parameter_count);
  fit.bic = bic(fit.loglik, fit.parameter_count, fit.observations);
  const auto se = standard_errors(fit, data);
  fit.se_available = se.ok;
  fit.standard_errors = se.values;
  fit.se_diagnostic = se.diagnostic;
}

FitResult fit_mle(const Dataset& data, MixingKind family, const FitOptions& options) {
  const std::size_t p = data.columns();
  if (data.size() <= p + 1 + static_cast<std::size_t>(mixing_parameter_count(family))) {
    throw std::invalid_argument("fit_mle: need more observations than parameters");
  }
  RegressionModel start = options.start ? *options.start : initial_model(data, family);
  start.family = family;
  start.validate();

  const Objective objective = negative_loglik(data, family, options.nodes, options.exec);
  const Vector w0 = to_working(start);
  OptimResult best = minimize(objective, w0, options.optim);
  std::size_t iterations = best.iterations;

  if (!best.converged && options.restarts > 0) {
    Rng rng(options.seed);
    std::normal_distribution<double> jitter(0.0, options.jitter);
    for (std::size_t r = 0; r < options.restarts; ++r) {
      Vector w = w0;
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] += jitter(rng);
      if (!std::isfinite(objective(w))) continue;
      OptimResult trial = minimize(objective, w, options.optim);
      iterations += trial.iterations;
      const bool better = (trial.converged && !best.converged) ||
                          (trial.converged == best.converged && trial.value < best.value);
      if (better) best = trial;
    }
  }

  FitResult fit;
  fit.family = family;
  fit.nodes = options.nodes;
  fit.working_estimates = best.argmin;
  fit.converged = best.converged;
  fit.iterations = iterations;
  fit.start_used = start.natural();
  finalize_fit(fit, data);
  return fit;
}

}  // namespace bsm
