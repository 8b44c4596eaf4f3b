#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsm/distribution.hpp"
#include "bsm/regression.hpp"
#include "bsm/selection.hpp"
#include "oracles.hpp"

using namespace bsm;

namespace {

Dataset simulate_beta(std::size_t n, std::uint64_t seed, double b0 = 0.5, double b1 = 1.0, double phi = 0.25) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> y(n);
  Matrix x(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    x(r, 1) = z(rng);
    const double mu = 1.0 / (1.0 + std::exp(-(b0 + b1 * x(r, 1))));
    y[i] = sample_beta(mu / phi, (1.0 - mu) / phi, rng);
  }
  return Dataset(std::move(y), std::move(x), {"(Intercept)", "x"});
}

Dataset intercept_only(std::vector<double> y) {
  Matrix x = Matrix::Ones(static_cast<Eigen::Index>(y.size()), 1);
  return Dataset(std::move(y), std::move(x), {"(Intercept)"});
}

RegressionModel model_of(MixingKind kind, std::initializer_list<double> beta, double phi) {
  RegressionModel m;
  m.family = kind;
  m.coefficients = Vector(static_cast<Eigen::Index>(beta.size()));
  Eigen::Index i = 0;
  for (double b : beta) m.coefficients(i++) = b;
  m.phi = phi;
  return m;
}

}  // namespace

TEST_CASE("link inverse") {
  CHECK(link_inverse(0.0) == 0.5);
  CHECK(link_inverse(40.0) < 1.0);
  CHECK(link_inverse(40.0) > 1.0 - 1e-12);
  CHECK(link_inverse(-800.0) > 0.0);
  CHECK(std::abs(link_inverse(logit(0.3)) - 0.3) < 1e-14);
  CHECK(link_inverse_complement(40.0) > 0.0);
  CHECK(link_inverse_complement(40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-14));
}

TEST_CASE("link round trip") {
  const double eps = std::numeric_limits<double>::epsilon();
  for (double eta = -30.0; eta <= 30.0; eta += 0.125) {
    // From the mean alone the round trip is limited by the spacing of
    // doubles near 1; with the complement carried along it is exact.
    const double bound = std::max(1e-12, 4.0 * eps * (1.0 + std::exp(eta)));
    CHECK_MESSAGE(std::abs(logit(link_inverse(eta)) - eta) <= bound, "eta=" << eta);
    CHECK_MESSAGE(std::abs(logit(link_inverse(eta), link_inverse_complement(eta)) - eta) <= 1e-12,
                  "eta=" << eta);
  }
}

TEST_CASE("dataset validation") {
  Matrix x(3, 2);
  x << 1, 0.1, 1, 0.2, 1, 0.4;
  CHECK_NOTHROW(Dataset({0.2, 0.5, 0.7}, x, {"(Intercept)", "x"}));
  try {
    Dataset({0.2, 1.0, 0.7}, x, {"(Intercept)", "x"});
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(Dataset({0.2, 0.5}, x, {"(Intercept)", "x"}), std::invalid_argument);
  Matrix no_icpt = x;
  no_icpt(1, 0) = 2.0;
  CHECK_THROWS_AS(Dataset({0.2, 0.5, 0.7}, no_icpt, {"(Intercept)", "x"}), std::invalid_argument);
  Matrix dup(3, 3);
  dup << 1, 0.1, 0.2, 1, 0.2, 0.4, 1, 0.4, 0.8;
  CHECK_THROWS_AS(Dataset({0.2, 0.5, 0.7}, dup, {"(Intercept)", "x", "2x"}), std::invalid_argument);
  Matrix bad = x;
  bad(2, 1) = std::nan("");
  CHECK_THROWS_AS(Dataset({0.2, 0.5, 0.7}, bad, {"(Intercept)", "x"}), std::invalid_argument);
}

TEST_CASE("log-likelihood: uniform components give zero") {
  const auto d = intercept_only({0.1, 0.4, 0.93, 0.5});
  CHECK(std::abs(log_likelihood(model_of(MixingKind::Degenerate, {0.0}, 0.5), d)) < 1e-14);
}

TEST_CASE("log-likelihood is additive over concatenated data") {
  const auto a = simulate_beta(60, 1), b = simulate_beta(45, 2);
  const auto ab = concatenate(a, b);
  CHECK(ab.size() == 105);
  for (auto kind : {MixingKind::Degenerate, MixingKind::TwoPoint, MixingKind::Gamma}) {
    auto m = model_of(kind, {0.3, 0.8}, 0.3);
    m.theta = 0.4;
    CHECK(log_likelihood(m, ab) ==
          doctest::Approx(log_likelihood(m, a) + log_likelihood(m, b)).epsilon(1e-13));
  }
}

TEST_CASE("degenerate log-likelihood against a direct implementation") {
  const auto d = simulate_beta(50, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0), lp(-4.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const auto m = model_of(MixingKind::Degenerate, {u(rng), u(rng)}, std::exp(lp(rng)));
    double ref = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double eta = m.coefficients(0) + m.coefficients(1) * d.design()(r, 1);
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      ref += oracle::beta_log_pdf_logs(std::log(d.response()[i]), std::log1p(-d.response()[i]), mu, m.phi);
    }
    CHECK(log_likelihood(m, d) == doctest::Approx(ref).epsilon(1e-11));
  }
}

TEST_CASE("serial and parallel log-likelihoods are bit-identical") {
  const auto d = simulate_beta(1000, 5);
  for (auto kind : {MixingKind::Degenerate, MixingKind::TwoPoint, MixingKind::Gamma, MixingKind::LogNormal,
                    MixingKind::InverseGaussian}) {
    auto m = model_of(kind, {0.4, 0.9}, 0.2);
    m.theta = 0.7;
    CHECK(log_likelihood(m, d, 64, Execution::Serial) == log_likelihood(m, d, 64, Execution::Parallel));
  }
}

TEST_CASE("working scale") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (auto kind : {MixingKind::Degenerate, MixingKind::TwoPoint, MixingKind::Gamma, MixingKind::LogNormal,
                    MixingKind::InverseGaussian}) {
    const std::size_t k = 3;
    const std::size_t dim = k + 1 + static_cast<std::size_t>(mixing_parameter_count(kind));
    CHECK(parameter_names(kind, k).size() == dim);
    for (int rep = 0; rep < 50; ++rep) {
      Vector w(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(rng);
      const auto m = from_working(kind, w, k);
      CHECK_NOTHROW(m.validate());
      const Vector back = to_working(m);
      CHECK((back - w).lpNorm<Eigen::Infinity>() < 1e-12);

      // Jacobian against central differences of the natural parameters.
      const Vector jac = working_jacobian(kind, w, k);
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double h = 1e-6;
        Vector wp = w, wm = w;
        wp(i) += h;
        wm(i) -= h;
        const auto np = from_working(kind, wp, k).natural().entries();
        const auto nm = from_working(kind, wm, k).natural().entries();
        const double fd = (np[static_cast<std::size_t>(i)].second - nm[static_cast<std::size_t>(i)].second) / (2 * h);
        CHECK(jac(i) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
  CHECK(parameter_names(MixingKind::TwoPoint, 2) ==
        std::vector<std::string>{"beta0", "beta1", "phi", "theta1", "theta2"});
  CHECK(parameter_names(MixingKind::InverseGaussian, 2) ==
        std::vector<std::string>{"beta0", "beta1", "phi", "theta"});
}

TEST_CASE("standard error of a quadratic objective") {
  for (double c : {0.5, 4.0, 250.0}) {
    const auto cov = working_covariance([c](const Vector& x) { return 0.5 * c * x(0) * x(0); }, Vector::Zero(1));
    REQUIRE(cov.ok);
    CHECK(std::abs(std::sqrt(cov.covariance(0, 0)) - 1.0 / std::sqrt(c)) < 1e-6);
  }
  const auto saddle = working_covariance(
      [](const Vector& x) { return x(0) * x(0) - x(1) * x(1); }, Vector::Zero(2));
  CHECK_FALSE(saddle.ok);
  CHECK_FALSE(saddle.diagnostic.empty());
}

TEST_CASE("fit bookkeeping") {
  const auto d = simulate_beta(300, 7);
  for (auto kind : {MixingKind::Degenerate, MixingKind::TwoPoint, MixingKind::Gamma, MixingKind::LogNormal,
                    MixingKind::InverseGaussian}) {
    const auto f = fit_mle(d, kind);
    CHECK(f.family == kind);
    CHECK(f.observations == 300);
    CHECK(f.parameter_count == parameter_names(kind, 2).size());
    CHECK(f.aic == aic(f.loglik, f.parameter_count));
    CHECK(f.bic == bic(f.loglik, f.parameter_count, 300));
    CHECK(f.aic == 2.0 * f.parameter_count - 2.0 * f.loglik);
    CHECK(f.loglik == doctest::Approx(log_likelihood(f.model, d)).epsilon(1e-14));
    CHECK(f.natural_estimates.size() == f.parameter_count);
    CHECK(f.start_used.size() == f.parameter_count);
    // Boundary fits drive working values far out, where the logistic and
    // exponential maps lose relative precision.
    CHECK((to_working(f.model) - f.working_estimates).lpNorm<Eigen::Infinity>() <
          1e-6 * (1.0 + f.working_estimates.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("richer families contain the beta limit") {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto d = simulate_beta(400, seed);
    const double base = fit_mle(d, MixingKind::Degenerate).loglik;
    for (auto kind : {MixingKind::TwoPoint, MixingKind::Gamma, MixingKind::LogNormal, MixingKind::InverseGaussian})
      CHECK(fit_mle(d, kind).loglik >= base - 1e-6);
  }
}

TEST_CASE("intercept-only fit against a grid-and-refine search") {
  Rng rng(21);
  std::vector<double> y(400);
  for (auto& v : y) v = sample_beta(0.7 / 0.15, 0.3 / 0.15, rng);
  const auto d = intercept_only(y);
  double sly = 0.0, sl1 = 0.0;
  for (double v : y) {
    sly += std::log(v);
    sl1 += std::log1p(-v);
  }
  const double n = static_cast<double>(y.size());
  auto ll = [&](double b0, double lphi) {
    const double mu = 1.0 / (1.0 + std::exp(-b0)), phi = std::exp(lphi);
    const double a = mu / phi, b = (1.0 - mu) / phi;
    return (a - 1.0) * sly + (b - 1.0) * sl1 - n * oracle::log_beta(a, b);
  };
  // Coarse 41 x 41 grid, then repeated 11 x 11 grids shrinking by 4 each time.
  double cb = 0.0, cl = -1.0, span_b = 3.0, span_l = 3.0, best = -1e300;
  for (int level = 0; level < 12; ++level) {
    const int m = level == 0 ? 20 : 5;
    double nb = cb, nl = cl;
    for (int i = -m; i <= m; ++i)
      for (int j = -m; j <= m; ++j) {
        const double b0 = cb + span_b * i / m, lp = cl + span_l * j / m;
        const double v = ll(b0, lp);
        if (v > best) {
          best = v;
          nb = b0;
          nl = lp;
        }
      }
    cb = nb;
    cl = nl;
    span_b = span_b / m * 2;
    span_l = span_l / m * 2;
  }
  const auto f = fit_mle(d, MixingKind::Degenerate);
  CHECK(f.converged);
  CHECK(std::abs(f.model.coefficients(0) - cb) < 1e-4);
  CHECK(std::abs(f.model.phi - std::exp(cl)) < 1e-4);
  CHECK(f.loglik >= best - 1e-8);
}

TEST_CASE("beta fits cover the truth within three standard errors") {
  int covered = 0, converged = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const auto d = simulate_beta(500, 1000 + rep);
    const auto f = fit_mle(d, MixingKind::Degenerate);
    if (!f.converged || !f.se_available) continue;
    ++converged;
    const bool ok = std::abs(f.natural_estimates.at("beta0") - 0.5) < 3 * f.standard_errors.at("beta0") &&
                    std::abs(f.natural_estimates.at("beta1") - 1.0) < 3 * f.standard_errors.at("beta1");
    covered += ok;
  }
  CHECK(converged == 100);
  CHECK(covered >= 90);
}

TEST_CASE("stacking a dataset with itself shrinks standard errors by sqrt 2") {
  // Gamma-mixed responses, so that theta is identified.
  Rng rng(31);
  std::normal_distribution<double> z;
  std::vector<double> y(300);
  Matrix x(300, 2);
  const auto spec = MixingSpec::gamma(0.5);
  for (Eigen::Index i = 0; i < 300; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = z(rng);
    const double mu = link_inverse(0.5 + x(i, 1));
    const double phi = 0.25 / sample_mixing_one(spec, rng);
    y[static_cast<std::size_t>(i)] = sample_beta(mu / phi, (1.0 - mu) / phi, rng);
  }
  const Dataset d(std::move(y), std::move(x), {"(Intercept)", "x"});
  const auto dd = concatenate(d, d);
  for (auto kind : {MixingKind::Degenerate, MixingKind::Gamma}) {
    const auto a = fit_mle(d, kind), b = fit_mle(dd, kind);
    REQUIRE(a.se_available);
    REQUIRE(b.se_available);
    for (const auto& [name, se] : a.standard_errors.entries())
      CHECK_MESSAGE(se / b.standard_errors.at(name) == doctest::Approx(std::sqrt(2.0)).epsilon(0.02),
                    family_label(kind) << " " << name);
  }
}

TEST_CASE("row order does not matter") {
  const auto d = simulate_beta(250, 41);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(order.begin(), order.end(), rng);
  const auto p = permute_rows(d, order);
  CHECK(p.response()[0] == d.response()[order[0]]);
  for (auto kind : {MixingKind::Degenerate, MixingKind::LogNormal}) {
    const auto a = fit_mle(d, kind), b = fit_mle(p, kind);
    for (const auto& [name, v] : a.natural_estimates.entries())
      CHECK(std::abs(v - b.natural_estimates.at(name)) < 1e-4 * std::max(1.0, std::abs(v)));
  }
}

TEST_CASE("non-convergence is flagged and the best point kept") {
  const auto d = simulate_beta(200, 51);
  FitOptions o;
  o.optim.max_simplex_iterations = 2;
  o.optim.max_qn_iterations = 1;
  o.restarts = 0;
  const auto f = fit_mle(d, MixingKind::Gamma, o);
  CHECK_FALSE(f.converged);
  CHECK(std::isfinite(f.loglik));
  CHECK(f.loglik >= log_likelihood(initial_model(d, MixingKind::Gamma), d));
}

TEST_CASE("explicit start values are used") {
  const auto d = simulate_beta(200, 61);
  FitOptions o;
  auto s = model_of(MixingKind::Degenerate, {0.1, 0.2}, 0.9);
  o.start = s;
  const auto f = fit_mle(d, MixingKind::Degenerate, o);
  CHECK(f.start_used.at("beta1") == 0.2);
  CHECK(f.start_used.at("phi") == 0.9);
  CHECK(f.converged);
}

TEST_CASE("least-squares start is sensible") {
  const auto d = simulate_beta(2000, 71);
  const auto m = initial_model(d, MixingKind::TwoPoint);
  CHECK(m.coefficients.allFinite());
  CHECK(m.coefficients(1) > 0.0);
  CHECK(m.phi > 0.0);
  CHECK(m.theta1 == 0.95);
  CHECK(m.theta2 == 2.0);
  CHECK(initial_model(d, MixingKind::Gamma).theta == 0.1);
}

TEST_CASE("fitted means") {
  Matrix x(2, 2);
  x << 1, 0, 1, 2;
  Vector b(2);
  b << 0.0, 1.0;
  const auto mu = fitted_means(x, b);
  CHECK(mu[0] == 0.5);
  CHECK(mu[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
}

TEST_CASE("parameter table") {
  ParamTable t;
  t.set("a", 1.0);
  t.set("b", 2.0);
  t.set("a", 3.0);
  CHECK(t.size() == 2);
  CHECK(t.at("a") == 3.0);
  CHECK(t.entries()[0].first == "a");
  CHECK_FALSE(t.find("c").has_value());
  CHECK_THROWS_AS(t.at("c"), std::out_of_range);
}
