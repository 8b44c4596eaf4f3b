#include "bsm/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>

#include "bsm/distribution.hpp"
#include "bsm/em_tpb.hpp"
#include "omp_guard.hpp"

namespace bsm {

void ScenarioConfig::validate() const {
  if (replicates < 1) throw std::invalid_argument("scenario: replicates must be >= 1");
  if (n < 4) throw std::invalid_argument("scenario: n must be >= 4");
  if (!(phi_true > 0.0) || !std::isfinite(phi_true)) {
    throw std::invalid_argument("scenario: phi must be positive");
  }
  if (!(contamination_rate >= 0.0 && contamination_rate < 1.0)) {
    throw std::invalid_argument("scenario: contamination rate must lie in [0, 1)");
  }
  if (!std::isfinite(beta0) || !std::isfinite(beta1)) {
    throw std::invalid_argument("scenario: coefficients must be finite");
  }
  if (families.empty()) throw std::invalid_argument("scenario: no families to fit");
  if (nodes < 1) throw std::invalid_argument("scenario: nodes must be >= 1");
}

std::size_t ScenarioConfig::replaced_count() const {
  return static_cast<std::size_t>(std::round(contamination_rate * static_cast<double>(n)));
}

ScenarioData generate_scenario(const ScenarioConfig& config, std::size_t replicate_index) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(replicate_index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(replicate_index) >> 32)};
  Rng rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const std::size_t n = config.n;
  Matrix design(static_cast<Eigen::Index>(n), 2);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = normal(rng);
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    design(static_cast<Eigen::Index>(i), 1) = x;
    const double mu = link_inverse(config.beta0 + config.beta1 * x);
    y[i] = sample_beta(mu / config.phi_true, (1.0 - mu) / config.phi_true, rng);
  }

  // Partial Fisher-Yates: the first `m` slots become a uniform sample without replacement.
  const std::size_t m = config.replaced_count();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  std::vector<std::size_t> replaced(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(replaced.begin(), replaced.end());
  for (std::size_t i : replaced) {
    double u;
    do u = unif(rng); while (!(u > 0.0));
    y[i] = u;
  }
  return {Dataset(std::move(y), std::move(design), {"(Intercept)", "x"}), std::move(replaced)};
}

const FamilyReport& SimReport::family(MixingKind kind) const {
  for (const auto& f : families)
    if (f.family == kind) return f;
  throw std::out_of_range("SimReport: family was not part of the run");
}

SimCell summarize_cell(const std::string& parameter, double truth, const std::vector<double>& estimates) {
  SimCell cell;
  cell.parameter = parameter;
  cell.truth = truth;
  cell.count = estimates.size();
  if (estimates.empty()) {
    cell.bias = cell.mse = cell.variance = std::nan("");
    return cell;
  }
  const double m = static_cast<double>(estimates.size());
  double sum = 0.0, sq = 0.0;
  for (double e : estimates) {
    sum += e - truth;
    sq += (e - truth) * (e - truth);
  }
  cell.bias = sum / m;
  cell.mse = sq / m;
  const double mean = truth + cell.bias;
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  cell.variance = var / m;
  return cell;
}

ReplicateEstimates fit_replicate(const ScenarioConfig& config, std::size_t replicate_index) {
  const ScenarioData scenario = generate_scenario(config, replicate_index);
  ReplicateEstimates out;
  FitOptions fo;
  fo.nodes = config.nodes;
  fo.exec = Execution::Serial;
  fo.seed = config.seed ^ (0x9e3779b97f4a7c15ULL * (replicate_index + 1));
  for (MixingKind family : config.families) {
    std::vector<double> est;
    try {
      FitResult fit;
      if (family == MixingKind::TwoPoint && config.tpb_via_em) {
        EmOptions eo;
        eo.start = fo;
        eo.inner.exec = Execution::Serial;
        fit = em_fit(scenario.data, eo).fit;
      } else {
        fit = fit_mle(scenario.data, family, fo);
      }
      if (fit.converged) {
        est = {fit.model.coefficients[0], fit.model.coefficients[1], fit.model.phi};
      }
    } catch (const std::exception&) {
      est.clear();
    }
    out.by_family.push_back(std::move(est));
  }
  return out;
}

SimReport run_sensitivity(const ScenarioConfig& config, Execution exec) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ReplicateEstimates> per_rep(config.replicates);
  const auto reps = static_cast<std::int64_t>(config.replicates);
  if (exec == Execution::Parallel) {
    detail::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t r = 0; r < reps; ++r) {
      slot.run([&] {
        per_rep[static_cast<std::size_t>(r)] = fit_replicate(config, static_cast<std::size_t>(r));
      });
    }
    slot.rethrow();
  } else {
    for (std::int64_t r = 0; r < reps; ++r) {
      per_rep[static_cast<std::size_t>(r)] = fit_replicate(config, static_cast<std::size_t>(r));
    }
  }

  SimReport report;
  report.config = config;
  const double truths[] = {config.beta0, config.beta1, config.phi_true};
  const char* names[] = {"beta0", "beta1", "phi"};
  for (std::size_t f = 0; f < config.families.size(); ++f) {
    FamilyReport fr;
    fr.family = config.families[f];
    std::vector<std::vector<double>> columns(3);
    for (const auto& rep : per_rep) {
      const auto& est = rep.by_family[f];
      if (est.empty()) {
        ++fr.failed;
        continue;
      }
      ++fr.converged;
      for (std::size_t k = 0; k < 3; ++k) columns[k].push_back(est[k]);
    }
    fr.all_failed = fr.converged == 0;
    for (std::size_t k = 0; k < 3; ++k) fr.cells.push_back(summarize_cell(names[k], truths[k], columns[k]));
    report.families.push_back(std::move(fr));
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace bsm
