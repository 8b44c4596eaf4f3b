#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bsm/regression.hpp"

namespace bsm {

// One sensitivity scenario: beta regression data with a standard-normal
// covariate, a fraction of responses replaced by uniform(0,1) noise.
struct ScenarioConfig {
  std::size_t replicates = 500;
  std::size_t n = 500;
  double beta0 = 0.5;
  double beta1 = 1.0;
  double phi_true = 0.25;
  double contamination_rate = 0.0;
  std::vector<MixingKind> families = {MixingKind::Degenerate, MixingKind::TwoPoint,
                                      MixingKind::Gamma, MixingKind::LogNormal,
                                      MixingKind::InverseGaussian};
  std::uint64_t seed = 1;
  bool tpb_via_em = false;  // direct maximization otherwise
  std::size_t nodes = kDefaultQuadratureNodes;

  void validate() const;  // std::invalid_argument
  // round(rate * n), halves away from zero.
  std::size_t replaced_count() const;
};

struct ScenarioData {
  Dataset data;
  std::vector<std::size_t> replaced;  // ascending row indices
};

// Fully determined by (config.seed, replicate_index).
ScenarioData generate_scenario(const ScenarioConfig& config, std::size_t replicate_index);

struct SimCell {
  std::string parameter;  // beta0, beta1, phi
  double truth = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double variance = 0.0;  // population variance of the estimates
  std::size_t count = 0;
};

struct FamilyReport {
  MixingKind family = MixingKind::Degenerate;
  std::size_t converged = 0;
  std::size_t failed = 0;  // non-converged or threw
  bool all_failed = false;
  std::vector<SimCell> cells;
};

struct SimReport {
  ScenarioConfig config;
  std::vector<FamilyReport> families;
  double elapsed_seconds = 0.0;

  const FamilyReport& family(MixingKind kind) const;
};

// Per-replicate estimates of (beta0, beta1, phi), or empty when the fit failed.
struct ReplicateEstimates {
  std::vector<std::vector<double>> by_family;
};

ReplicateEstimates fit_replicate(const ScenarioConfig& config, std::size_t replicate_index);

// Replicates run in parallel, each on its own generator stream; aggregation
// walks replicates in index order, so the report does not depend on the
// thread count.
SimReport run_sensitivity(const ScenarioConfig& config, Execution exec = Execution::Parallel);

// Bias / MSE / variance of `estimates` around `truth`, accumulated in order.
SimCell summarize_cell(const std::string& parameter, double truth, const std::vector<double>& estimates);

}  // namespace bsm
