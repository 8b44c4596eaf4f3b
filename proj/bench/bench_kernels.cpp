// Serial vs OpenMP density kernels, and whole log-likelihood evaluations.
#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bsm/kernels.hpp"
#include "bsm/mixing.hpp"
#include "bsm/regression.hpp"
#include "bsm/simulation.hpp"

namespace {

struct Inputs {
  std::vector<double> log_y, log_1my, mu;
  std::vector<double> out, out2;
};

Inputs make_inputs(std::size_t n) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Inputs in;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = u(rng);
    in.log_y.push_back(std::log(y));
    in.log_1my.push_back(std::log1p(-y));
    in.mu.push_back(u(rng));
  }
  in.out.resize(n);
  in.out2.resize(n);
  return in;
}

template <bool Parallel>
void BM_BsmDensity(benchmark::State& state) {
  auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  const auto rule = bsm::build_quadrature(bsm::MixingSpec::gamma(0.3), 64);
  for (auto _ : state) {
    if constexpr (Parallel)
      bsm::kernels::bsm_log_density_parallel(in.log_y, in.log_1my, in.mu, 0.2, rule, in.out);
    else
      bsm::kernels::bsm_log_density_serial(in.log_y, in.log_1my, in.mu, 0.2, rule, in.out);
    benchmark::DoNotOptimize(in.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_TpbComponents(benchmark::State& state) {
  auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel)
      bsm::kernels::tpb_components_parallel(in.log_y, in.log_1my, in.mu, 0.2, 5.0, in.out, in.out2);
    else
      bsm::kernels::tpb_components_serial(in.log_y, in.log_1my, in.mu, 0.2, 5.0, in.out, in.out2);
    benchmark::DoNotOptimize(in.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bsm::Execution Exec>
void BM_LogLikelihood(benchmark::State& state) {
  bsm::ScenarioConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  const auto data = bsm::generate_scenario(cfg, 0).data;
  bsm::RegressionModel m;
  m.family = bsm::MixingKind::InverseGaussian;
  m.coefficients = bsm::Vector::Zero(2);
  m.coefficients << 0.5, 1.0;
  m.phi = 0.25;
  m.theta = 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(bsm::log_likelihood(m, data, 64, Exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BsmDensity<false>)->Arg(500)->Arg(5000);
BENCHMARK(BM_BsmDensity<true>)->Arg(500)->Arg(5000);
BENCHMARK(BM_TpbComponents<false>)->Arg(500)->Arg(50000);
BENCHMARK(BM_TpbComponents<true>)->Arg(500)->Arg(50000);
BENCHMARK(BM_LogLikelihood<bsm::Execution::Serial>)->Arg(500);
BENCHMARK(BM_LogLikelihood<bsm::Execution::Parallel>)->Arg(500);

BENCHMARK_MAIN();
