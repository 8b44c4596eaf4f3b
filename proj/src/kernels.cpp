#include "bsm/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bsm/distribution.hpp"
#include "omp_guard.hpp"

namespace bsm::kernels {

namespace {

struct RulePrep {
  std::vector<double> log_weight;
  std::vector<double> node;
};

RulePrep prepare(const QuadratureRule& rule) {
  RulePrep prep;
  prep.log_weight.reserve(rule.size());
  prep.node.reserve(rule.size());
  for (std::size_t j = 0; j < rule.size(); ++j) {
    if (rule.weights[j] <= 0.0) continue;
    prep.log_weight.push_back(std::log(rule.weights[j]));
    prep.node.push_back(rule.nodes[j]);
  }
  return prep;
}

inline double mixture_term(double ly, double l1y, double mu, double phi, const RulePrep& prep) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double top = kNegInf, scaled = 0.0;
  for (std::size_t j = 0; j < prep.log_weight.size(); ++j) {
    const double t = prep.log_weight[j] + beta_log_pdf_logs(ly, l1y, mu, phi / prep.node[j]);
    if (t <= top) {
      scaled += std::exp(t - top);
    } else {
      scaled = scaled * std::exp(top - t) + 1.0;
      top = t;
    }
  }
  return top == kNegInf ? kNegInf : top + std::log(scaled);
}

}  // namespace

void bsm_log_density_serial(std::span<const double> log_y, std::span<const double> log_1my,
                            std::span<const double> mu, double phi, const QuadratureRule& rule,
                            std::span<double> out) {
  const RulePrep prep = prepare(rule);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mixture_term(log_y[i], log_1my[i], mu[i], phi, prep);
  }
}

void bsm_log_density_parallel(std::span<const double> log_y, std::span<const double> log_1my,
                              std::span<const double> mu, double phi, const QuadratureRule& rule,
                              std::span<double> out) {
  const RulePrep prep = prepare(rule);
  const auto n = static_cast<std::int64_t>(out.size());
  detail::ExceptionSlot slot;
#pragma omp parallel for schedule(static) if (out.size() > 2 * kParallelGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    slot.run([&] { out[i] = mixture_term(log_y[i], log_1my[i], mu[i], phi, prep); });
  }
  slot.rethrow();
}

void tpb_components_serial(std::span<const double> log_y, std::span<const double> log_1my,
                           std::span<const double> mu, double phi, double theta2,
                           std::span<double> reference, std::span<double> contaminant) {
  const double inflated = theta2 * phi;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    reference[i] = beta_log_pdf_logs(log_y[i], log_1my[i], mu[i], phi);
    contaminant[i] = beta_log_pdf_logs(log_y[i], log_1my[i], mu[i], inflated);
  }
}

void tpb_components_parallel(std::span<const double> log_y, std::span<const double> log_1my,
                             std::span<const double> mu, double phi, double theta2,
                             std::span<double> reference, std::span<double> contaminant) {
  const double inflated = theta2 * phi;
  const auto n = static_cast<std::int64_t>(reference.size());
  detail::ExceptionSlot slot;
#pragma omp parallel for schedule(static) if (reference.size() > 2 * kParallelGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    slot.run([&] {
      reference[i] = beta_log_pdf_logs(log_y[i], log_1my[i], mu[i], phi);
      contaminant[i] = beta_log_pdf_logs(log_y[i], log_1my[i], mu[i], inflated);
    });
  }
  slot.rethrow();
}

}  // namespace bsm::kernels
