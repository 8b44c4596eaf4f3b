#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "bsm/mixing.hpp"

namespace bsm {

inline constexpr std::size_t kDefaultQuadratureNodes = 64;

// Discrete approximation of a mixing law: E_h[g(W)] ~ sum_j weights[j] * g(nodes[j]).
// Nodes are positive and strictly increasing; weights are non-negative and sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss rule for a probability measure described by its Jacobi matrix
// (recurrence coefficients of the orthonormal polynomials). Nodes are the
// eigenvalues, polished by Newton on the recurrence; weights come from the
// Christoffel function. Returned nodes ascend; weights sum to one.
QuadratureRule gauss_from_recurrence(const std::vector<double>& diag,
                                     const std::vector<double>& offdiag);

// Standard-normal weight (probabilists' Hermite).
QuadratureRule gauss_hermite_normal(std::size_t n);
// Uniform weight on (0, 1).
QuadratureRule gauss_legendre_unit(std::size_t n);
// Gamma(alpha + 1, 1) weight, i.e. x^alpha e^-x normalized (generalized Laguerre).
QuadratureRule gauss_laguerre_gamma(std::size_t n, double alpha);

// Rule for the mixing law. TwoPoint and Degenerate are exact atoms and
// ignore node_count. Throws std::domain_error for invalid specs or node_count == 0.
QuadratureRule build_quadrature(const MixingSpec& spec, std::size_t node_count);

// Memoized build_quadrature, keyed by (spec, node_count). Safe for concurrent use.
std::shared_ptr<const QuadratureRule> cached_quadrature(const MixingSpec& spec,
                                                        std::size_t node_count);

// sum_j weights[j] * g(nodes[j]). Throws EvaluationError if g is not finite at a node.
double expect_mixing(const std::function<double(double)>& g, const QuadratureRule& rule);

}  // namespace bsm
