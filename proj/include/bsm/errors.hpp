#pragma once

#include <stdexcept>
#include <string>

namespace bsm {

// A function evaluated to a non-finite value where a finite one is required.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An optimizer could not produce a usable point.
class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bsm
