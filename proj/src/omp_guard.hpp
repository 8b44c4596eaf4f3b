#pragma once

#include <exception>
#include <utility>

namespace bsm::detail {

// Exceptions must not escape an OpenMP region. Loop bodies run through
// `run`, which keeps the first exception; `rethrow` raises it afterwards.
class ExceptionSlot {
 public:
  template <class F>
  void run(F&& body) noexcept {
    try {
      std::forward<F>(body)();
    } catch (...) {
#pragma omp critical(bsm_exception_slot)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace bsm::detail
