#pragma once

// The measurement interface: everything downstream of here sees only the
// Neumann-to-Dirichlet map Lambda_{2T}, never the interior coefficients.

#include <atomic>

#include "bcm/signal.hpp"

namespace bcm {

class MeasurementOracle {
 public:
  virtual ~MeasurementOracle() = default;
  BoundarySignal apply(const BoundarySignal& f) {
    ++count_;
    return apply_impl(f);
  }
  long long count() const { return count_.load(); }
  void reset_count() { count_ = 0; }
  virtual const char* backend() const = 0;
  virtual BoundarySignal zero_signal() const = 0;

 private:
  virtual BoundarySignal apply_impl(const BoundarySignal& f) = 0;
  std::atomic<long long> count_{0};
};

inline BoundarySignal nd_map(MeasurementOracle& o, const BoundarySignal& f) {
  return o.apply(f);
}

}  // namespace bcm
