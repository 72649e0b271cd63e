#pragma once

#include <stdexcept>
#include <string>

namespace randci {

// A numerical routine could not meet the requested tolerance. Carries the
// best estimate it had so callers can decide whether to keep it.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double best_estimate)
      : std::runtime_error(what), best_estimate(best_estimate) {}
  double best_estimate;
};

}  // namespace randci
