#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gazebench {

// Invalid input, configuration, or file schema. The CLI maps this to exit
// code 2; anything else that escapes maps to 3.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when training hits a NaN/Inf loss. Carries the per-epoch trace
// accumulated up to the aborting step.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(const std::string& msg, std::vector<double> trace_so_far)
      : std::runtime_error(msg), trace(std::move(trace_so_far)) {}
  std::vector<double> trace;
};

}  // namespace gazebench
