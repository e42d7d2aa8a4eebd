#pragma once

#include <stdexcept>

namespace knockoffs {

// Caller handed us something malformed: bad file, bad config, contract
// violation. CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inputs were well formed but the numbers did not cooperate: indefinite
// matrices, solver failures, unidentifiable ratios. CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace knockoffs
