#pragma once

#include <stdexcept>
#include <string>

namespace lorl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/index mismatch between a policy, weight vector, or table and the MDP
// it is applied to. The message names the offending step.
struct DimensionError : Error {
  using Error::Error;
};

// A probability mode was requested that the policy/feature layout cannot
// support (e.g. closed-form probabilities with d > 1).
struct UnsupportedModeError : Error {
  using Error::Error;
};

struct UnsupportedPolicyError : Error {
  using Error::Error;
};

// The critic program admits no point within tolerance; carries the best
// constraint residual reached by alternating projections.
struct InfeasibleProgramError : Error {
  InfeasibleProgramError(const std::string& what, double residual)
      : Error(what), best_residual(residual) {}
  double best_residual = 0.0;
};

// Coverage at lambda = 0 is infinite: the policy's mean feature leaves the
// span of the dataset features.
struct InfiniteCoverageError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace lorl
