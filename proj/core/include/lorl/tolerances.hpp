#pragma once

namespace lorl {

// Central home for every numeric tolerance used by the library. Tests and
// validators reference these instead of scattering literals.
struct Tolerances {
  double transition_row_sum = 1e-12;   // |sum(P_h(.|x,a)) - 1|
  double feature_norm_slack = 1e-12;   // ||phi||_2 <= 1 + slack
  double reward_coeff_slack = 1e-12;   // ||theta_r||_2 <= 1 + slack (soft)
  double reward_range_slack = 1e-12;   // realized rewards within [-1,1] +- slack
  double value_identity = 1e-9;        // DP identities (performance difference etc.)
  double span_relative = 1e-9;         // span membership test for pinv coverage
  double solver_eps = 1e-6;            // default objective/constraint accuracy
  double tie_break = 0.0;              // argmax ties resolved exactly, no fuzz
};

inline constexpr Tolerances kTol{};

}  // namespace lorl
