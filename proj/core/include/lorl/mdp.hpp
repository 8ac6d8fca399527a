#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lorl/error.hpp"
#include "lorl/tolerances.hpp"

namespace lorl {

// Finite-horizon MDP with per-step feature maps, linear rewards
// r_h(x,a) = <phi_h(x,a), theta_r_h>, and explicit transition tables.
//
// Steps are 0-based in code (h = 0..H-1); the step-H+1 feature map is the
// all-zeros convention and is never stored. A state may be declared active
// only at some steps (active[h]); an empty list means every state is live at
// that step. Transitions out of step H-1 are stored for uniformity but never
// influence values.
struct FeatureMdp {
  int horizon = 0;      // H
  int num_states = 0;   // |X|
  int num_actions = 0;  // |A|
  int dim = 0;          // d
  int initial_state = 0;

  // features[h]: (|X|*|A|) x d, row index x*|A|+a
  std::vector<Eigen::MatrixXd> features;
  // transitions[h]: (|X|*|A|) x |X|, rows sum to 1
  std::vector<Eigen::MatrixXd> transitions;
  // reward_coeffs[h]: theta_r_h in R^d
  std::vector<Eigen::VectorXd> reward_coeffs;
  // active[h]: sorted state ids live at step h; empty = all states
  std::vector<std::vector<int>> active;

  std::vector<std::string> state_names;  // optional, cosmetic

  int row(int x, int a) const { return x * num_actions + a; }

  Eigen::Ref<const Eigen::VectorXd> feature(int h, int x, int a) const {
    return features[h].row(row(x, a)).transpose();
  }

  double reward(int h, int x, int a) const {
    return features[h].row(row(x, a)).dot(reward_coeffs[h]);
  }

  std::vector<int> active_states(int h) const {
    if (h < static_cast<int>(active.size()) && !active[h].empty()) return active[h];
    std::vector<int> all(num_states);
    for (int x = 0; x < num_states; ++x) all[x] = x;
    return all;
  }

  bool is_active(int h, int x) const {
    if (h >= static_cast<int>(active.size()) || active[h].empty()) return true;
    for (int s : active[h])
      if (s == x) return true;
    return false;
  }

  // Hard invariants: storage shapes, row-stochastic transitions, feature norms,
  // realized reward range, transitions landing on active states.
  // Throws Error naming the first violation.
  void validate() const;

  // Soft expectations that shipped adversarial instances are allowed to bend
  // (reward coefficient norm slightly above 1). Returns human-readable notes.
  std::vector<std::string> soft_warnings() const;

  std::string state_name(int x) const {
    if (x >= 0 && x < static_cast<int>(state_names.size()) && !state_names[x].empty())
      return state_names[x];
    return "x" + std::to_string(x);
  }
};

// Q/V tables from exact dynamic programming. q is H x (|X|*|A|), v is H x |X|;
// entries of inactive states are zero. Q at step H+1 is identically zero by
// convention and not stored.
struct ValueTable {
  Eigen::MatrixXd q;
  Eigen::MatrixXd v;

  double value_at_initial(const FeatureMdp& mdp) const { return v(0, mdp.initial_state); }
};

// Parameters for sweeps over the implicit coefficient balls B_h.
// radius_inner is the ball guaranteed to sit inside every B_h; bound_b is the
// instance's norm bound B; sampling_count controls Monte-Carlo sweeps.
struct BoundedBallSpec {
  double radius_inner = 1.0;
  double bound_b = 1.0;
  int sampling_count = 256;

  void validate() const {
    if (radius_inner > bound_b + kTol.feature_norm_slack)
      throw Error("BoundedBallSpec: radius_inner exceeds bound_b");
    if (sampling_count < 1) throw Error("BoundedBallSpec: sampling_count must be >= 1");
  }
};

}  // namespace lorl
