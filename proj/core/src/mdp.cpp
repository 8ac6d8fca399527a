#include "lorl/mdp.hpp"

#include <cmath>
#include <sstream>

namespace lorl {

namespace {

std::string shape_error(const char* what, int h) {
  std::ostringstream os;
  os << "FeatureMdp: " << what << " at step " << h;
  return os.str();
}

}  // namespace

void FeatureMdp::validate() const {
  if (horizon <= 0) throw Error("FeatureMdp: horizon must be positive");
  if (num_states <= 0 || num_actions <= 0) throw Error("FeatureMdp: empty state or action set");
  if (dim <= 0) throw Error("FeatureMdp: feature dimension must be positive");
  if (static_cast<int>(features.size()) != horizon) throw Error("FeatureMdp: features must have one block per step");
  if (static_cast<int>(transitions.size()) != horizon) throw Error("FeatureMdp: transitions must have one block per step");
  if (static_cast<int>(reward_coeffs.size()) != horizon) throw Error("FeatureMdp: reward_coeffs must have one vector per step");
  if (initial_state < 0 || initial_state >= num_states) throw Error("FeatureMdp: initial_state out of range");
  if (!is_active(0, initial_state)) throw Error("FeatureMdp: initial_state inactive at step 1");

  const int rows = num_states * num_actions;
  for (int h = 0; h < horizon; ++h) {
    if (features[h].rows() != rows || features[h].cols() != dim)
      throw Error(shape_error("feature block has wrong shape", h));
    if (transitions[h].rows() != rows || transitions[h].cols() != num_states)
      throw Error(shape_error("transition block has wrong shape", h));
    if (reward_coeffs[h].size() != dim)
      throw Error(shape_error("reward coefficient vector has wrong dimension", h));

    for (int x : active_states(h)) {
      for (int a = 0; a < num_actions; ++a) {
        const int r = row(x, a);
        double norm = features[h].row(r).norm();
        if (norm > 1.0 + kTol.feature_norm_slack) {
          std::ostringstream os;
          os << "FeatureMdp: ||phi||=" << norm << " exceeds 1 at step " << h
             << " state " << state_name(x) << " action " << a;
          throw Error(os.str());
        }
        double rew = features[h].row(r).dot(reward_coeffs[h]);
        if (std::abs(rew) > 1.0 + kTol.reward_range_slack) {
          std::ostringstream os;
          os << "FeatureMdp: reward " << rew << " outside [-1,1] at step " << h
             << " state " << state_name(x) << " action " << a;
          throw Error(os.str());
        }
        double sum = 0.0;
        for (int y = 0; y < num_states; ++y) {
          double p = transitions[h](r, y);
          if (p < -kTol.transition_row_sum) {
            std::ostringstream os;
            os << "FeatureMdp: negative transition probability at step " << h
               << " state " << state_name(x) << " action " << a;
            throw Error(os.str());
          }
          sum += p;
          if (h + 1 < horizon && p > kTol.transition_row_sum && !is_active(h + 1, y)) {
            std::ostringstream os;
            os << "FeatureMdp: transition from step " << h << " state " << state_name(x)
               << " action " << a << " reaches state " << state_name(y)
               << " inactive at step " << h + 1;
            throw Error(os.str());
          }
        }
        if (std::abs(sum - 1.0) > kTol.transition_row_sum) {
          std::ostringstream os;
          os << "FeatureMdp: transition row sums to " << sum << " at step " << h
             << " state " << state_name(x) << " action " << a;
          throw Error(os.str());
        }
      }
    }
  }
}

std::vector<std::string> FeatureMdp::soft_warnings() const {
  std::vector<std::string> notes;
  for (int h = 0; h < horizon; ++h) {
    double norm = reward_coeffs[h].norm();
    if (norm > 1.0 + kTol.reward_coeff_slack) {
      std::ostringstream os;
      os << "||theta_r||=" << norm << " exceeds 1 at step " << h
         << " (realized rewards still in [-1,1])";
      notes.push_back(os.str());
    }
  }
  return notes;
}

}  // namespace lorl
