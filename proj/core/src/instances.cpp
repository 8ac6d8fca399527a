#include "lorl/instances.hpp"

#include <cmath>

namespace lorl {

FeatureMdp two_arm_bandit(double gap) {
  if (!(gap >= 0.0 && gap <= 1.0)) throw Error("two_arm_bandit: gap must lie in [0,1]");
  FeatureMdp mdp;
  mdp.horizon = 1;
  mdp.num_states = 1;
  mdp.num_actions = 2;
  mdp.dim = 2;
  mdp.initial_state = 0;
  Eigen::MatrixXd phi(2, 2);
  phi << 1.0, 0.0, 0.0, 1.0;
  mdp.features = {phi};
  mdp.transitions = {Eigen::MatrixXd::Ones(2, 1)};
  Eigen::VectorXd theta(2);
  theta << 0.5 + gap / 2.0, 0.5 - gap / 2.0;
  mdp.reward_coeffs = {theta};
  mdp.state_names = {"s"};
  mdp.validate();
  return mdp;
}

FeatureMdp one_hot_instance(int num_states, int num_actions, int horizon, std::uint64_t seed,
                            double reward_scale) {
  FeatureMdp mdp;
  mdp.horizon = horizon;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.dim = num_states * num_actions;
  mdp.initial_state = 0;
  RngStream rng(seed);
  const int rows = mdp.dim;
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd trans(rows, num_states);
    for (int r = 0; r < rows; ++r) {
      for (int y = 0; y < num_states; ++y) trans(r, y) = -std::log(1.0 - rng.uniform01());
      trans.row(r) /= trans.row(r).sum();
    }
    Eigen::VectorXd theta(rows);
    for (int i = 0; i < rows; ++i) theta[i] = reward_scale * (2.0 * rng.uniform01() - 1.0);
    theta /= std::max(1.0, theta.norm() / reward_scale);
    mdp.features.push_back(Eigen::MatrixXd::Identity(rows, rows));
    mdp.transitions.push_back(std::move(trans));
    mdp.reward_coeffs.push_back(std::move(theta));
  }
  mdp.validate();
  return mdp;
}

}  // namespace lorl
