#pragma once

#include <lorl/evaluate.hpp>
#include <lorl/mdp.hpp>
#include <lorl/policy.hpp>
#include <lorl/rng.hpp>

namespace lorl::testing {

// Random MDP with unit-ball features, Dirichlet-ish transitions, and linear
// rewards guaranteed inside [-1, 1].
inline FeatureMdp random_mdp(RngStream& rng, int num_states, int num_actions, int horizon,
                             int dim) {
  FeatureMdp mdp;
  mdp.horizon = horizon;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.dim = dim;
  mdp.initial_state = 0;
  const int rows = num_states * num_actions;
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd phi(rows, dim);
    Eigen::MatrixXd trans(rows, num_states);
    for (int r = 0; r < rows; ++r) {
      Eigen::VectorXd v = rng.standard_normal_vector(dim);
      phi.row(r) = (0.9 * rng.uniform01() / v.norm()) * v;
      for (int y = 0; y < num_states; ++y) trans(r, y) = -std::log(1.0 - rng.uniform01());
      trans.row(r) /= trans.row(r).sum();
    }
    Eigen::VectorXd theta = rng.standard_normal_vector(dim);
    theta *= 0.9 * rng.uniform01() / theta.norm();
    mdp.features.push_back(phi);
    mdp.transitions.push_back(trans);
    mdp.reward_coeffs.push_back(theta);
  }
  mdp.validate();
  return mdp;
}

inline Policy random_tabular_policy(RngStream& rng, const FeatureMdp& mdp) {
  Policy p;
  for (int h = 0; h < mdp.horizon; ++h) {
    Eigen::MatrixXd rows(mdp.num_states, mdp.num_actions);
    for (int x = 0; x < mdp.num_states; ++x) {
      for (int a = 0; a < mdp.num_actions; ++a) rows(x, a) = -std::log(1.0 - rng.uniform01());
      rows.row(x) /= rows.row(x).sum();
    }
    p.steps.push_back(TabularPolicy{std::move(rows)});
  }
  return p;
}

inline Policy random_perturbed_policy(RngStream& rng, const FeatureMdp& mdp, double sigma) {
  std::vector<Eigen::VectorXd> w;
  for (int h = 0; h < mdp.horizon; ++h) w.push_back(rng.standard_normal_vector(mdp.dim));
  return Policy::perturbed_linear(std::move(w), sigma);
}

// Tabular MDP in disguise: one-hot features over (state, action) pairs make
// every function linear, so the inherent Bellman error is exactly zero.
inline FeatureMdp one_hot_mdp(RngStream& rng, int num_states, int num_actions, int horizon,
                              double reward_scale = 0.9) {
  FeatureMdp mdp;
  mdp.horizon = horizon;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.dim = num_states * num_actions;
  mdp.initial_state = 0;
  const int rows = mdp.dim;
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(rows, rows);
    Eigen::MatrixXd trans(rows, num_states);
    for (int r = 0; r < rows; ++r) {
      for (int y = 0; y < num_states; ++y) trans(r, y) = -std::log(1.0 - rng.uniform01());
      trans.row(r) /= trans.row(r).sum();
    }
    Eigen::VectorXd theta(rows);
    for (int i = 0; i < rows; ++i) theta[i] = reward_scale * (2.0 * rng.uniform01() - 1.0);
    theta /= std::max(1.0, theta.norm() / reward_scale);
    mdp.features.push_back(phi);
    mdp.transitions.push_back(trans);
    mdp.reward_coeffs.push_back(theta);
  }
  mdp.validate();
  return mdp;
}

}  // namespace lorl::testing
