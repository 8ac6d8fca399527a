#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "lorl/mdp.hpp"
#include "lorl/policy.hpp"
#include "lorl/rng.hpp"

namespace lorl {

// How policy evaluation resolves action probabilities at states where no
// exact form exists (perturbed policies with d > 1 and > 2 actions).
// mc_draws == 0 demands exactness and throws UnsupportedModeError otherwise.
// Draws are keyed by (h, x) on a derived stream so evaluation order is
// irrelevant to the result.
struct EvalOptions {
  int mc_draws = 0;
  RngStream stream{};

  static EvalOptions exact() { return {}; }
  static EvalOptions monte_carlo(int draws, RngStream stream) { return {draws, stream}; }
};

// All action probabilities of a policy materialized as tabular rows.
Policy resolve_to_tabular(const FeatureMdp& mdp, const Policy& policy,
                          const EvalOptions& opts = {});

// Per-step, per-(x,a) reward table replacing the linear rewards, used for
// induced MDPs. rewards[h] is |X| x |A|.
struct RewardTable {
  std::vector<Eigen::MatrixXd> rewards;
};

RewardTable linear_reward_table(const FeatureMdp& mdp);

// Rewards that make f_h(x,a) = <phi_h(x,a), w_h> the exact Q-function of
// `policy`: r'_h = f_h - E_{x'}[f_{h+1}(x', pi_{h+1}(x'))].
RewardTable induced_reward_table(const FeatureMdp& mdp, const std::vector<Eigen::VectorXd>& w,
                                 const Policy& policy, const EvalOptions& opts = {});

// Backward-induction Q/V for a policy, with the MDP's own linear rewards or
// an explicit reward table.
ValueTable exact_policy_value(const FeatureMdp& mdp, const Policy& policy,
                              const EvalOptions& opts = {});
ValueTable policy_value_with_rewards(const FeatureMdp& mdp, const RewardTable& rewards,
                                     const Policy& policy, const EvalOptions& opts = {});

// r_h(x,a) + sum_x' P_h(x'|x,a) <phi_{h+1}(x', pi_{h+1}(x')), w>, as a
// |X| x |A| table (zero rows for inactive states). At h = H-1 the next-step
// feature map is identically zero and policy_next is ignored.
Eigen::MatrixXd bellman_backup(const FeatureMdp& mdp, int h,
                               const std::optional<StepPolicy>& policy_next,
                               const Eigen::VectorXd& w, const EvalOptions& opts = {});

// State occupancancy d_h(x) of a policy by exact forward propagation; H x |X|.
Eigen::MatrixXd occupancy(const FeatureMdp& mdp, const Policy& policy,
                          const EvalOptions& opts = {});

// E^pi[phi_h(x_h, a_h)] for each step; H rows of length d.
Eigen::MatrixXd mean_features(const FeatureMdp& mdp, const Policy& policy,
                              const EvalOptions& opts = {});

// Greedy optimal policy and its value, by backward induction over actions.
std::pair<Policy, ValueTable> optimal_policy(const FeatureMdp& mdp);

// Sampled estimate of the inherent Bellman error: for each step and each
// coefficient theta drawn from the unit ball boundary (the signed basis
// vectors plus sampling_count uniform sphere points), least-squares fit the
// greedy backup target against the step-h features, rescale the fit into
// 2*B_h when its predictions exceed 2 in magnitude, and report twice the
// worst sup-norm residual.
double measure_inherent_bellman_error(const FeatureMdp& mdp, const BoundedBallSpec& spec,
                                      RngStream rng);

}  // namespace lorl
