#include "lorl/evaluate.hpp"

#include <Eigen/QR>
#include <cmath>
#include <sstream>

namespace lorl {

namespace {

Eigen::VectorXd resolve_probs(const FeatureMdp& mdp, const Policy& policy, int h, int x,
                              const EvalOptions& opts) {
  if (h >= policy.horizon()) {
    std::ostringstream os;
    os << "policy evaluation: policy has no step " << h;
    throw DimensionError(os.str());
  }
  auto exact = try_exact_probabilities(mdp, policy.steps[h], h, x);
  if (exact) return *exact;
  if (opts.mc_draws <= 0)
    throw UnsupportedModeError(
        "policy evaluation: exact probabilities unavailable; pass EvalOptions with mc_draws");
  RngStream local = opts.stream.derive({static_cast<std::uint64_t>(h),
                                        static_cast<std::uint64_t>(x)});
  return action_probabilities(mdp, policy.steps[h], h, x,
                              ProbMode::mc(opts.mc_draws, local));
}

}  // namespace

Policy resolve_to_tabular(const FeatureMdp& mdp, const Policy& policy, const EvalOptions& opts) {
  Policy out;
  for (int h = 0; h < mdp.horizon; ++h) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
    for (int x = 0; x < mdp.num_states; ++x) {
      if (mdp.is_active(h, x))
        rows.row(x) = resolve_probs(mdp, policy, h, x, opts).transpose();
      else
        rows(x, 0) = 1.0;  // inactive rows keep the block stochastic
    }
    out.steps.push_back(TabularPolicy{std::move(rows)});
  }
  return out;
}

RewardTable linear_reward_table(const FeatureMdp& mdp) {
  RewardTable table;
  for (int h = 0; h < mdp.horizon; ++h) {
    Eigen::MatrixXd r(mdp.num_states, mdp.num_actions);
    for (int x = 0; x < mdp.num_states; ++x)
      for (int a = 0; a < mdp.num_actions; ++a) r(x, a) = mdp.reward(h, x, a);
    table.rewards.push_back(std::move(r));
  }
  return table;
}

RewardTable induced_reward_table(const FeatureMdp& mdp, const std::vector<Eigen::VectorXd>& w,
                                 const Policy& policy, const EvalOptions& opts) {
  if (static_cast<int>(w.size()) != mdp.horizon)
    throw DimensionError("induced rewards: need one weight vector per step");
  for (int h = 0; h < mdp.horizon; ++h)
    if (w[h].size() != mdp.dim) {
      std::ostringstream os;
      os << "induced rewards: weight dimension mismatch at step " << h;
      throw DimensionError(os.str());
    }

  RewardTable table;
  for (int h = 0; h < mdp.horizon; ++h) {
    // mean of f_{h+1} under the policy at each successor state
    Eigen::VectorXd next_value = Eigen::VectorXd::Zero(mdp.num_states);
    if (h + 1 < mdp.horizon) {
      for (int y : mdp.active_states(h + 1)) {
        Eigen::VectorXd p = resolve_probs(mdp, policy, h + 1, y, opts);
        double m = 0.0;
        for (int a = 0; a < mdp.num_actions; ++a)
          if (p[a] > 0.0) m += p[a] * mdp.feature(h + 1, y, a).dot(w[h + 1]);
        next_value[y] = m;
      }
    }
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
    for (int x : mdp.active_states(h))
      for (int a = 0; a < mdp.num_actions; ++a) {
        double f = mdp.feature(h, x, a).dot(w[h]);
        r(x, a) = f - mdp.transitions[h].row(mdp.row(x, a)).dot(next_value);
      }
    table.rewards.push_back(std::move(r));
  }
  return table;
}

ValueTable policy_value_with_rewards(const FeatureMdp& mdp, const RewardTable& rewards,
                                     const Policy& policy, const EvalOptions& opts) {
  if (static_cast<int>(rewards.rewards.size()) != mdp.horizon)
    throw DimensionError("policy value: reward table must cover every step");
  ValueTable out;
  out.q = Eigen::MatrixXd::Zero(mdp.horizon, mdp.num_states * mdp.num_actions);
  out.v = Eigen::MatrixXd::Zero(mdp.horizon, mdp.num_states);
  for (int h = mdp.horizon - 1; h >= 0; --h) {
    for (int x : mdp.active_states(h)) {
      Eigen::VectorXd p = resolve_probs(mdp, policy, h, x, opts);
      double v = 0.0;
      for (int a = 0; a < mdp.num_actions; ++a) {
        double q = rewards.rewards[h](x, a);
        if (h + 1 < mdp.horizon)
          q += mdp.transitions[h].row(mdp.row(x, a)).dot(out.v.row(h + 1));
        out.q(h, mdp.row(x, a)) = q;
        v += p[a] * q;
      }
      out.v(h, x) = v;
    }
  }
  return out;
}

ValueTable exact_policy_value(const FeatureMdp& mdp, const Policy& policy,
                              const EvalOptions& opts) {
  return policy_value_with_rewards(mdp, linear_reward_table(mdp), policy, opts);
}

Eigen::MatrixXd bellman_backup(const FeatureMdp& mdp, int h,
                               const std::optional<StepPolicy>& policy_next,
                               const Eigen::VectorXd& w, const EvalOptions& opts) {
  if (h < 0 || h >= mdp.horizon) throw DimensionError("bellman_backup: step out of range");
  if (w.size() != mdp.dim) throw DimensionError("bellman_backup: w must have dimension d");

  Eigen::VectorXd next_value = Eigen::VectorXd::Zero(mdp.num_states);
  if (h + 1 < mdp.horizon) {
    if (!policy_next) throw Error("bellman_backup: policy_next required before the last step");
    for (int y : mdp.active_states(h + 1)) {
      auto exact = try_exact_mean_feature(mdp, *policy_next, h + 1, y);
      Eigen::VectorXd mean;
      if (exact) {
        mean = *exact;
      } else {
        if (opts.mc_draws <= 0)
          throw UnsupportedModeError("bellman_backup: next policy needs Monte-Carlo draws");
        RngStream local = opts.stream.derive({static_cast<std::uint64_t>(h + 1),
                                              static_cast<std::uint64_t>(y)});
        Eigen::VectorXd p = action_probabilities(mdp, *policy_next, h + 1, y,
                                                 ProbMode::mc(opts.mc_draws, local));
        mean = Eigen::VectorXd::Zero(mdp.dim);
        for (int a = 0; a < mdp.num_actions; ++a)
          if (p[a] > 0.0) mean += p[a] * mdp.feature(h + 1, y, a);
      }
      next_value[y] = mean.dot(w);
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
  for (int x : mdp.active_states(h))
    for (int a = 0; a < mdp.num_actions; ++a)
      out(x, a) = mdp.reward(h, x, a) + mdp.transitions[h].row(mdp.row(x, a)).dot(next_value);
  return out;
}

Eigen::MatrixXd occupancy(const FeatureMdp& mdp, const Policy& policy, const EvalOptions& opts) {
  Eigen::MatrixXd occ = Eigen::MatrixXd::Zero(mdp.horizon, mdp.num_states);
  occ(0, mdp.initial_state) = 1.0;
  for (int h = 0; h + 1 < mdp.horizon; ++h) {
    for (int x : mdp.active_states(h)) {
      double mass = occ(h, x);
      if (mass == 0.0) continue;
      Eigen::VectorXd p = resolve_probs(mdp, policy, h, x, opts);
      for (int a = 0; a < mdp.num_actions; ++a) {
        if (p[a] == 0.0) continue;
        occ.row(h + 1) += mass * p[a] * mdp.transitions[h].row(mdp.row(x, a));
      }
    }
  }
  return occ;
}

Eigen::MatrixXd mean_features(const FeatureMdp& mdp, const Policy& policy,
                              const EvalOptions& opts) {
  Eigen::MatrixXd occ = occupancy(mdp, policy, opts);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mdp.horizon, mdp.dim);
  for (int h = 0; h < mdp.horizon; ++h)
    for (int x : mdp.active_states(h)) {
      double mass = occ(h, x);
      if (mass == 0.0) continue;
      Eigen::VectorXd p = resolve_probs(mdp, policy, h, x, opts);
      for (int a = 0; a < mdp.num_actions; ++a)
        if (p[a] > 0.0) out.row(h) += mass * p[a] * mdp.features[h].row(mdp.row(x, a));
    }
  return out;
}

std::pair<Policy, ValueTable> optimal_policy(const FeatureMdp& mdp) {
  ValueTable table;
  table.q = Eigen::MatrixXd::Zero(mdp.horizon, mdp.num_states * mdp.num_actions);
  table.v = Eigen::MatrixXd::Zero(mdp.horizon, mdp.num_states);
  Policy greedy;
  greedy.steps.resize(mdp.horizon);
  for (int h = mdp.horizon - 1; h >= 0; --h) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
    for (int x = 0; x < mdp.num_states; ++x) rows(x, 0) = 1.0;
    for (int x : mdp.active_states(h)) {
      int best = 0;
      double best_q = 0.0;
      for (int a = 0; a < mdp.num_actions; ++a) {
        double q = mdp.reward(h, x, a);
        if (h + 1 < mdp.horizon)
          q += mdp.transitions[h].row(mdp.row(x, a)).dot(table.v.row(h + 1));
        table.q(h, mdp.row(x, a)) = q;
        if (a == 0 || q > best_q) {
          best_q = q;
          best = a;
        }
      }
      rows.row(x).setZero();
      rows(x, best) = 1.0;
      table.v(h, x) = best_q;
    }
    greedy.steps[h] = TabularPolicy{std::move(rows)};
  }
  return {std::move(greedy), std::move(table)};
}

double measure_inherent_bellman_error(const FeatureMdp& mdp, const BoundedBallSpec& spec,
                                      RngStream rng) {
  spec.validate();
  const int d = mdp.dim;

  // Signed basis vectors first, then a reproducible sphere stream; a smaller
  // sampling_count evaluates a prefix of the same stream.
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(2 * d + spec.sampling_count);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    samples.push_back(e);
    samples.push_back(-e);
  }
  for (int k = 0; k < spec.sampling_count; ++k) samples.push_back(rng.unit_sphere_vector(d));

  double worst = 0.0;
  for (int h = 0; h < mdp.horizon; ++h) {
    const auto xs = mdp.active_states(h);
    const int rows = static_cast<int>(xs.size()) * mdp.num_actions;
    Eigen::MatrixXd phi(rows, d);
    Eigen::MatrixXd trans(rows, mdp.num_states);
    Eigen::VectorXd reward(rows);
    int r = 0;
    for (int x : xs)
      for (int a = 0; a < mdp.num_actions; ++a, ++r) {
        phi.row(r) = mdp.features[h].row(mdp.row(x, a));
        trans.row(r) = mdp.transitions[h].row(mdp.row(x, a));
        reward[r] = mdp.reward(h, x, a);
      }
    // minimum-norm least squares; rank deficiency falls back to the
    // pseudo-inverse solution deterministically
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi);

    std::vector<int> next_states =
        (h + 1 < mdp.horizon) ? mdp.active_states(h + 1) : std::vector<int>{};

    for (const Eigen::VectorXd& theta : samples) {
      Eigen::VectorXd greedy_next = Eigen::VectorXd::Zero(mdp.num_states);
      for (int y : next_states) {
        double best = mdp.feature(h + 1, y, 0).dot(theta);
        for (int a = 1; a < mdp.num_actions; ++a)
          best = std::max(best, mdp.feature(h + 1, y, a).dot(theta));
        greedy_next[y] = best;
      }
      Eigen::VectorXd target = reward + trans * greedy_next;
      Eigen::VectorXd coeff = cod.solve(target);
      Eigen::VectorXd pred = phi * coeff;
      // keep the fitted map inside 2*B_h: rescale predicted values into [-2,2]
      double pred_max = pred.cwiseAbs().maxCoeff();
      if (pred_max > 2.0) {
        coeff *= 2.0 / pred_max;
        pred = phi * coeff;
      }
      worst = std::max(worst, (pred - target).cwiseAbs().maxCoeff());
    }
  }
  return 2.0 * worst;
}

}  // namespace lorl
