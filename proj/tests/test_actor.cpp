#include <doctest.h>

#include <lorl/actor.hpp>
#include <lorl/evaluate.hpp>

#include <cmath>
#include <sstream>

#include "helpers.hpp"

using namespace lorl;
using namespace lorl::testing;

namespace {

ParamInputs bandit_inputs(long long n) {
  ParamInputs in;
  in.eps_final = 0.5;
  in.delta = 0.05;
  in.n = n;
  in.d = 2;
  in.H = 1;
  in.B = std::sqrt(2.0);
  in.eps_be = 0.0;
  return in;
}

// H = 1, two orthogonal actions; the bandit-like zero-error instance
FeatureMdp two_arm_mdp(double gap) {
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
  mdp.validate();
  return mdp;
}

OfflineDataset two_arm_dataset(const FeatureMdp& mdp, long long n, RngStream& rng) {
  std::vector<PlanEntry> plan = {{0, 0, 0, n / 2}, {0, 0, 1, n - n / 2}};
  return generate_dataset(mdp, plan, rng);
}

}  // namespace

TEST_CASE("parameter schedule follows the prescribed formulas") {
  SUBCASE("beta and the T formula") {
    ParamInputs in;
    in.eps_final = 0.5;
    in.delta = 0.1;
    in.n = 1000;
    in.d = 2;
    in.H = 2;
    in.B = std::sqrt(2.0);
    ActorConfig cfg = default_params(in);
    CHECK(cfg.beta == doctest::Approx(4.0 * std::sqrt(2.0)).epsilon(1e-15));
    // 16 * 32 * sqrt(2) / 0.25 = 2896.3... rounds up to 2897
    CHECK(cfg.T_theoretical == 2897);
    CHECK(cfg.T == 2897);  // below the default cap
    CHECK(cfg.eps_apx == doctest::Approx(1.0 / std::sqrt(1000.0)).epsilon(1e-15));
  }
  SUBCASE("zero bellman error takes the first eta branch and kills zeta") {
    ParamInputs in = bandit_inputs(400);
    ActorConfig cfg = default_params(in);
    CHECK(cfg.zeta == 0.0);
    double expected_eta = cfg.beta * std::sqrt(static_cast<double>(cfg.T)) *
                          std::pow(2.0, -0.25);
    CHECK(cfg.eta == doctest::Approx(expected_eta).epsilon(1e-12));
    CHECK(cfg.sigma == doctest::Approx(cfg.eta / (cfg.T * cfg.beta)).epsilon(1e-12));
  }
  SUBCASE("the cap binds and the theoretical value is kept") {
    ParamInputs in = bandit_inputs(400);
    in.eps_final = 0.01;
    in.T_cap = 500;
    ActorConfig cfg = default_params(in);
    CHECK(cfg.T == 500);
    CHECK(cfg.T_theoretical > 500);
  }
  SUBCASE("positive bellman error widens alpha through zeta") {
    ParamInputs in = bandit_inputs(400);
    in.eps_be = 0.05;
    ActorConfig cfg = default_params(in);
    CHECK(cfg.zeta > 0.0);
    CHECK(cfg.alpha > default_params(bandit_inputs(400)).alpha);
  }
}

TEST_CASE("ftpl_step degenerate and concentrated regimes") {
  Eigen::MatrixXd actions(2, 2);
  actions << 1.0, 0.0, 0.0, 1.0;

  SUBCASE("eta = 0 with no history returns the first action") {
    FtplState state{actions, Eigen::VectorXd::Zero(2), 1.0, 0.0, 0};
    RngStream rng(1);
    CHECK(ftpl_step(state, 10, rng) == actions.row(0).transpose());
  }
  SUBCASE("overwhelming history pins the leader") {
    Eigen::VectorXd cum(2);
    cum << 1e6, 0.0;
    FtplState state{actions, cum, 1.0, 1.0, 0};
    RngStream rng(2);
    Eigen::VectorXd play = ftpl_step(state, 4000, rng);
    CHECK((play - actions.row(0).transpose()).norm() <= 1e-3);
  }
  SUBCASE("symmetric actions average to zero") {
    Eigen::MatrixXd sym(2, 2);
    sym << 1.0, 0.0, -1.0, 0.0;
    FtplState state{sym, Eigen::VectorXd::Zero(2), 1.0, 1.0, 0};
    RngStream rng(3);
    const int draws = 40000;
    Eigen::VectorXd play = ftpl_step(state, draws, rng);
    CHECK(std::abs(play[0]) <= 3.0 / std::sqrt(static_cast<double>(draws)));
  }
}

TEST_CASE("regret harness stays under the stability bound") {
  Eigen::MatrixXd actions(2, 2);
  actions << 1.0, 0.0, -1.0, 0.0;
  const double eta = 8.0, omega = 1.0;

  SUBCASE("zero adversary earns zero regret") {
    std::vector<Eigen::VectorXd> zeros(50, Eigen::VectorXd::Zero(2));
    RegretResult res = ftpl_regret_harness(actions, zeros, omega, eta, 2000, RngStream(4));
    CHECK(res.regret == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.regret <= res.bound);
  }
  SUBCASE("constant adversary") {
    Eigen::VectorXd w(2);
    w << 0.8, 0.0;
    std::vector<Eigen::VectorXd> seq(200, w);
    RegretResult res = ftpl_regret_harness(actions, seq, omega, eta, 4000, RngStream(5));
    CHECK(res.best_fixed == doctest::Approx(200 * 0.8).epsilon(1e-12));
    double mc_slack = 3.0 * 200 * 0.8 / std::sqrt(4000.0);
    CHECK(res.regret <= res.bound + mc_slack);
  }
  SUBCASE("alternating adversary") {
    std::vector<Eigen::VectorXd> seq;
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd w(2);
      w << (t % 2 == 0 ? 0.5 : -0.5), 0.0;
      seq.push_back(w);
    }
    RegretResult res = ftpl_regret_harness(actions, seq, omega, eta, 4000, RngStream(6));
    CHECK(res.best_fixed == 0.0);  // alternating sums cancel for both fixed actions
    double mc_slack = 3.0 * 200 * 0.5 / std::sqrt(4000.0);
    CHECK(res.regret <= res.bound + mc_slack);
  }
}

TEST_CASE("actor run: accumulation, determinism, and the T = 1 policy") {
  RngStream rng(7);
  FeatureMdp mdp = two_arm_mdp(0.4);
  OfflineDataset data = two_arm_dataset(mdp, 200, rng);

  ParamInputs in = bandit_inputs(200);
  in.T = 6;
  ActorConfig cfg = default_params(in);
  ActorRun run = run_actor(mdp, data, cfg, RngStream(42));

  SUBCASE("theta is the exact prefix sum of the critic weights") {
    REQUIRE(static_cast<int>(run.iters.size()) == 6);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
    for (const ActorIteration& it : run.iters) {
      CHECK(it.theta[0] == acc);
      acc += it.w[0];
    }
  }
  SUBCASE("same seed, same run; different seed differs") {
    ActorRun again = run_actor(mdp, data, cfg, RngStream(42));
    for (size_t t = 0; t < run.iters.size(); ++t)
      CHECK(again.iters[t].w[0] == run.iters[t].w[0]);
    CHECK(again.sampled_index == run.sampled_index);

    ActorRun other = run_actor(mdp, data, cfg, RngStream(43));
    bool any_diff = false;
    for (size_t t = 0; t < run.iters.size(); ++t)
      if (other.iters[t].w[0] != run.iters[t].w[0]) any_diff = true;
    CHECK(any_diff);
  }
  SUBCASE("round one plays the pure perturbation policy") {
    ParamInputs single = in;
    single.T = 1;
    ActorRun one = run_actor(mdp, data, default_params(single), RngStream(1));
    const auto& step = std::get<PerturbedLinear>(one.sampled_policy.steps[0]);
    CHECK(step.w == Eigen::VectorXd::Zero(2));
    CHECK(step.sigma == one.eta);
  }
}

TEST_CASE("mixture value equals the average of the round values") {
  RngStream rng(8);
  FeatureMdp mdp = two_arm_mdp(0.3);
  OfflineDataset data = two_arm_dataset(mdp, 300, rng);
  ParamInputs in = bandit_inputs(300);
  in.T = 5;
  ActorRun run = run_actor(mdp, data, default_params(in), RngStream(9));

  double mean = 0.0;
  for (int t = 0; t < 5; ++t)
    mean += exact_policy_value(mdp, run.policy_at(t)).value_at_initial(mdp);
  mean /= 5.0;
  CHECK(std::abs(mixture_value(mdp, run) - mean) <= 1e-9);
}

TEST_CASE("actor recovers most of the value on an easy instance") {
  FeatureMdp mdp = two_arm_mdp(0.6);
  auto [pi_opt, v_opt] = optimal_policy(mdp);
  const double best = v_opt.value_at_initial(mdp);

  double total = 0.0;
  const int seeds = 6;
  for (int seed = 0; seed < seeds; ++seed) {
    RngStream local(300 + seed);
    OfflineDataset data = two_arm_dataset(mdp, 4800, local);
    ParamInputs in = bandit_inputs(4800);
    in.T_cap = 300;
    in.eps_final = 0.05;
    in.const_alpha = 0.5;
    ActorRun run = run_actor(mdp, data, default_params(in), RngStream(500 + seed));
    total += mixture_value(mdp, run);
  }
  CHECK(best - total / seeds <= 0.1);
}

TEST_CASE("per-state ftpl regret bound holds along an actor run") {
  RngStream rng(11);
  FeatureMdp mdp = two_arm_mdp(0.5);
  OfflineDataset data = two_arm_dataset(mdp, 500, rng);
  ParamInputs in = bandit_inputs(500);
  in.T = 40;
  ActorConfig cfg = default_params(in);
  ActorRun run = run_actor(mdp, data, cfg, RngStream(12));

  // comparator: the optimal action at the single state
  auto [pi_opt, table] = optimal_policy(mdp);
  Eigen::VectorXd phi_star =
      *try_exact_mean_feature(mdp, pi_opt.steps[0], 0, mdp.initial_state);

  double lhs = 0.0;
  for (int t = 0; t < cfg.T; ++t) {
    Policy pi_t = run.policy_at(t);
    Eigen::VectorXd mean_t = *try_exact_mean_feature(mdp, pi_t.steps[0], 0, 0);
    lhs += run.iters[t].w[0].dot(phi_star - mean_t);
  }
  double bound = (1.0 / cfg.eta) * cfg.beta * cfg.beta * cfg.T +
                 cfg.eta * std::sqrt(static_cast<double>(mdp.dim));
  CHECK(lhs <= bound + 1e-9);
}

TEST_CASE("run log csv shape") {
  RngStream rng(13);
  FeatureMdp mdp = two_arm_mdp(0.2);
  OfflineDataset data = two_arm_dataset(mdp, 100, rng);
  ParamInputs in = bandit_inputs(100);
  in.T = 3;
  ActorRun run = run_actor(mdp, data, default_params(in), RngStream(14));
  std::stringstream out;
  write_actor_log_csv(out, run);
  CHECK(out.str().rfind("t,objective,w_norm_1,alpha_inflated\n", 0) == 0);
  int lines = 0;
  for (char ch : out.str())
    if (ch == '\n') ++lines;
  CHECK(lines == 4);
}
