#include <benchmark/benchmark.h>

#include <lorl/actor.hpp>
#include <lorl/critic.hpp>
#include <lorl/evaluate.hpp>
#include <lorl/instances.hpp>
#include <lorl/lower_bound.hpp>

#include <cmath>

namespace {

using namespace lorl;

void BM_PolicyEvaluation(benchmark::State& state) {
  HardInstance inst = build_instance(1.0 / 64.0, HardBits::zeros(8));
  Policy ref = reference_policy(inst);
  for (auto _ : state) {
    ValueTable table = exact_policy_value(inst.mdp, ref);
    benchmark::DoNotOptimize(table.v(0, inst.mdp.initial_state));
  }
}
BENCHMARK(BM_PolicyEvaluation);

void BM_InherentErrorMeasurement(benchmark::State& state) {
  HardInstance inst = build_instance(1.0 / 16.0, HardBits::zeros(4));
  BoundedBallSpec spec;
  spec.bound_b = std::sqrt(2.0);
  spec.sampling_count = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(measure_inherent_bellman_error(inst.mdp, spec, RngStream(1)));
  }
}
BENCHMARK(BM_InherentErrorMeasurement)->Arg(64)->Arg(256);

void BM_EstFeature(benchmark::State& state) {
  HardInstance inst = build_instance(1.0 / 16.0, HardBits::zeros(4));
  Policy pi = Policy::perturbed_linear(
      {Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)}, 0.5);
  const double eps_apx = 1.0 / std::sqrt(static_cast<double>(state.range(0)));
  RngStream rng(7);
  for (auto _ : state) {
    FeatureEstimate est = est_feature(inst.mdp, inst.s_level[2], pi, 1, eps_apx, 1e-4, rng);
    benchmark::DoNotOptimize(est.phi_hat);
  }
}
BENCHMARK(BM_EstFeature)->Arg(300)->Arg(3000);

void BM_CriticSolve(benchmark::State& state) {
  HardInstance inst = build_instance(1.0 / 16.0, HardBits::zeros(4));
  RngStream data_rng(3);
  OfflineDataset data = generate_hard_dataset(inst, state.range(0), data_rng);
  Policy pi = Policy::perturbed_linear(
      {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)}, 2.0);
  CriticParams params;
  params.eps_apx = 1.0 / std::sqrt(static_cast<double>(data.n()));
  params.alpha = 20.0;
  params.beta = 4.0 * std::sqrt(2.0);
  params.delta = 0.05;
  CriticProblem problem = make_critic_problem(inst.mdp, data, pi, params);
  RngStream est_rng(4);
  draw_feature_estimates(problem, est_rng);
  for (auto _ : state) {
    RngStream rng(5);
    CriticSolution sol = solve_critic(problem, rng);
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(BM_CriticSolve)->Arg(300)->Arg(3000);

void BM_ActorRound(benchmark::State& state) {
  FeatureMdp mdp = two_arm_bandit(0.3);
  RngStream data_rng(6);
  std::vector<PlanEntry> plan = {{0, 0, 0, 600}, {0, 0, 1, 600}};
  OfflineDataset data = generate_dataset(mdp, plan, data_rng);
  ParamInputs in;
  in.eps_final = 0.3;
  in.delta = 0.05;
  in.n = data.n();
  in.d = 2;
  in.H = 1;
  in.B = std::sqrt(2.0);
  in.T = 8;
  ActorConfig cfg = default_params(in);
  for (auto _ : state) {
    ActorRun run = run_actor(mdp, data, cfg, RngStream(8));
    benchmark::DoNotOptimize(run.iters.back().objective);
  }
}
BENCHMARK(BM_ActorRound);

}  // namespace

BENCHMARK_MAIN();
