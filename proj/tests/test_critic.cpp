#include <doctest.h>

#include <Eigen/Cholesky>

#include <lorl/critic.hpp>
#include <lorl/evaluate.hpp>

#include <cmath>

#include "helpers.hpp"

using namespace lorl;
using namespace lorl::testing;

namespace {

FeatureMdp two_state_mdp(RngStream& rng) { return random_mdp(rng, 3, 2, 2, 2); }

OfflineDataset full_plan_dataset(const FeatureMdp& mdp, long long per_cell, RngStream& rng) {
  std::vector<PlanEntry> plan;
  for (int h = 0; h < mdp.horizon; ++h)
    for (int x = 0; x < mdp.num_states; ++x)
      for (int a = 0; a < mdp.num_actions; ++a) plan.push_back({h, x, a, per_cell});
  return generate_dataset(mdp, plan, rng);
}

CriticParams basic_params(double alpha, double beta) {
  CriticParams params;
  params.eps_apx = 0.05;
  params.alpha = alpha;
  params.beta = beta;
  params.delta = 0.05;
  params.lambda = 1.0;
  return params;
}

}  // namespace

TEST_CASE("empirical bellman operator") {
  RngStream rng(1);
  FeatureMdp mdp = two_state_mdp(rng);
  std::vector<Eigen::VectorXd> phi_hat;

  SUBCASE("no tuples at the step gives the zero vector") {
    OfflineDataset empty;
    Eigen::VectorXd out = empirical_bellman(empty, mdp, 0, Eigen::VectorXd::Zero(2), phi_hat, 1.0);
    CHECK(out == Eigen::VectorXd::Zero(2));
  }

  SUBCASE("single unit tuple: direct 2x2 arithmetic") {
    // phi = e1, r = 1, phi_hat = 0, lambda = 1 -> Sigma = diag(2,1), answer (1/2, 0)
    FeatureMdp unit = mdp;
    unit.features[0].row(unit.row(1, 0)) << 1.0, 0.0;
    unit.reward_coeffs[0] << 1.0, 0.0;
    OfflineDataset data;
    data.tuples.push_back({0, 1, 0, 1.0, 2});
    phi_hat.assign(1, Eigen::VectorXd::Zero(2));
    Eigen::VectorXd out =
        empirical_bellman(data, unit, 0, Eigen::VectorXd::Ones(2), phi_hat, 1.0);
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("w_next = 0 reduces to ridge regression of rewards") {
    RngStream local(2);
    OfflineDataset data = full_plan_dataset(mdp, 4, local);
    phi_hat.assign(data.n(), Eigen::VectorXd::Zero(2));
    Eigen::VectorXd via_op =
        empirical_bellman(data, mdp, 0, Eigen::VectorXd::Zero(2), phi_hat, 1.0);

    Eigen::MatrixXd sig = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2);
    for (int i : data.step_index(0)) {
      const DataTuple& t = data.tuples[i];
      Eigen::VectorXd phi = mdp.feature(t.h, t.x, t.a);
      sig += phi * phi.transpose();
      rhs += phi * t.r;
    }
    Eigen::VectorXd ridge = sig.ldlt().solve(rhs);
    CHECK((via_op - ridge).norm() <= 1e-12);
    CHECK_THROWS_AS(empirical_bellman(data, mdp, 0, Eigen::VectorXd::Zero(2), phi_hat, 0.0),
                    Error);
  }
}

TEST_CASE("alpha = 0 pins the chain to the empirical backups") {
  RngStream rng(3);
  FeatureMdp mdp = two_state_mdp(rng);
  OfflineDataset data = full_plan_dataset(mdp, 6, rng);

  Policy pi = random_perturbed_policy(rng, mdp, 0.4);
  CriticProblem problem = make_critic_problem(mdp, data, pi, basic_params(0.0, 50.0));
  RngStream solver_rng(4);
  CriticSolution sol = solve_critic(problem, solver_rng);

  // backward substitution reproduces the solution exactly
  Eigen::VectorXd w2 = empirical_bellman(data, mdp, 1, Eigen::VectorXd::Zero(2),
                                         problem.phi_hat, 1.0);
  Eigen::VectorXd w1 = empirical_bellman(data, mdp, 0, w2, problem.phi_hat, 1.0);
  CHECK((sol.w[1] - w2).norm() <= 1e-10);
  CHECK((sol.w[0] - w1).norm() <= 1e-10);
  CHECK(sol.objective == doctest::Approx(problem.phi1_hat.dot(w1)).epsilon(1e-10));
  for (int h = 0; h < 2; ++h) CHECK(sol.xi[h].norm() <= 1e-10);

  CertifyReport report = certify_solution(sol, problem, 1e-6);
  CHECK(report.ok);
  CHECK(report.equality_gap <= 1e-10);
}

TEST_CASE("single-step program with zero rewards has a closed form") {
  // min <w, q> s.t. ||w||_Sigma <= alpha, ||w|| <= beta with centered data:
  // optimum -alpha ||q||_{Sigma^-1} when the ball is slack
  RngStream rng(5);
  FeatureMdp mdp = random_mdp(rng, 2, 2, 1, 2);
  for (auto& theta : mdp.reward_coeffs) theta.setZero();
  OfflineDataset data = full_plan_dataset(mdp, 10, rng);

  Policy pi = random_perturbed_policy(rng, mdp, 0.5);
  const double alpha = 0.35;
  CriticProblem problem = make_critic_problem(mdp, data, pi, basic_params(alpha, 100.0));
  RngStream solver_rng(6);
  CriticSolution sol = solve_critic(problem, solver_rng);

  CovarianceSummary cov = covariance(data, 0, 1.0, mdp);
  Eigen::VectorXd q = problem.phi1_hat;
  double expected = -alpha * std::sqrt(q.dot(cov.sigma.ldlt().solve(q)));
  CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-6));
  CHECK(certify_solution(sol, problem, 1e-6).ok);
}

TEST_CASE("alpha = 0 with zero rewards returns the zero solution") {
  RngStream rng(7);
  FeatureMdp mdp = two_state_mdp(rng);
  for (auto& theta : mdp.reward_coeffs) theta.setZero();
  OfflineDataset data = full_plan_dataset(mdp, 5, rng);
  Policy pi = random_perturbed_policy(rng, mdp, 0.3);
  CriticProblem problem = make_critic_problem(mdp, data, pi, basic_params(0.0, 10.0));
  RngStream solver_rng(8);
  CriticSolution sol = solve_critic(problem, solver_rng);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-12));
  for (const auto& wh : sol.w) CHECK(wh.norm() <= 1e-12);
}

TEST_CASE("enlarging alpha never raises the optimal objective") {
  RngStream rng(9);
  for (int trial = 0; trial < 4; ++trial) {
    FeatureMdp mdp = two_state_mdp(rng);
    OfflineDataset data = full_plan_dataset(mdp, 8, rng);
    Policy pi = random_perturbed_policy(rng, mdp, 0.5);

    CriticProblem narrow = make_critic_problem(mdp, data, pi, basic_params(0.3, 20.0));
    RngStream stream_a(100 + trial);
    CriticSolution sol_narrow = solve_critic(narrow, stream_a);

    CriticProblem wide = make_critic_problem(mdp, data, pi, basic_params(0.6, 20.0));
    wide.phi_hat = narrow.phi_hat;  // identical estimates isolate the alpha effect
    wide.phi1_hat = narrow.phi1_hat;
    wide.estimates_ready = true;
    RngStream stream_b(200 + trial);
    CriticSolution sol_wide = solve_critic(wide, stream_b);

    CHECK(sol_wide.objective <= sol_narrow.objective + 2e-6);
    CHECK(certify_solution(sol_narrow, narrow, 1e-6).ok);
    CHECK(certify_solution(sol_wide, wide, 1e-6).ok);
  }
}

TEST_CASE("certify flags a hand-perturbed weight vector") {
  RngStream rng(10);
  FeatureMdp mdp = two_state_mdp(rng);
  OfflineDataset data = full_plan_dataset(mdp, 5, rng);
  Policy pi = random_perturbed_policy(rng, mdp, 0.4);
  const double beta = 8.0;
  CriticProblem problem = make_critic_problem(mdp, data, pi, basic_params(0.5, beta));
  RngStream solver_rng(11);
  CriticSolution sol = solve_critic(problem, solver_rng);
  REQUIRE(certify_solution(sol, problem, 1e-6).ok);

  CriticSolution broken = sol;
  broken.w[0][0] += 2.0 * beta;
  CertifyReport report = certify_solution(broken, problem, 1e-6);
  CHECK(!report.ok);
  bool ball_flagged = false;
  for (const CertifyRow& row : report.rows)
    if (row.constraint == "step 1 weight-norm" && !row.ok) ball_flagged = true;
  CHECK(ball_flagged);
}

TEST_CASE("an empty feasible set is detected, not silently relaxed") {
  // one tuple with reward 1 pins the backup near (1/2, 0); a tiny ball and
  // a tiny alpha cannot both hold
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
  theta << 1.0, 0.0;
  mdp.reward_coeffs = {theta};
  mdp.validate();

  OfflineDataset data;
  for (int i = 0; i < 100; ++i) data.tuples.push_back({0, 0, 0, 1.0, kTerminalState});

  Policy pi = Policy::perturbed_linear({Eigen::VectorXd::Zero(2)}, 0.2);
  CriticProblem problem = make_critic_problem(mdp, data, pi, basic_params(1e-3, 0.05));
  RngStream solver_rng(12);
  try {
    solve_critic(problem, solver_rng);
    FAIL("expected InfeasibleProgramError");
  } catch (const InfeasibleProgramError& err) {
    CHECK(err.best_residual > 0.1);
  }
}

TEST_CASE("objective equals the induced-MDP value of the returned weights") {
  RngStream rng(13);
  FeatureMdp mdp = two_state_mdp(rng);
  OfflineDataset data = full_plan_dataset(mdp, 500, rng);

  Policy pi = random_perturbed_policy(rng, mdp, 0.6);
  CriticParams params = basic_params(1.0, 20.0);
  params.eps_apx = 1.0 / std::sqrt(static_cast<double>(data.n()));
  CriticProblem problem = make_critic_problem(mdp, data, pi, params);
  RngStream solver_rng(14);
  CriticSolution sol = solve_critic(problem, solver_rng);

  Policy resolved = resolve_to_tabular(mdp, pi, EvalOptions::monte_carlo(200000, RngStream(15)));
  RewardTable induced = induced_reward_table(mdp, sol.w, resolved);
  double v_induced =
      policy_value_with_rewards(mdp, induced, resolved).value_at_initial(mdp);
  // phi1_hat carries eps_apx estimation error plus the tabular resolution noise
  double tol = params.eps_apx * params.beta + 0.02 * sol.w[0].norm() + 1e-6;
  CHECK(std::abs(sol.objective - v_induced) <= tol);
}

TEST_CASE("solver trace records objective and residual columns") {
  RngStream rng(16);
  FeatureMdp mdp = two_state_mdp(rng);
  OfflineDataset data = full_plan_dataset(mdp, 4, rng);
  Policy pi = random_perturbed_policy(rng, mdp, 0.4);
  CriticParams params = basic_params(0.4, 10.0);
  params.solver.record_trace = true;
  CriticProblem problem = make_critic_problem(mdp, data, pi, params);
  RngStream solver_rng(17);
  CriticSolution sol = solve_critic(problem, solver_rng);
  CHECK(!sol.trace.empty());
  std::stringstream out;
  write_solver_trace_csv(out, sol.trace);
  CHECK(out.str().rfind("iteration,objective,max_residual\n", 0) == 0);
}
