#include <doctest.h>

#include <lorl/dataset.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpers.hpp"

using namespace lorl;
using namespace lorl::testing;

TEST_CASE("plan generation: counts, rewards, and successors") {
  RngStream rng(1);
  FeatureMdp mdp = random_mdp(rng, 4, 2, 2, 2);

  SUBCASE("empty plan is an error") {
    std::vector<PlanEntry> plan;
    CHECK_THROWS_AS(generate_dataset(mdp, plan, rng), Error);
  }
  SUBCASE("zero counts give an empty dataset") {
    std::vector<PlanEntry> plan = {{0, 1, 0, 0}, {1, 2, 1, 0}};
    CHECK(generate_dataset(mdp, plan, rng).n() == 0);
  }
  SUBCASE("rewards are the exact linear rewards") {
    std::vector<PlanEntry> plan = {{0, 1, 1, 50}, {1, 3, 0, 50}};
    OfflineDataset data = generate_dataset(mdp, plan, rng);
    CHECK(data.n() == 100);
    for (const DataTuple& t : data.tuples)
      CHECK(std::abs(t.r - mdp.reward(t.h, t.x, t.a)) <= 1e-12);
  }
  SUBCASE("deterministic transitions give the unique successor") {
    FeatureMdp det = mdp;
    for (auto& block : det.transitions)
      for (int r = 0; r < block.rows(); ++r) {
        block.row(r).setZero();
        block(r, 2) = 1.0;
      }
    std::vector<PlanEntry> plan = {{0, 0, 1, 25}};
    OfflineDataset data = generate_dataset(det, plan, rng);
    for (const DataTuple& t : data.tuples) CHECK(t.x_next == 2);
  }
  SUBCASE("last-step tuples carry the terminal marker") {
    std::vector<PlanEntry> plan = {{1, 0, 0, 5}};
    OfflineDataset data = generate_dataset(mdp, plan, rng);
    for (const DataTuple& t : data.tuples) CHECK(t.x_next == kTerminalState);
  }
}

TEST_CASE("behavior rollouts contribute one tuple per step") {
  RngStream rng(2);
  FeatureMdp mdp = random_mdp(rng, 3, 2, 3, 2);
  Policy pi = random_tabular_policy(rng, mdp);
  OfflineDataset data = generate_rollouts(mdp, pi, 40, rng);
  CHECK(data.n() == 120);
  for (int i = 0; i < data.n(); ++i) {
    CHECK(data.tuples[i].h == i % 3);
    CHECK(std::abs(data.tuples[i].r -
                   mdp.reward(data.tuples[i].h, data.tuples[i].x, data.tuples[i].a)) <= 1e-12);
  }
  for (int i = 0; i + 1 < data.n(); ++i)
    if (data.tuples[i].h < 2) CHECK(data.tuples[i].x_next == data.tuples[i + 1].x);
}

TEST_CASE("covariance: identity at empty steps, permutation invariant") {
  RngStream rng(3);
  FeatureMdp mdp = random_mdp(rng, 3, 2, 2, 3);
  std::vector<PlanEntry> plan = {{0, 0, 0, 7}, {0, 1, 1, 4}};
  OfflineDataset data = generate_dataset(mdp, plan, rng);

  CovarianceSummary empty = covariance(data, 1, 1.0, mdp);
  CHECK(empty.sigma == Eigen::MatrixXd::Identity(3, 3));
  CHECK(empty.index_set.empty());

  CovarianceSummary fwd = covariance(data, 0, 0.5, mdp);
  std::reverse(data.tuples.begin(), data.tuples.end());
  CovarianceSummary rev = covariance(data, 0, 0.5, mdp);
  CHECK((fwd.sigma - rev.sigma).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(covariance(data, 0, -1.0, mdp), Error);
}

TEST_CASE("coverage is zero for a policy with vanishing mean features") {
  FeatureMdp mdp;
  mdp.horizon = 1;
  mdp.num_states = 1;
  mdp.num_actions = 2;
  mdp.dim = 2;
  mdp.initial_state = 0;
  Eigen::MatrixXd phi(2, 2);
  phi << 0.5, 0.5, -0.5, -0.5;
  mdp.features = {phi};
  mdp.transitions = {Eigen::MatrixXd::Ones(2, 1)};
  mdp.reward_coeffs = {Eigen::VectorXd::Zero(2)};
  mdp.validate();

  RngStream rng(4);
  std::vector<PlanEntry> plan = {{0, 0, 0, 10}};
  OfflineDataset data = generate_dataset(mdp, plan, rng);
  Policy uniform = Policy::uniform_tabular(mdp);
  CHECK(coverage_parameter(data, uniform, mdp, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coverage is invariant under dataset duplication at lambda = 0") {
  RngStream rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    FeatureMdp mdp = random_mdp(rng, 4, 3, 2, 2);
    Policy pi = random_tabular_policy(rng, mdp);
    std::vector<PlanEntry> plan;
    for (int h = 0; h < 2; ++h)
      for (int x = 0; x < 4; ++x)
        for (int a = 0; a < 3; ++a) plan.push_back({h, x, a, 3});
    OfflineDataset data = generate_dataset(mdp, plan, rng);
    double base = coverage_parameter(data, pi, mdp, 0.0);

    OfflineDataset doubled = data;
    doubled.tuples.insert(doubled.tuples.end(), data.tuples.begin(), data.tuples.end());
    double twice = coverage_parameter(doubled, pi, mdp, 0.0);
    CHECK(std::abs(base - twice) <= 1e-9 * std::max(1.0, base));
  }
}

TEST_CASE("coverage blows up when the mean feature leaves the data span") {
  FeatureMdp mdp;
  mdp.horizon = 1;
  mdp.num_states = 1;
  mdp.num_actions = 2;
  mdp.dim = 2;
  mdp.initial_state = 0;
  Eigen::MatrixXd phi(2, 2);
  phi << 0.0, 1.0, 1.0, 0.0;  // action 0 along e2, action 1 along e1
  mdp.features = {phi};
  mdp.transitions = {Eigen::MatrixXd::Ones(2, 1)};
  mdp.reward_coeffs = {Eigen::VectorXd::Zero(2)};
  mdp.validate();

  RngStream rng(6);
  std::vector<PlanEntry> plan = {{0, 0, 0, 8}};  // data only spans e2
  OfflineDataset data = generate_dataset(mdp, plan, rng);

  Eigen::MatrixXd rows(1, 2);
  rows << 0.0, 1.0;  // plays action 1, mean feature e1 leaves the span
  Policy pi;
  pi.steps.push_back(TabularPolicy{rows});
  CHECK_THROWS_AS(coverage_parameter(data, pi, mdp, 0.0), InfiniteCoverageError);

  rows << 1.0, 0.0;
  Policy ok;
  ok.steps.push_back(TabularPolicy{rows});
  // ||e2||_{n Sigma^-1} with Sigma = 8 e2 e2^T and n = 8
  CHECK(coverage_parameter(data, ok, mdp, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dataset csv round-trips") {
  RngStream rng(7);
  FeatureMdp mdp = random_mdp(rng, 3, 2, 2, 2);
  std::vector<PlanEntry> plan = {{0, 1, 1, 6}, {1, 2, 0, 3}};
  OfflineDataset data = generate_dataset(mdp, plan, rng);

  std::stringstream buffer;
  write_dataset_csv(buffer, data);
  OfflineDataset back = read_dataset_csv(buffer);
  REQUIRE(back.n() == data.n());
  for (int i = 0; i < data.n(); ++i) {
    CHECK(back.tuples[i].h == data.tuples[i].h);
    CHECK(back.tuples[i].x == data.tuples[i].x);
    CHECK(back.tuples[i].a == data.tuples[i].a);
    CHECK(back.tuples[i].r == data.tuples[i].r);
    CHECK(back.tuples[i].x_next == data.tuples[i].x_next);
  }

  std::stringstream bad("h,x,a,r\n");
  CHECK_THROWS_AS(read_dataset_csv(bad), ParseError);
}
