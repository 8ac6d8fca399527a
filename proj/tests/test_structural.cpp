#include <doctest.h>

#include <lorl/evaluate.hpp>
#include <lorl/structural.hpp>

#include <cmath>
#include <sstream>

#include "helpers.hpp"

using namespace lorl;
using namespace lorl::testing;

TEST_CASE("the absmax instance is linear Bellman complete") {
  FeatureMdp mdp = absmax_counterexample_mdp();
  BoundedBallSpec spec;
  CHECK(measure_inherent_bellman_error(mdp, spec, RngStream(3)) <= 1e-9);
}

TEST_CASE("softmax counterexample report") {
  CounterexampleReport report = softmax_counterexample();
  CHECK(report.measured_eps_be <= 1e-9);
  CHECK(report.certificate_residual <= 1e-12);

  const double e = std::exp(1.0);
  CHECK(report.value_s1 ==
        doctest::Approx((e - 1.0 / e) / (e + 1.0 + 1.0 / e)).epsilon(1e-12));
  CHECK(report.value_s2 ==
        doctest::Approx((2.0 * e - 1.0 / e) / (2.0 * e + 1.0 / e)).epsilon(1e-12));
  CHECK(report.gap == doctest::Approx(0.29803174072948346).epsilon(1e-9));
}

TEST_CASE("backup of a perturbed policy is exactly linear on a complete instance") {
  FeatureMdp mdp = absmax_counterexample_mdp();
  Eigen::VectorXd w(1);
  w << 0.8;
  PerturbedLinear next{w, 0.5};
  std::vector<Eigen::VectorXd> probes = {w, -w, 2.0 * w};
  BackupFitReport report =
      fit_linear_backup(mdp, 0, StepPolicy{next}, probes, 0.0, 1.0, 0, RngStream(4));
  // d = 1 probabilities are closed form, so the fit is exact
  CHECK(report.max_residual <= 1e-12);
  CHECK(report.zeta_sigma == 0.0);
}

TEST_CASE("w = 0 probe reduces to the reward fit") {
  RngStream rng(5);
  FeatureMdp mdp = random_mdp(rng, 4, 3, 2, 2);
  PerturbedLinear next{Eigen::VectorXd::Zero(2), 0.4};
  std::vector<Eigen::VectorXd> probes = {Eigen::VectorXd::Zero(2)};
  BackupFitReport report =
      fit_linear_backup(mdp, 0, StepPolicy{next}, probes, 0.0, 1.0, 5000, RngStream(6));
  // rewards are exactly linear in the features by construction
  CHECK(report.max_residual <= 1e-12);
}

TEST_CASE("softmax policies break the linear-backup property") {
  FeatureMdp mdp = absmax_counterexample_mdp();
  SoftmaxPolicy next{Eigen::VectorXd::Ones(1), 1.0};
  Eigen::VectorXd w(1);
  w << 1.0;
  BackupFitReport report =
      fit_linear_backup(mdp, 0, StepPolicy{next}, {w}, 0.0, 1.0, 0, RngStream(7));
  // both states share phi_1 = 1, so the best fit is the midpoint of the two
  // softmax backup values and the residual is half their spread
  CHECK(report.max_residual == doctest::Approx(0.14901587036474173).epsilon(1e-9));
  CHECK(report.max_residual >= 0.14);
}

TEST_CASE("smoothed gradient check: degenerate cases") {
  SUBCASE("single action per state is exact up to transition sampling") {
    RngStream rng(8);
    FeatureMdp mdp = random_mdp(rng, 3, 1, 2, 2);
    Eigen::VectorXd w = rng.standard_normal_vector(2);
    SmoothedGradientReport rep =
        smoothed_gradient_check(mdp, 0, 0, 0, w, 0.5, 1e-3, 40000, RngStream(9));
    CHECK((rep.lhs - rep.rhs).norm() <= 0.03);
  }
  SUBCASE("symmetric one-dimensional actions cancel") {
    FeatureMdp mdp;
    mdp.horizon = 2;
    mdp.num_states = 1;
    mdp.num_actions = 2;
    mdp.dim = 1;
    mdp.initial_state = 0;
    Eigen::MatrixXd phi(2, 1);
    phi << 1, -1;
    mdp.features = {phi, phi};
    mdp.transitions = {Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(2, 1)};
    mdp.reward_coeffs = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    mdp.validate();
    SmoothedGradientReport rep = smoothed_gradient_check(
        mdp, 0, 0, 0, Eigen::VectorXd::Zero(1), 1.0, 1e-3, 40000, RngStream(10));
    CHECK(std::abs(rep.lhs[0]) <= 0.02);
    CHECK(std::abs(rep.rhs[0]) <= 0.02);
  }
}

TEST_CASE("smoothed gradient identity on a random instance") {
  RngStream rng(11);
  FeatureMdp mdp = random_mdp(rng, 4, 4, 2, 2);
  Eigen::VectorXd w = rng.standard_normal_vector(2);
  SmoothedGradientReport rep =
      smoothed_gradient_check(mdp, 0, 1, 2, w, 0.5, 1e-3, 200000, RngStream(12));
  CHECK(rep.rel_error <= 0.02);
}

TEST_CASE("smoothed gradient error shrinks with the budget") {
  RngStream rng(13);
  FeatureMdp mdp = random_mdp(rng, 4, 4, 2, 2);
  Eigen::VectorXd w = rng.standard_normal_vector(2);
  SmoothedGradientReport coarse =
      smoothed_gradient_check(mdp, 0, 0, 1, w, 0.5, 1e-3, 3000, RngStream(14));
  SmoothedGradientReport fine =
      smoothed_gradient_check(mdp, 0, 0, 1, w, 0.5, 1e-3, 48000, RngStream(14));
  // sixteen times the budget should cut the error around fourfold
  CHECK(fine.rel_error <= std::max(0.75 * coarse.rel_error, 5e-4));
}

TEST_CASE("perturbed-linear backups respect the smoothing bound on a noisy instance") {
  // instance with a small measured inherent error: perturb a one-hot MDP's features
  RngStream rng(15);
  FeatureMdp mdp = one_hot_mdp(rng, 2, 2, 2);
  for (int h = 0; h < 2; ++h)
    for (int r = 0; r < mdp.features[h].rows(); ++r)
      for (int c = 0; c < mdp.dim; ++c)
        mdp.features[h](r, c) += 0.01 * (rng.uniform01() - 0.5);
  for (auto& block : mdp.features)
    block /= 1.02;  // restore the norm budget
  mdp.validate();

  BoundedBallSpec spec;
  spec.bound_b = 2.5;
  double eps_be = measure_inherent_bellman_error(mdp, spec, RngStream(16));
  CHECK(eps_be > 0.0);

  PerturbedLinear next{rng.standard_normal_vector(mdp.dim), 0.5};
  std::vector<Eigen::VectorXd> probes;
  for (int k = 0; k < 3; ++k) probes.push_back(rng.standard_normal_vector(mdp.dim));
  BackupFitReport report =
      fit_linear_backup(mdp, 0, StepPolicy{next}, probes, eps_be, 1.0, 0, RngStream(17));
  for (const BackupProbeResult& probe : report.probes) {
    CHECK(std::isfinite(probe.bound));
    CHECK(probe.residual_inf <= probe.bound + 1e-9);
  }
}

TEST_CASE("structural csv writer") {
  std::vector<StructuralCheckRow> rows = {{"demo", 0.5, 1.0, true}};
  std::stringstream out;
  write_structural_csv(out, rows);
  CHECK(out.str() == "check,residual,bound,pass\ndemo,0.5,1,1\n");
}
