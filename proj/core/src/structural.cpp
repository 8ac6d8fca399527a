#include "lorl/structural.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <ostream>

#include "lorl/actor.hpp"
#include "lorl/evaluate.hpp"
#include "lorl/serialize.hpp"

namespace lorl {

namespace {

Eigen::VectorXd mean_next_feature(const FeatureMdp& mdp, const StepPolicy& policy, int h, int x,
                                  int mc_budget, RngStream& rng) {
  auto exact = try_exact_mean_feature(mdp, policy, h, x);
  if (exact) return *exact;
  Eigen::VectorXd p = action_probabilities(
      mdp, policy, h, x, ProbMode::mc(mc_budget, rng.derive(static_cast<std::uint64_t>(x))));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(mdp.dim);
  for (int a = 0; a < mdp.num_actions; ++a)
    if (p[a] > 0.0) mean += p[a] * mdp.feature(h, x, a);
  return mean;
}

}  // namespace

BackupFitReport fit_linear_backup(const FeatureMdp& mdp, int h, const StepPolicy& policy_next,
                                  const std::vector<Eigen::VectorXd>& w_probes, double eps_be,
                                  double const_zeta, int mc_budget, RngStream rng) {
  if (h < 0 || h + 1 >= mdp.horizon)
    throw DimensionError("fit_linear_backup: need a step with a successor step");

  BackupFitReport report;
  report.step = h;
  if (const auto* pl = std::get_if<PerturbedLinear>(&policy_next)) report.sigma = pl->sigma;
  report.zeta_sigma =
      (report.sigma > 0.0) ? zeta_bound(eps_be, mdp.dim, report.sigma, const_zeta) : 0.0;

  // expected next-step feature per successor state
  const auto next_states = mdp.active_states(h + 1);
  Eigen::MatrixXd next_feature = Eigen::MatrixXd::Zero(mdp.num_states, mdp.dim);
  for (int y : next_states)
    next_feature.row(y) = mean_next_feature(mdp, policy_next, h + 1, y, mc_budget, rng);

  const auto xs = mdp.active_states(h);
  const int rows = static_cast<int>(xs.size()) * mdp.num_actions;
  Eigen::MatrixXd phi(rows, mdp.dim);
  Eigen::MatrixXd trans(rows, mdp.num_states);
  Eigen::VectorXd reward(rows);
  int r = 0;
  for (int x : xs)
    for (int a = 0; a < mdp.num_actions; ++a, ++r) {
      phi.row(r) = mdp.features[h].row(mdp.row(x, a));
      trans.row(r) = mdp.transitions[h].row(mdp.row(x, a));
      reward[r] = mdp.reward(h, x, a);
    }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi);

  for (const Eigen::VectorXd& w : w_probes) {
    if (w.size() != mdp.dim) throw DimensionError("fit_linear_backup: probe dimension");
    Eigen::VectorXd target = reward + trans * (next_feature * w);
    BackupProbeResult probe;
    probe.w = w;
    probe.coeff = cod.solve(target);
    probe.residual_inf = (phi * probe.coeff - target).cwiseAbs().maxCoeff();
    probe.bound = (report.sigma > 0.0) ? w.norm() * report.zeta_sigma
                                       : std::numeric_limits<double>::quiet_NaN();
    report.max_residual = std::max(report.max_residual, probe.residual_inf);
    report.probes.push_back(std::move(probe));
  }
  return report;
}

SmoothedGradientReport smoothed_gradient_check(const FeatureMdp& mdp, int h, int x, int a,
                                               const Eigen::VectorXd& w, double sigma,
                                               double fd_step, int mc_budget, RngStream rng) {
  if (sigma <= 0.0) throw Error("smoothed_gradient_check: sigma must be positive");
  if (fd_step <= 0.0) throw Error("smoothed_gradient_check: fd_step must be positive");
  if (w.size() != mdp.dim) throw DimensionError("smoothed_gradient_check: w dimension");
  const int d = mdp.dim;

  SmoothedGradientReport report;
  report.lhs = Eigen::VectorXd::Zero(d);
  report.rhs = Eigen::VectorXd::Zero(d);
  if (h + 1 >= mdp.horizon) return report;  // next-step features vanish, both sides zero

  const Eigen::VectorXd trans_row = mdp.transitions[h].row(mdp.row(x, a)).transpose();
  const auto next_states = mdp.active_states(h + 1);

  auto greedy_value = [&](int y, const Eigen::VectorXd& theta) {
    double best = mdp.feature(h + 1, y, 0).dot(theta);
    for (int act = 1; act < mdp.num_actions; ++act)
      best = std::max(best, mdp.feature(h + 1, y, act).dot(theta));
    return best;
  };

  // finite difference with common random numbers: the same (z, x') pair is
  // used for every coordinate and both signs
  RngStream fd_rng = rng.derive(0xfdu);
  Eigen::VectorXd z(d), shifted(d);
  for (int s = 0; s < mc_budget; ++s) {
    for (int j = 0; j < d; ++j) z[j] = sigma * fd_rng.normal();
    int y = fd_rng.categorical(trans_row);
    for (int j = 0; j < d; ++j) {
      shifted = w + z;
      shifted[j] += fd_step;
      double plus = greedy_value(y, shifted);
      shifted[j] -= 2.0 * fd_step;
      double minus = greedy_value(y, shifted);
      report.lhs[j] += (plus - minus) / (2.0 * fd_step);
    }
  }
  report.lhs /= static_cast<double>(mc_budget);

  // expected feature of the perturbed policy: exact over x', Monte Carlo over theta
  RngStream mc_rng = rng.derive(0xecu);
  Eigen::VectorXd theta(d);
  for (int s = 0; s < mc_budget; ++s) {
    for (int j = 0; j < d; ++j) theta[j] = w[j] + sigma * mc_rng.normal();
    for (int y : next_states) {
      if (trans_row[y] <= 0.0) continue;
      int best = 0;
      double best_score = mdp.feature(h + 1, y, 0).dot(theta);
      for (int act = 1; act < mdp.num_actions; ++act) {
        double sc = mdp.feature(h + 1, y, act).dot(theta);
        if (sc > best_score) {
          best_score = sc;
          best = act;
        }
      }
      report.rhs += trans_row[y] * mdp.feature(h + 1, y, best);
    }
  }
  report.rhs /= static_cast<double>(mc_budget);

  report.rel_error = (report.lhs - report.rhs).norm() / std::max(report.rhs.norm(), 1e-12);
  return report;
}

FeatureMdp absmax_counterexample_mdp() {
  FeatureMdp mdp;
  mdp.horizon = 2;
  mdp.num_states = 2;
  mdp.num_actions = 3;
  mdp.dim = 1;
  mdp.initial_state = 0;
  mdp.state_names = {"s1", "s2"};

  const int rows = mdp.num_states * mdp.num_actions;
  Eigen::MatrixXd phi1(rows, 1), phi2(rows, 1);
  phi1.setOnes();
  phi2 << 1, 0, -1,  // s1: actions 1..3
      1, 1, -1;      // s2
  Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(rows, 2);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 3; ++a) trans(mdp.row(x, a), x) = 1.0;  // self loops
  mdp.features = {phi1, phi2};
  mdp.transitions = {trans, trans};
  mdp.reward_coeffs = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  mdp.validate();
  return mdp;
}

CounterexampleReport softmax_counterexample() {
  FeatureMdp mdp = absmax_counterexample_mdp();
  CounterexampleReport report;

  BoundedBallSpec spec;
  spec.bound_b = 1.0;
  report.measured_eps_be = measure_inherent_bellman_error(mdp, spec, RngStream(0x1bc));

  // the backup of w is |w| at both states
  for (double w : {1.0, -1.0, 0.5, -0.25, 0.0}) {
    for (int x = 0; x < 2; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) best = std::max(best, mdp.features[1](mdp.row(x, a), 0) * w);
      report.certificate_residual =
          std::max(report.certificate_residual, std::abs(best - std::abs(w)));
    }
  }

  SoftmaxPolicy soft{Eigen::VectorXd::Ones(1), 1.0};
  report.value_s1 = try_exact_mean_feature(mdp, StepPolicy{soft}, 1, 0)->value();
  report.value_s2 = try_exact_mean_feature(mdp, StepPolicy{soft}, 1, 1)->value();
  report.gap = std::abs(report.value_s2 - report.value_s1);
  return report;
}

void write_structural_csv(std::ostream& os, const std::vector<StructuralCheckRow>& rows) {
  os << "check,residual,bound,pass\n";
  for (const StructuralCheckRow& row : rows)
    os << row.name << ',' << format_double(row.residual) << ',' << format_double(row.bound)
       << ',' << (row.pass ? 1 : 0) << '\n';
}

}  // namespace lorl
