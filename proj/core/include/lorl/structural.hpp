#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lorl/mdp.hpp"
#include "lorl/policy.hpp"
#include "lorl/rng.hpp"

namespace lorl {

struct BackupProbeResult {
  Eigen::VectorXd w;        // probed coefficient vector
  Eigen::VectorXd coeff;    // least-squares backup coefficients
  double residual_inf = 0;  // sup-norm fit residual over (x,a)
  double bound = 0;         // ||w|| * zeta_sigma, NaN when no bound applies
};

// Fit of the policy Bellman backup of linear functions at one step against
// the step features. For a perturbed policy with sigma > 0 the residual is
// compared to the smoothing bound ||w|| * zeta_sigma.
struct BackupFitReport {
  int step = 0;
  double sigma = 0.0;       // perturbation scale of the next-step policy, 0 if n/a
  double zeta_sigma = 0.0;  // bound per unit ||w||; 0 when eps_be = 0
  double max_residual = 0.0;
  std::vector<BackupProbeResult> probes;
  std::string description;
};

BackupFitReport fit_linear_backup(const FeatureMdp& mdp, int h, const StepPolicy& policy_next,
                                  const std::vector<Eigen::VectorXd>& w_probes, double eps_be,
                                  double const_zeta, int mc_budget, RngStream rng);

struct SmoothedGradientReport {
  Eigen::VectorXd lhs;  // finite difference of the smoothed greedy value
  Eigen::VectorXd rhs;  // expected next feature under the perturbed policy
  double rel_error = 0.0;
};

// Checks that the gradient of the Gaussian-smoothed greedy backup equals the
// expected feature of the induced perturbed policy. Common random numbers
// across the +/- finite-difference evaluations.
SmoothedGradientReport smoothed_gradient_check(const FeatureMdp& mdp, int h, int x, int a,
                                               const Eigen::VectorXd& w, double sigma,
                                               double fd_step, int mc_budget, RngStream rng);

// Two-state, three-action, d = 1 MDP whose greedy backup of w is |w|: exactly
// linear Bellman backups for greedy policies, yet softmax policies produce
// backups that no linear function matches across the two states.
FeatureMdp absmax_counterexample_mdp();

struct CounterexampleReport {
  double measured_eps_be = 0.0;     // ~0: the instance is linear Bellman complete
  double certificate_residual = 0;  // max |max_a w phi_2(x,a) - |w|| over probes
  double value_s1 = 0.0;            // softmax backup value at state s1
  double value_s2 = 0.0;            // softmax backup value at state s2
  double gap = 0.0;                 // |value_s2 - value_s1|, both states share phi_1
};

CounterexampleReport softmax_counterexample();

struct StructuralCheckRow {
  std::string name;
  double residual = 0.0;
  double bound = 0.0;
  bool pass = false;
};

void write_structural_csv(std::ostream& os, const std::vector<StructuralCheckRow>& rows);

}  // namespace lorl
