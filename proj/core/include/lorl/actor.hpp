#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "lorl/critic.hpp"
#include "lorl/dataset.hpp"
#include "lorl/mdp.hpp"
#include "lorl/policy.hpp"

namespace lorl {

// zeta_sigma = C * eps_be * d^{3/2} (sqrt(d log(d/(eps_be sigma))) + 1/sigma);
// identically zero when eps_be == 0.
double zeta_bound(double eps_be, int d, double sigma, double c);

struct ParamInputs {
  double eps_final = 0.1;
  double delta = 0.05;
  long long n = 0;
  int d = 0;
  int H = 0;
  double B = 1.0;       // norm bound of the coefficient balls
  double eps_be = 0.0;  // inherent Bellman error assumed by the schedule

  long long T_cap = 5000;
  double const_zeta = 1.0;   // unpinned absolute constant inside zeta
  double const_alpha = 1.0;  // unpinned absolute constant inside alpha
  double lambda = 1.0;
  SolverOptions solver;

  // overrides for individual schedule entries
  std::optional<long long> T;
  std::optional<double> eta, alpha, beta, sigma, eps_apx;
};

enum class OnInfeasible { kAbort, kInflateAlpha };

struct ActorConfig {
  // inputs echoed back
  double eps_final = 0.0, delta = 0.0;
  long long n = 0;
  int d = 0, H = 0;
  double B = 0.0, eps_be = 0.0;
  double lambda = 1.0;
  double const_zeta = 1.0, const_alpha = 1.0;

  // schedule
  double beta = 0.0, eta = 0.0, sigma = 0.0, zeta = 0.0, alpha = 0.0, eps_apx = 0.0;
  long long T = 0;              // iterations actually run (after the cap)
  long long T_theoretical = 0;  // schedule value before capping

  SolverOptions solver;
  OnInfeasible on_infeasible = OnInfeasible::kAbort;
};

// Schedule: beta = 2BH, T = ceil(16 beta^2 sqrt(d) / eps_final^2) capped at
// T_cap, eps_apx = 1/sqrt(n), eta = beta max(sqrt(T) d^-1/4, T sqrt(eps_be)),
// sigma = eta/(T beta), zeta as above, alpha = 4 beta zeta sqrt(n)
// + const_alpha beta d sqrt(log(d n beta / (sigma delta))).
ActorConfig default_params(const ParamInputs& in);

struct ActorIteration {
  std::vector<Eigen::VectorXd> theta;  // cumulative sums entering this round
  std::vector<Eigen::VectorXd> w;      // critic answer
  double objective = 0.0;
  bool alpha_inflated = false;
};

struct ActorRun {
  std::vector<ActorIteration> iters;
  double eta = 0.0;
  int sampled_index = 0;   // t drawn uniformly from the T rounds
  Policy sampled_policy;   // perturbed-linear at theta^{sampled_index}

  Policy policy_at(int t) const;
};

// The main loop: at round t the policy is perturbed-linear at the cumulative
// critic weights with scale eta (expected follow-the-perturbed-leader at
// every state), and the critic responds with the pessimistic weight tuple.
ActorRun run_actor(const FeatureMdp& mdp, const OfflineDataset& data, const ActorConfig& cfg,
                   RngStream rng);

// Average of the per-round policy values: the exact value of the uniform
// policy mixture the run represents.
double mixture_value(const FeatureMdp& mdp, const ActorRun& run, const EvalOptions& opts = {});

// t, objective, per-step ||w_h||, feasibility flag per round.
void write_actor_log_csv(std::ostream& os, const ActorRun& run);

// --- Expected follow-the-perturbed-leader over a finite vector set ---

struct FtplState {
  Eigen::MatrixXd actions;     // one candidate vector per row
  Eigen::VectorXd cumulative;  // sum of past reward vectors
  double omega = 1.0;          // weight on the history inside the argmax
  double eta = 1.0;            // N(0, eta^2 I) perturbations
  int round = 0;
};

// Monte-Carlo estimate of E_rho[argmax_phi (omega <cumulative, phi> + <rho, phi>)].
// eta == 0 degenerates to the deterministic leader (smallest index on ties).
Eigen::VectorXd ftpl_step(const FtplState& state, int mc_samples, RngStream& rng);

struct RegretResult {
  double regret = 0.0;      // best fixed action minus earned, on expected plays
  double bound = 0.0;       // omega L D G^2 T + J D / omega, (J,L) = (eta sqrt d, 1/eta)
  double best_fixed = 0.0;
  double earned = 0.0;
  std::vector<Eigen::VectorXd> plays;
};

RegretResult ftpl_regret_harness(const Eigen::MatrixXd& actions,
                                 const std::vector<Eigen::VectorXd>& adversary, double omega,
                                 double eta, int mc_samples, RngStream rng);

}  // namespace lorl
