#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <vector>

#include "lorl/dataset.hpp"
#include "lorl/mdp.hpp"
#include "lorl/policy.hpp"
#include "lorl/rng.hpp"

namespace lorl {

// Bit vector selecting a member of the two-step hard family: a reward sign
// bit, an initial-branch bit, and per-level index shifts b_{l,e}.
struct HardBits {
  int b_rew = 0;
  int b_init = 0;
  std::vector<std::array<int, 2>> shift;  // shift[l-1][e] for l = 1..L

  static HardBits zeros(int levels) {
    HardBits b;
    b.shift.assign(levels, {0, 0});
    return b;
  }
};

// A materialized member M^b of the family, with the state ids needed by the
// probe and dataset machinery. Levels run l = 0..L with level spacing eps.
struct HardInstance {
  double eps = 0.0;
  int levels = 0;  // L = 1/sqrt(eps), an even integer
  HardBits bits;
  double c_phi = 0.0;  // feature normalizer, 1/sqrt(2)
  double r_scale = 16.0;

  FeatureMdp mdp;
  int s1 = 0, t1 = 0, s2 = 0, s2bar = 0, q2 = 0;
  std::vector<int> s_level;                  // s2^{l eps}, l = 0..L
  std::vector<std::array<int, 2>> t_level;   // t2,e^{l eps}; t_level[0][0]==t_level[0][1]

  // Behavioral action probabilities: mass on actions defined to mirror action
  // 0 is folded into action 0. At the four-action levels s2^z nothing aliases.
  Eigen::VectorXd behavioral(int x, const Eigen::VectorXd& probs) const;
};

// Largest eps' <= eps whose level count 1/sqrt(eps') is an even integer.
double admissible_eps(double eps);

// Throws unless 1/sqrt(eps) is an even integer (use admissible_eps to round).
HardInstance build_instance(double eps, const HardBits& bits);

// w_1 = (1, 1-2 b_init), w_2 = (0, 1), sigma = 0.
Policy reference_policy(const HardInstance& inst);

// The canonical three-block dataset; n is rounded down to a multiple of 3.
// Its law does not depend on the instance bits.
OfflineDataset generate_hard_dataset(const HardInstance& inst, long long n, RngStream& rng);

// An offline algorithm under test: dataset in, policy out. The trial index is
// unique across the estimation and held-out phases of a gap evaluation, which
// lets file-backed algorithms map trials to stored policies.
using AlgorithmFn = std::function<Policy(const FeatureMdp& mdp, const OfflineDataset& data,
                                         int trial, RngStream rng)>;

// Averaged behavioral probabilities of the algorithm's output policies at the
// probe states, estimated over independent dataset draws.
struct PolicyDistributionEstimate {
  int trials = 0;
  int levels = 0;
  double z0[2] = {0.0, 0.0};  // E[pi(1-b | t1)] for b = 0 and b = 1
  int b_init = 0;             // selected so z0[b_init] >= 1/2
  // aggregates under the selected b_init, indexed by level l = 0..L
  Eigen::VectorXd eta_bar;    // E[pi(1-b_init|t1) (pi(0|t2,0^l) - pi(1|t2,1^l))]
  Eigen::VectorXd gamma_bar;  // E[pi(b_init|t1) (pi(1|s2^l) - pi(3|s2^l))]
  Eigen::VectorXd rho;        // E_D[pi(0|t2,0^l) + pi(1|t2,1^l)], D reweighted by pi(1-b_init|t1)
  Eigen::VectorXd rho0, rho1;
};

struct ProbeOptions {
  int prob_draws = 20000;  // Monte-Carlo budget per probe state for smooth policies
  int threads = 0;
};

PolicyDistributionEstimate estimate_policy_distribution(const AlgorithmFn& algorithm,
                                                        const HardInstance& instance_template,
                                                        long long n, int trials,
                                                        const ProbeOptions& opts,
                                                        RngStream rng);

// Exact population version for a fixed output policy (a point-mass algorithm
// whose output must be exactly evaluable: tabular or sigma = 0).
PolicyDistributionEstimate exact_policy_distribution(const HardInstance& instance_template,
                                                     const Policy& output);

// The adversarial bit choice driven by the distribution estimate.
struct AdversarialChoice {
  HardBits bits;
  int case_id = 0;  // 1, 2, or 3
  bool noise_flagged = false;
  double margin_case1 = 0.0, margin_case2 = 0.0, margin_case3 = 0.0;
};

AdversarialChoice adversarial_b(const PolicyDistributionEstimate& est, double eps);

struct GapResult {
  double gap = 0.0;       // V1^{pi*} - mean V1^{pi_hat} on the adversarial instance
  double std_err = 0.0;   // standard error of the mean over held-out trials
  double v_reference = 0.0;
  double mean_v_algorithm = 0.0;
  double threshold = 0.0;  // c_phi sqrt(eps) / 40
  int case_id = 0;
  HardBits bits;
  bool noise_flagged = false;
  bool regime_warning = false;  // 1/sqrt(n) >= sqrt(eps)
  int trials_estimate = 0, trials_holdout = 0;
};

struct GapOptions {
  int trials_estimate = 50;
  int trials_holdout = 50;
  int prob_draws = 20000;    // probe-state probability budget
  int eval_mc_draws = 20000; // DP action-probability budget for smooth policies
  int threads = 0;
};

// Estimates the output-policy distribution on fresh trials, picks the
// adversarial bits, then measures the value gap on held-out trials.
GapResult evaluate_gap(const AlgorithmFn& algorithm, double eps, long long n,
                       const GapOptions& opts, RngStream rng);

// Deterministic variant: the algorithm is a constant, exactly evaluable
// policy, the distribution is its exact population version, and the gap is
// computed by exact dynamic programming (no sampling anywhere).
GapResult evaluate_gap_deterministic(const Policy& output, double eps);

}  // namespace lorl
