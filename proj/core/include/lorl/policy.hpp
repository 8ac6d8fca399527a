#pragma once

#include <Eigen/Core>
#include <optional>
#include <variant>
#include <vector>

#include "lorl/mdp.hpp"
#include "lorl/rng.hpp"

namespace lorl {

// Draw theta ~ N(w, sigma^2 I) and play argmax_a <phi_h(x,a), theta>.
// sigma == 0 is the deterministic argmax on w itself (the sigma -> 0 limit),
// with ties broken toward the smallest action index.
struct PerturbedLinear {
  Eigen::VectorXd w;
  double sigma = 0.0;
};

// pi(a|x) proportional to exp(eta * <phi_h(x,a), w>).
struct SoftmaxPolicy {
  Eigen::VectorXd w;
  double eta = 1.0;
};

// Explicit per-state action distributions; probs is |X| x |A|.
struct TabularPolicy {
  Eigen::MatrixXd probs;
};

using StepPolicy = std::variant<PerturbedLinear, SoftmaxPolicy, TabularPolicy>;

struct Policy {
  std::vector<StepPolicy> steps;

  static Policy perturbed_linear(std::vector<Eigen::VectorXd> w, double sigma) {
    Policy p;
    for (auto& wh : w) p.steps.push_back(PerturbedLinear{std::move(wh), sigma});
    return p;
  }
  static Policy uniform_tabular(const FeatureMdp& mdp) {
    Policy p;
    Eigen::MatrixXd rows = Eigen::MatrixXd::Constant(mdp.num_states, mdp.num_actions,
                                                     1.0 / mdp.num_actions);
    for (int h = 0; h < mdp.horizon; ++h) p.steps.push_back(TabularPolicy{rows});
    return p;
  }
  int horizon() const { return static_cast<int>(steps.size()); }
};

// Smallest-index argmax of <phi_h(x,a), theta> over actions.
int argmax_action(const FeatureMdp& mdp, int h, int x, const Eigen::VectorXd& theta);

int sample_action(const FeatureMdp& mdp, const StepPolicy& step, int h, int x, RngStream& rng);
int sample_action(const FeatureMdp& mdp, const Policy& policy, int h, int x, RngStream& rng);

// How to turn a step policy into action probabilities.
struct ProbMode {
  enum Kind {
    kExact,        // tabular / sigma=0 / softmax / d==1 / two actions; throws otherwise
    kMonteCarlo,   // empirical frequencies over `draws` perturbations
    kClosedForm1d  // Gaussian-CDF closed form; requires d == 1
  };
  Kind kind = kExact;
  int draws = 0;
  RngStream stream;

  static ProbMode exact() { return {}; }
  static ProbMode mc(int draws, RngStream stream) { return {kMonteCarlo, draws, stream}; }
  static ProbMode closed_form_1d() { return {kClosedForm1d, 0, {}}; }
};

// Distribution of the played action at (h, x). Sums to 1.
Eigen::VectorXd action_probabilities(const FeatureMdp& mdp, const StepPolicy& step, int h,
                                     int x, const ProbMode& mode);

// Exact probabilities when the variant admits them, nullopt otherwise.
std::optional<Eigen::VectorXd> try_exact_probabilities(const FeatureMdp& mdp,
                                                       const StepPolicy& step, int h, int x);

// Expected feature <phi_h(x, pi_h(x))> under exact probabilities; nullopt when
// only Monte-Carlo evaluation is possible.
std::optional<Eigen::VectorXd> try_exact_mean_feature(const FeatureMdp& mdp,
                                                      const StepPolicy& step, int h, int x);

struct FeatureEstimate {
  Eigen::VectorXd phi_hat;
  long long sample_count = 0;
  double eps_apx = 0.0;
  double delta = 0.0;
};

// Monte-Carlo estimate of the expected feature of a perturbed linear step
// policy at (h, x) with N = ceil(2 eps_apx^-2 log(2d/delta)) draws.
// sigma == 0 short-circuits to the exact argmax feature.
FeatureEstimate est_feature(const FeatureMdp& mdp, int x, const Policy& policy, int h,
                            double eps_apx, double delta, RngStream& rng);

struct StabilityCheck {
  double tv_distance = 0.0;  // exact TV between N(0, eta^2 I) and N(v, eta^2 I)
  double bound = 0.0;        // ||v|| / (2 eta)
};

// TV distance of a mean shift of an isotropic Gaussian against the shift
// bound used in the perturbation-stability argument; tv <= bound always.
StabilityCheck gaussian_stability_check(double eta, const Eigen::VectorXd& v);

double standard_normal_cdf(double z);

}  // namespace lorl
