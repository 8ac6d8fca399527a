#include "lorl/policy.hpp"

#include <cmath>
#include <sstream>

namespace lorl {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

void check_step(const FeatureMdp& mdp, const StepPolicy& step, int h) {
  if (h < 0 || h >= mdp.horizon) {
    std::ostringstream os;
    os << "policy: step " << h << " outside horizon " << mdp.horizon;
    throw DimensionError(os.str());
  }
  if (const auto* pl = std::get_if<PerturbedLinear>(&step)) {
    if (pl->w.size() != mdp.dim) {
      std::ostringstream os;
      os << "policy: weight dimension " << pl->w.size() << " != d=" << mdp.dim
         << " at step " << h;
      throw DimensionError(os.str());
    }
    if (pl->sigma < 0.0) throw Error("policy: sigma must be nonnegative");
  } else if (const auto* sm = std::get_if<SoftmaxPolicy>(&step)) {
    if (sm->w.size() != mdp.dim) {
      std::ostringstream os;
      os << "policy: softmax weight dimension mismatch at step " << h;
      throw DimensionError(os.str());
    }
    if (sm->eta <= 0.0) throw Error("policy: softmax eta must be positive");
  } else if (const auto* tab = std::get_if<TabularPolicy>(&step)) {
    if (tab->probs.rows() != mdp.num_states || tab->probs.cols() != mdp.num_actions) {
      std::ostringstream os;
      os << "policy: tabular block shape mismatch at step " << h;
      throw DimensionError(os.str());
    }
  }
}

Eigen::VectorXd softmax_probs(const FeatureMdp& mdp, const SoftmaxPolicy& sm, int h, int x) {
  const int A = mdp.num_actions;
  Eigen::VectorXd scores(A);
  for (int a = 0; a < A; ++a) scores[a] = sm.eta * mdp.feature(h, x, a).dot(sm.w);
  double top = scores.maxCoeff();
  Eigen::VectorXd p = (scores.array() - top).exp();
  return p / p.sum();
}

// d == 1: for theta > 0 the max-feature action wins, for theta < 0 the
// min-feature action wins (smallest index on ties either way).
Eigen::VectorXd closed_form_probs_1d(const FeatureMdp& mdp, const PerturbedLinear& pl,
                                     int h, int x) {
  const int A = mdp.num_actions;
  int arg_hi = 0, arg_lo = 0;
  double hi = mdp.features[h](mdp.row(x, 0), 0);
  double lo = hi;
  for (int a = 1; a < A; ++a) {
    double f = mdp.features[h](mdp.row(x, a), 0);
    if (f > hi) { hi = f; arg_hi = a; }
    if (f < lo) { lo = f; arg_lo = a; }
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(A);
  if (hi == lo) {  // every theta ties across all actions
    p[0] = 1.0;
    return p;
  }
  double prob_pos = standard_normal_cdf(pl.w[0] / pl.sigma);
  p[arg_hi] += prob_pos;
  p[arg_lo] += 1.0 - prob_pos;
  return p;
}

// When the action features take at most two distinct values the argmax is a
// half-space event: the winning group is decided by the sign of
// <theta, f_0 - f_1>, and ties inside a group go to its smallest index.
std::optional<Eigen::VectorXd> closed_form_probs_two_groups(const FeatureMdp& mdp,
                                                            const PerturbedLinear& pl, int h,
                                                            int x) {
  const int A = mdp.num_actions;
  int rep_a = 0;                // smallest index of the group containing action 0
  int rep_b = -1;               // smallest index of the other group, if any
  Eigen::VectorXd f_a = mdp.feature(h, x, 0);
  Eigen::VectorXd f_b;
  for (int a = 1; a < A; ++a) {
    Eigen::VectorXd f = mdp.feature(h, x, a);
    if (f == f_a) continue;
    if (rep_b < 0) {
      rep_b = a;
      f_b = f;
    } else if (f != f_b) {
      return std::nullopt;  // three or more distinct feature vectors
    }
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(A);
  if (rep_b < 0) {
    p[0] = 1.0;  // all actions identical: every theta ties, index 0 wins
    return p;
  }
  Eigen::VectorXd delta = f_a - f_b;
  double prob_a = standard_normal_cdf(pl.w.dot(delta) / (pl.sigma * delta.norm()));
  p[rep_a] = prob_a;
  p[rep_b] = 1.0 - prob_a;
  return p;
}

}  // namespace

int argmax_action(const FeatureMdp& mdp, int h, int x, const Eigen::VectorXd& theta) {
  const int A = mdp.num_actions;
  int best = 0;
  double best_score = mdp.features[h].row(mdp.row(x, 0)).dot(theta);
  for (int a = 1; a < A; ++a) {
    double s = mdp.features[h].row(mdp.row(x, a)).dot(theta);
    if (s > best_score) {
      best_score = s;
      best = a;
    }
  }
  return best;
}

int sample_action(const FeatureMdp& mdp, const StepPolicy& step, int h, int x, RngStream& rng) {
  check_step(mdp, step, h);
  if (const auto* pl = std::get_if<PerturbedLinear>(&step)) {
    if (pl->sigma == 0.0) return argmax_action(mdp, h, x, pl->w);
    Eigen::VectorXd theta = rng.normal_vector(pl->w, pl->sigma);
    return argmax_action(mdp, h, x, theta);
  }
  if (const auto* sm = std::get_if<SoftmaxPolicy>(&step))
    return rng.categorical(softmax_probs(mdp, *sm, h, x));
  const auto& tab = std::get<TabularPolicy>(step);
  return rng.categorical(tab.probs.row(x).transpose());
}

int sample_action(const FeatureMdp& mdp, const Policy& policy, int h, int x, RngStream& rng) {
  if (h >= policy.horizon()) throw DimensionError("policy: missing step " + std::to_string(h));
  return sample_action(mdp, policy.steps[h], h, x, rng);
}

std::optional<Eigen::VectorXd> try_exact_probabilities(const FeatureMdp& mdp,
                                                       const StepPolicy& step, int h, int x) {
  check_step(mdp, step, h);
  if (const auto* tab = std::get_if<TabularPolicy>(&step))
    return tab->probs.row(x).transpose();
  if (const auto* sm = std::get_if<SoftmaxPolicy>(&step)) return softmax_probs(mdp, *sm, h, x);
  const auto& pl = std::get<PerturbedLinear>(step);
  if (pl.sigma == 0.0) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(mdp.num_actions);
    p[argmax_action(mdp, h, x, pl.w)] = 1.0;
    return p;
  }
  if (mdp.dim == 1) return closed_form_probs_1d(mdp, pl, h, x);
  return closed_form_probs_two_groups(mdp, pl, h, x);
}

Eigen::VectorXd action_probabilities(const FeatureMdp& mdp, const StepPolicy& step, int h,
                                     int x, const ProbMode& mode) {
  check_step(mdp, step, h);
  switch (mode.kind) {
    case ProbMode::kExact: {
      auto p = try_exact_probabilities(mdp, step, h, x);
      if (!p)
        throw UnsupportedModeError(
            "action_probabilities: no exact form for a perturbed policy with d > 1 and more "
            "than two actions; use Monte-Carlo mode");
      return *p;
    }
    case ProbMode::kClosedForm1d: {
      if (std::holds_alternative<PerturbedLinear>(step) && mdp.dim != 1)
        throw UnsupportedModeError("action_probabilities: closed-form mode requires d == 1");
      auto p = try_exact_probabilities(mdp, step, h, x);
      return *p;  // d == 1 always has a closed form
    }
    case ProbMode::kMonteCarlo: {
      const auto* pl = std::get_if<PerturbedLinear>(&step);
      if (pl == nullptr || pl->sigma == 0.0) {
        auto p = try_exact_probabilities(mdp, step, h, x);
        return *p;  // tabular passthrough, softmax, and sigma=0 are their own law
      }
      if (mode.draws <= 0) throw Error("action_probabilities: Monte-Carlo mode needs draws > 0");
      RngStream rng = mode.stream;
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(mdp.num_actions);
      Eigen::VectorXd theta(mdp.dim);
      for (int k = 0; k < mode.draws; ++k) {
        for (int i = 0; i < mdp.dim; ++i) theta[i] = pl->w[i] + pl->sigma * rng.normal();
        counts[argmax_action(mdp, h, x, theta)] += 1.0;
      }
      return counts / static_cast<double>(mode.draws);
    }
  }
  throw Error("action_probabilities: unknown mode");
}

std::optional<Eigen::VectorXd> try_exact_mean_feature(const FeatureMdp& mdp,
                                                      const StepPolicy& step, int h, int x) {
  auto p = try_exact_probabilities(mdp, step, h, x);
  if (!p) return std::nullopt;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(mdp.dim);
  for (int a = 0; a < mdp.num_actions; ++a)
    if ((*p)[a] > 0.0) mean += (*p)[a] * mdp.feature(h, x, a);
  return mean;
}

FeatureEstimate est_feature(const FeatureMdp& mdp, int x, const Policy& policy, int h,
                            double eps_apx, double delta, RngStream& rng) {
  if (h >= policy.horizon()) throw DimensionError("est_feature: missing policy step");
  const auto* pl = std::get_if<PerturbedLinear>(&policy.steps[h]);
  if (pl == nullptr)
    throw UnsupportedPolicyError("est_feature: step policy must be perturbed linear");
  if (!(eps_apx > 0.0 && eps_apx < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw Error("est_feature: eps_apx and delta must lie in (0,1)");
  check_step(mdp, policy.steps[h], h);

  const long long n_samples = static_cast<long long>(
      std::ceil(2.0 / (eps_apx * eps_apx) * std::log(2.0 * mdp.dim / delta)));

  FeatureEstimate out;
  out.sample_count = n_samples;
  out.eps_apx = eps_apx;
  out.delta = delta;
  if (pl->sigma == 0.0 || mdp.num_actions == 1) {
    out.phi_hat = mdp.feature(h, x, argmax_action(mdp, h, x, pl->w));
    return out;
  }

  const int A = mdp.num_actions, d = mdp.dim;
  const Eigen::MatrixXd block = mdp.features[h].middleRows(mdp.row(x, 0), A);
  Eigen::VectorXd theta(d), scores(A);
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(d);
  for (long long i = 0; i < n_samples; ++i) {
    for (int j = 0; j < d; ++j) theta[j] = pl->w[j] + pl->sigma * rng.normal();
    scores.noalias() = block * theta;
    int best = 0;
    for (int a = 1; a < A; ++a)
      if (scores[a] > scores[best]) best = a;
    accum += block.row(best);
  }
  out.phi_hat = accum / static_cast<double>(n_samples);
  return out;
}

StabilityCheck gaussian_stability_check(double eta, const Eigen::VectorXd& v) {
  if (eta <= 0.0) throw Error("gaussian_stability_check: eta must be positive");
  StabilityCheck out;
  double ratio = v.norm() / (2.0 * eta);
  out.tv_distance = 2.0 * standard_normal_cdf(ratio) - 1.0;
  out.bound = ratio;
  return out;
}

}  // namespace lorl
