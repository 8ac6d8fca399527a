#include "lorl/lower_bound.hpp"

#include <cmath>
#include <sstream>

#include "lorl/evaluate.hpp"
#include "lorl/parallel.hpp"

namespace lorl {

namespace {

constexpr double kCphi = 0.70710678118654752440;  // 1/sqrt(2)
constexpr double kRewardScale = 16.0;

int levels_from_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("hard instance: eps must lie in (0,1)");
  double root = 1.0 / std::sqrt(eps);
  long long l = std::llround(root);
  if (std::abs(root - static_cast<double>(l)) > 1e-9 * root || l < 2 || l % 2 != 0) {
    std::ostringstream os;
    os << "hard instance: 1/sqrt(eps) = " << root
       << " must be an even integer; round eps with admissible_eps first";
    throw Error(os.str());
  }
  return static_cast<int>(l);
}

}  // namespace

double admissible_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("admissible_eps: eps must lie in (0,1)");
  long long l = static_cast<long long>(std::ceil(1.0 / std::sqrt(eps) - 1e-12));
  if (l < 2) l = 2;
  if (l % 2 != 0) ++l;
  double out = 1.0 / (static_cast<double>(l) * static_cast<double>(l));
  while (out > eps) {  // guard against rounding up through the target
    l += 2;
    out = 1.0 / (static_cast<double>(l) * static_cast<double>(l));
  }
  return out;
}

Eigen::VectorXd HardInstance::behavioral(int x, const Eigen::VectorXd& probs) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(probs.size());
  for (int l = 0; l <= levels; ++l)
    if (x == s_level[l]) return probs;  // four genuinely distinct actions
  // elsewhere actions 2 and 3 mirror action 0
  out[0] = probs[0] + probs[2] + probs[3];
  out[1] = probs[1];
  return out;
}

HardInstance build_instance(double eps, const HardBits& bits) {
  const int L = levels_from_eps(eps);
  if (static_cast<int>(bits.shift.size()) != L)
    throw Error("hard instance: bits.shift must have one entry per level 1..L");
  if (bits.b_rew != 0 && bits.b_rew != 1) throw Error("hard instance: b_rew must be 0 or 1");
  if (bits.b_init != 0 && bits.b_init != 1) throw Error("hard instance: b_init must be 0 or 1");
  for (const auto& s : bits.shift)
    for (int e = 0; e < 2; ++e)
      if (s[e] != 0 && s[e] != 1) throw Error("hard instance: shifts must be 0 or 1");

  HardInstance inst;
  inst.eps = eps;
  inst.levels = L;
  inst.bits = bits;
  inst.c_phi = kCphi;
  inst.r_scale = kRewardScale;

  FeatureMdp& mdp = inst.mdp;
  mdp.horizon = 2;
  mdp.num_actions = 4;
  mdp.dim = 2;

  // state layout: named states, then s-levels, then the t-levels with the
  // level-0 pair identified as a single state
  inst.s1 = 0;
  inst.t1 = 1;
  inst.s2 = 2;
  inst.s2bar = 3;
  inst.q2 = 4;
  int next = 5;
  inst.s_level.resize(L + 1);
  for (int l = 0; l <= L; ++l) inst.s_level[l] = next++;
  inst.t_level.resize(L + 1);
  inst.t_level[0] = {next, next};
  ++next;
  for (int l = 1; l <= L; ++l) {
    inst.t_level[l][0] = next++;
    inst.t_level[l][1] = next++;
  }
  mdp.num_states = next;
  mdp.initial_state = inst.t1;

  mdp.state_names.assign(mdp.num_states, "");
  mdp.state_names[inst.s1] = "s1";
  mdp.state_names[inst.t1] = "t1";
  mdp.state_names[inst.s2] = "s2";
  mdp.state_names[inst.s2bar] = "s2bar";
  mdp.state_names[inst.q2] = "q2";
  for (int l = 0; l <= L; ++l) mdp.state_names[inst.s_level[l]] = "s2_" + std::to_string(l);
  mdp.state_names[inst.t_level[0][0]] = "t2_0";
  for (int l = 1; l <= L; ++l) {
    mdp.state_names[inst.t_level[l][0]] = "t2e0_" + std::to_string(l);
    mdp.state_names[inst.t_level[l][1]] = "t2e1_" + std::to_string(l);
  }

  const int rows = mdp.num_states * mdp.num_actions;
  const double c = inst.c_phi;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(rows, 2);
  auto set_phi = [&](int x, int a, double u, double v) {
    phi(mdp.row(x, a), 0) = u;
    phi(mdp.row(x, a), 1) = v;
  };
  auto alias_rest_to_zero = [&](int x) {
    for (int a = 2; a < 4; ++a) phi.row(mdp.row(x, a)) = phi.row(mdp.row(x, 0));
  };
  set_phi(inst.s1, 0, c, 0);
  set_phi(inst.s1, 1, 0, c);
  alias_rest_to_zero(inst.s1);
  set_phi(inst.t1, 0, c, c);
  set_phi(inst.t1, 1, c, -c);
  alias_rest_to_zero(inst.t1);
  set_phi(inst.s2, 0, 0, c);
  set_phi(inst.s2, 1, 0, -c);
  alias_rest_to_zero(inst.s2);
  // s2bar and q2 carry the zero feature at every action
  for (int l = 0; l <= L; ++l) {
    double z = l * eps;
    set_phi(inst.s_level[l], 0, 0, c * z);
    set_phi(inst.s_level[l], 1, c, 0);
    set_phi(inst.s_level[l], 2, 0, -c * z);
    set_phi(inst.s_level[l], 3, -c, 0);
    for (int e = 0; e < 2; ++e) {
      int x = inst.t_level[l][e];
      double sign = 1.0 - 2.0 * e;
      set_phi(x, 0, c, c * sign * z);
      set_phi(x, 1, -c, -c * sign * z);
      alias_rest_to_zero(x);
    }
  }
  mdp.features = {phi, phi};  // the same map at both steps

  Eigen::MatrixXd trans0 = Eigen::MatrixXd::Zero(rows, mdp.num_states);
  Eigen::MatrixXd trans1 = Eigen::MatrixXd::Zero(rows, mdp.num_states);
  for (int x = 0; x < mdp.num_states; ++x)
    for (int a = 0; a < 4; ++a) {
      trans0(mdp.row(x, a), inst.s2bar) = 1.0;  // overwritten for s1, t1 below
      trans1(mdp.row(x, a), inst.s2bar) = 1.0;  // last step, never used
    }
  auto s_branch = [&](int x, int a) {
    trans0.row(mdp.row(x, a)).setZero();
    for (int l = 1; l <= L; ++l) trans0(mdp.row(x, a), inst.s_level[l]) = 1.0 / L;
  };
  auto t_branch = [&](int x, int a) {
    trans0.row(mdp.row(x, a)).setZero();
    for (int l = 1; l <= L; ++l) {
      trans0(mdp.row(x, a), inst.t_level[l - bits.shift[l - 1][0]][0]) += 1.0 / (2.0 * L);
      trans0(mdp.row(x, a), inst.t_level[l - bits.shift[l - 1][1]][1]) += 1.0 / (2.0 * L);
    }
  };
  s_branch(inst.s1, 0);
  s_branch(inst.s1, 2);
  s_branch(inst.s1, 3);
  // (s1, 1) keeps its point mass on s2bar
  // at t1, actions 0, 2, 3 share action 0's branch; action 1 takes the other
  if (bits.b_init == 0) {
    s_branch(inst.t1, 0);
    s_branch(inst.t1, 2);
    s_branch(inst.t1, 3);
    t_branch(inst.t1, 1);
  } else {
    t_branch(inst.t1, 0);
    t_branch(inst.t1, 2);
    t_branch(inst.t1, 3);
    s_branch(inst.t1, 1);
  }
  mdp.transitions = {trans0, trans1};

  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd theta1(2);
  theta1 << 1.0 - 2.0 * bits.b_rew, 1.0 / inst.r_scale;
  mdp.reward_coeffs = {theta0, theta1};

  mdp.active.resize(2);
  mdp.active[0] = {inst.s1, inst.t1};
  for (int x = 0; x < mdp.num_states; ++x)
    if (x != inst.s1 && x != inst.t1) mdp.active[1].push_back(x);

  mdp.validate();
  return inst;
}

Policy reference_policy(const HardInstance& inst) {
  Eigen::VectorXd w1(2), w2(2);
  w1 << 1.0, 1.0 - 2.0 * inst.bits.b_init;
  w2 << 0.0, 1.0;
  return Policy::perturbed_linear({w1, w2}, 0.0);
}

OfflineDataset generate_hard_dataset(const HardInstance& inst, long long n, RngStream& rng) {
  if (n < 3) throw Error("hard dataset: need n >= 3");
  const long long m = n / 3;
  std::vector<PlanEntry> plan = {
      {0, inst.s1, 1, m},
      {0, inst.s1, 0, m},
      {1, inst.s_level[inst.levels], 0, m},
  };
  return generate_dataset(inst.mdp, plan, rng);
}

namespace {

// Behavioral probabilities of one policy at the probe states.
struct ProbeTable {
  double p1_t1 = 0.0;                          // pi(1 | t1)
  Eigen::VectorXd a0_t20, a1_t21;              // pi(0 | t2,0^l), pi(1 | t2,1^l)
  Eigen::VectorXd s_act1, s_act3;              // pi(1 | s2^l), pi(3 | s2^l)
};

ProbeTable probe_policy(const HardInstance& inst, const Policy& policy, int prob_draws,
                        RngStream rng, bool exact_only) {
  const int L = inst.levels;
  ProbeTable table;
  table.a0_t20.resize(L + 1);
  table.a1_t21.resize(L + 1);
  table.s_act1.resize(L + 1);
  table.s_act3.resize(L + 1);

  auto probs_at = [&](int h, int x) {
    auto exact = try_exact_probabilities(inst.mdp, policy.steps[h], h, x);
    if (exact) return inst.behavioral(x, *exact);
    if (exact_only)
      throw UnsupportedModeError("exact_policy_distribution: policy needs Monte-Carlo probes");
    Eigen::VectorXd p = action_probabilities(
        inst.mdp, policy.steps[h], h, x,
        ProbMode::mc(prob_draws, rng.derive({static_cast<std::uint64_t>(h),
                                             static_cast<std::uint64_t>(x)})));
    return inst.behavioral(x, p);
  };

  table.p1_t1 = probs_at(0, inst.t1)[1];
  for (int l = 0; l <= L; ++l) {
    table.a0_t20[l] = probs_at(1, inst.t_level[l][0])[0];
    table.a1_t21[l] = probs_at(1, inst.t_level[l][1])[1];
    Eigen::VectorXd s = probs_at(1, inst.s_level[l]);
    table.s_act1[l] = s[1];
    table.s_act3[l] = s[3];
  }
  return table;
}

PolicyDistributionEstimate aggregate_tables(const HardInstance& inst,
                                            const std::vector<ProbeTable>& tables) {
  const int L = inst.levels;
  const int trials = static_cast<int>(tables.size());
  PolicyDistributionEstimate est;
  est.trials = trials;
  est.levels = L;

  double mean_p1 = 0.0;
  for (const ProbeTable& t : tables) mean_p1 += t.p1_t1;
  mean_p1 /= trials;
  est.z0[0] = mean_p1;        // candidate b_init = 0: pi(1 | t1)
  est.z0[1] = 1.0 - mean_p1;  // candidate b_init = 1: pi(0 | t1)
  est.b_init = (est.z0[0] >= 0.5) ? 0 : 1;
  const double z0 = est.z0[est.b_init];

  est.eta_bar = Eigen::VectorXd::Zero(L + 1);
  est.gamma_bar = Eigen::VectorXd::Zero(L + 1);
  est.rho = Eigen::VectorXd::Zero(L + 1);
  est.rho0 = Eigen::VectorXd::Zero(L + 1);
  est.rho1 = Eigen::VectorXd::Zero(L + 1);
  for (const ProbeTable& t : tables) {
    double weight = (est.b_init == 0) ? t.p1_t1 : 1.0 - t.p1_t1;  // pi(1-b_init | t1)
    for (int l = 0; l <= L; ++l) {
      est.eta_bar[l] += weight * (t.a0_t20[l] - t.a1_t21[l]);
      est.gamma_bar[l] += (1.0 - weight) * (t.s_act1[l] - t.s_act3[l]);
      est.rho0[l] += weight * t.a0_t20[l];
      est.rho1[l] += weight * t.a1_t21[l];
    }
  }
  est.eta_bar /= trials;
  est.gamma_bar /= trials;
  est.rho0 /= trials * z0;
  est.rho1 /= trials * z0;
  est.rho = est.rho0 + est.rho1;
  return est;
}

}  // namespace

PolicyDistributionEstimate estimate_policy_distribution(const AlgorithmFn& algorithm,
                                                        const HardInstance& instance_template,
                                                        long long n, int trials,
                                                        const ProbeOptions& opts,
                                                        RngStream rng) {
  if (trials < 1) throw Error("estimate_policy_distribution: trials must be >= 1");
  std::function<ProbeTable(int)> one_trial = [&](int trial) {
    RngStream local = rng.derive({0xd157u, static_cast<std::uint64_t>(trial)});
    RngStream data_rng = local.derive(1);
    OfflineDataset data = generate_hard_dataset(instance_template, n, data_rng);
    Policy out = algorithm(instance_template.mdp, data, trial, local.derive(2));
    return probe_policy(instance_template, out, opts.prob_draws, local.derive(3), false);
  };
  std::vector<ProbeTable> tables = parallel_map<ProbeTable>(trials, opts.threads, one_trial);
  return aggregate_tables(instance_template, tables);
}

PolicyDistributionEstimate exact_policy_distribution(const HardInstance& instance_template,
                                                     const Policy& output) {
  std::vector<ProbeTable> tables = {
      probe_policy(instance_template, output, 0, RngStream(0), true)};
  return aggregate_tables(instance_template, tables);
}

AdversarialChoice adversarial_b(const PolicyDistributionEstimate& est, double eps) {
  const int L = levels_from_eps(eps);
  if (est.levels != L) throw Error("adversarial_b: estimate levels do not match eps");
  const double sqeps = 1.0 / static_cast<double>(L);

  AdversarialChoice choice;
  choice.bits = HardBits::zeros(L);
  choice.bits.b_init = est.b_init;

  double sum1 = 0.0;
  for (int l = 1; l <= L; ++l) sum1 += est.eta_bar[l] + est.gamma_bar[l];
  choice.margin_case1 = std::abs(sum1) / L - sqeps / 10.0;

  double sum2 = 0.0;
  for (int l = L / 2; l <= L; ++l) sum2 += est.rho[l] - 1.0;
  choice.margin_case2 = L / 4.0 - sum2;

  double s_plus[2] = {0.0, 0.0};
  for (int e = 0; e < 2; ++e) {
    const Eigen::VectorXd& rho_e = (e == 0) ? est.rho0 : est.rho1;
    for (int l = 1; l <= L; ++l) s_plus[e] += std::max(0.0, rho_e[l] - rho_e[l - 1]);
  }
  const int e_star = (s_plus[0] >= s_plus[1]) ? 0 : 1;
  choice.margin_case3 = s_plus[e_star] - sqeps / 4.0;

  const int b_rew_sign_rule = (sum1 < 0.0) ? 0 : 1;
  if (choice.margin_case1 > 0.0) {
    choice.case_id = 1;
    choice.bits.b_rew = b_rew_sign_rule;
    return choice;
  }
  bool case2 = choice.margin_case2 >= 0.0;
  bool case3 = choice.margin_case3 >= 0.0;
  if (!case2 && !case3) {
    // sampling noise squeezed both predicates; take the larger margin
    choice.noise_flagged = true;
    case2 = choice.margin_case2 >= choice.margin_case3;
  }
  if (case2) {
    choice.case_id = 2;
    choice.bits.b_rew = b_rew_sign_rule;
    return choice;
  }
  choice.case_id = 3;
  choice.bits.b_rew = e_star;
  const Eigen::VectorXd& rho_e = (e_star == 0) ? est.rho0 : est.rho1;
  for (int l = 1; l <= L; ++l)
    if (rho_e[l] - rho_e[l - 1] >= 0.0) choice.bits.shift[l - 1][e_star] = 1;
  return choice;
}

GapResult evaluate_gap(const AlgorithmFn& algorithm, double eps, long long n,
                       const GapOptions& opts, RngStream rng) {
  const int L = levels_from_eps(eps);
  GapResult result;
  result.regime_warning = 1.0 / std::sqrt(static_cast<double>(n)) >= 1.0 / L;
  result.trials_estimate = opts.trials_estimate;
  result.trials_holdout = opts.trials_holdout;

  HardInstance tmpl = build_instance(eps, HardBits::zeros(L));
  ProbeOptions probe_opts;
  probe_opts.prob_draws = opts.prob_draws;
  probe_opts.threads = opts.threads;
  PolicyDistributionEstimate est = estimate_policy_distribution(
      algorithm, tmpl, n, opts.trials_estimate, probe_opts, rng.derive(0xe5u));

  AdversarialChoice choice = adversarial_b(est, eps);
  result.case_id = choice.case_id;
  result.bits = choice.bits;
  result.noise_flagged = choice.noise_flagged;

  HardInstance inst = build_instance(eps, choice.bits);
  result.v_reference =
      exact_policy_value(inst.mdp, reference_policy(inst)).value_at_initial(inst.mdp);
  result.threshold = inst.c_phi / (40.0 * L);

  RngStream holdout = rng.derive(0x401du);
  std::function<double(int)> one_trial = [&](int trial) {
    RngStream local = holdout.derive(static_cast<std::uint64_t>(trial));
    RngStream data_rng = local.derive(1);
    OfflineDataset data = generate_hard_dataset(inst, n, data_rng);
    Policy out = algorithm(tmpl.mdp, data, opts.trials_estimate + trial, local.derive(2));
    EvalOptions eval = EvalOptions::monte_carlo(opts.eval_mc_draws, local.derive(3));
    return exact_policy_value(inst.mdp, out, eval).value_at_initial(inst.mdp);
  };
  std::vector<double> values =
      parallel_map<double>(opts.trials_holdout, opts.threads, one_trial);

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = values.size() > 1 ? var / (values.size() - 1.0) : 0.0;

  result.mean_v_algorithm = mean;
  result.std_err = std::sqrt(var / values.size());
  result.gap = result.v_reference - mean;
  return result;
}

GapResult evaluate_gap_deterministic(const Policy& output, double eps) {
  const int L = levels_from_eps(eps);
  HardInstance tmpl = build_instance(eps, HardBits::zeros(L));
  PolicyDistributionEstimate est = exact_policy_distribution(tmpl, output);
  AdversarialChoice choice = adversarial_b(est, eps);

  HardInstance inst = build_instance(eps, choice.bits);
  GapResult result;
  result.case_id = choice.case_id;
  result.bits = choice.bits;
  result.noise_flagged = choice.noise_flagged;
  result.v_reference =
      exact_policy_value(inst.mdp, reference_policy(inst)).value_at_initial(inst.mdp);
  result.mean_v_algorithm = exact_policy_value(inst.mdp, output).value_at_initial(inst.mdp);
  result.gap = result.v_reference - result.mean_v_algorithm;
  result.threshold = inst.c_phi / (40.0 * L);
  return result;
}

}  // namespace lorl
