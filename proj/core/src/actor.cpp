#include "lorl/actor.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "lorl/evaluate.hpp"
#include "lorl/serialize.hpp"

namespace lorl {

double zeta_bound(double eps_be, int d, double sigma, double c) {
  if (eps_be <= 0.0) return 0.0;
  if (sigma <= 0.0) throw Error("zeta_bound: sigma must be positive when eps_be > 0");
  double log_arg = d / (eps_be * sigma);
  double root = std::sqrt(std::max(0.0, d * std::log(log_arg)));
  return c * eps_be * std::pow(d, 1.5) * (root + 1.0 / sigma);
}

ActorConfig default_params(const ParamInputs& in) {
  if (in.n <= 0 || in.d <= 0 || in.H <= 0 || in.B <= 0.0)
    throw Error("default_params: n, d, H, B must be positive");
  if (!(in.eps_final > 0.0 && in.eps_final < 1.0) || !(in.delta > 0.0 && in.delta < 1.0))
    throw Error("default_params: eps_final and delta must lie in (0,1)");
  if (in.eps_be < 0.0) throw Error("default_params: eps_be must be nonnegative");

  ActorConfig cfg;
  cfg.eps_final = in.eps_final;
  cfg.delta = in.delta;
  cfg.n = in.n;
  cfg.d = in.d;
  cfg.H = in.H;
  cfg.B = in.B;
  cfg.eps_be = in.eps_be;
  cfg.lambda = in.lambda;
  cfg.const_zeta = in.const_zeta;
  cfg.const_alpha = in.const_alpha;
  cfg.solver = in.solver;

  cfg.beta = in.beta.value_or(2.0 * in.B * in.H);
  double t_exact = 16.0 * cfg.beta * cfg.beta * std::sqrt(static_cast<double>(in.d)) /
                   (in.eps_final * in.eps_final);
  cfg.T_theoretical = static_cast<long long>(std::ceil(t_exact));
  cfg.T = in.T.value_or(std::min(cfg.T_theoretical, in.T_cap));
  if (cfg.T <= 0) throw Error("default_params: T must be positive");

  cfg.eps_apx = in.eps_apx.value_or(1.0 / std::sqrt(static_cast<double>(in.n)));
  double t_dbl = static_cast<double>(cfg.T);
  cfg.eta = in.eta.value_or(cfg.beta * std::max(std::sqrt(t_dbl) * std::pow(in.d, -0.25),
                                                t_dbl * std::sqrt(in.eps_be)));
  cfg.sigma = in.sigma.value_or(cfg.eta / (t_dbl * cfg.beta));
  cfg.zeta = zeta_bound(in.eps_be, in.d, cfg.sigma, in.const_zeta);
  cfg.alpha = in.alpha.value_or(
      4.0 * cfg.beta * cfg.zeta * std::sqrt(static_cast<double>(in.n)) +
      in.const_alpha * cfg.beta * in.d *
          std::sqrt(std::log(in.d * static_cast<double>(in.n) * cfg.beta /
                             (cfg.sigma * in.delta))));
  return cfg;
}

Policy ActorRun::policy_at(int t) const {
  std::vector<Eigen::VectorXd> theta = iters.at(t).theta;
  return Policy::perturbed_linear(std::move(theta), eta);
}

ActorRun run_actor(const FeatureMdp& mdp, const OfflineDataset& data, const ActorConfig& cfg,
                   RngStream rng) {
  if (data.n() == 0) throw Error("run_actor: dataset is empty");
  if (cfg.d != mdp.dim || cfg.H != mdp.horizon)
    throw DimensionError("run_actor: config dimensions do not match the MDP");

  ActorRun run;
  run.eta = cfg.eta;
  run.iters.reserve(cfg.T);

  std::vector<Eigen::VectorXd> theta(mdp.horizon, Eigen::VectorXd::Zero(mdp.dim));
  const double delta_critic = cfg.delta / (2.0 * static_cast<double>(cfg.T));

  for (long long t = 0; t < cfg.T; ++t) {
    ActorIteration iter;
    iter.theta = theta;
    Policy pi_t = Policy::perturbed_linear(theta, cfg.eta);

    CriticParams params;
    params.eps_apx = cfg.eps_apx;
    params.alpha = cfg.alpha;
    params.beta = cfg.beta;
    params.delta = delta_critic;
    params.lambda = cfg.lambda;
    params.solver = cfg.solver;

    RngStream critic_rng = rng.derive({0xac7011u, static_cast<std::uint64_t>(t)});
    CriticSolution sol;
    bool solved = false;
    for (int attempt = 0; attempt <= 3 && !solved; ++attempt) {
      try {
        CriticProblem problem = make_critic_problem(mdp, data, pi_t, params);
        sol = solve_critic(problem, critic_rng);
        solved = true;
      } catch (const InfeasibleProgramError& err) {
        if (cfg.on_infeasible == OnInfeasible::kAbort || attempt == 3) {
          std::ostringstream os;
          os << "run_actor: critic infeasible at round " << t + 1 << ": " << err.what();
          throw InfeasibleProgramError(os.str(), err.best_residual);
        }
        params.alpha *= 2.0;
        iter.alpha_inflated = true;
      }
    }
    iter.w = sol.w;
    iter.objective = sol.objective;
    for (int h = 0; h < mdp.horizon; ++h) theta[h] += sol.w[h];
    run.iters.push_back(std::move(iter));
  }

  RngStream pick = rng.derive(0x70c6u);
  run.sampled_index = static_cast<int>(pick.uniform01() * static_cast<double>(cfg.T));
  if (run.sampled_index >= cfg.T) run.sampled_index = static_cast<int>(cfg.T) - 1;
  run.sampled_policy = run.policy_at(run.sampled_index);
  return run;
}

double mixture_value(const FeatureMdp& mdp, const ActorRun& run, const EvalOptions& opts) {
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(run.iters.size()); ++t) {
    EvalOptions local = opts;
    local.stream = opts.stream.derive(static_cast<std::uint64_t>(t));
    total += exact_policy_value(mdp, run.policy_at(t), local).value_at_initial(mdp);
  }
  return total / static_cast<double>(run.iters.size());
}

void write_actor_log_csv(std::ostream& os, const ActorRun& run) {
  os << "t,objective";
  if (!run.iters.empty())
    for (int h = 0; h < static_cast<int>(run.iters[0].w.size()); ++h) os << ",w_norm_" << h + 1;
  os << ",alpha_inflated\n";
  for (int t = 0; t < static_cast<int>(run.iters.size()); ++t) {
    const ActorIteration& it = run.iters[t];
    os << t + 1 << ',' << format_double(it.objective);
    for (const Eigen::VectorXd& wh : it.w) os << ',' << format_double(wh.norm());
    os << ',' << (it.alpha_inflated ? 1 : 0) << '\n';
  }
}

Eigen::VectorXd ftpl_step(const FtplState& state, int mc_samples, RngStream& rng) {
  const int count = static_cast<int>(state.actions.rows());
  const int d = static_cast<int>(state.actions.cols());
  if (count == 0) throw Error("ftpl_step: empty action set");

  Eigen::VectorXd base = state.omega * (state.actions * state.cumulative);
  if (state.eta == 0.0) {
    int best = 0;
    for (int i = 1; i < count; ++i)
      if (base[i] > base[best]) best = i;
    return state.actions.row(best).transpose();
  }
  if (mc_samples <= 0) throw Error("ftpl_step: mc_samples must be positive");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd rho(d), scores(count);
  for (int s = 0; s < mc_samples; ++s) {
    for (int j = 0; j < d; ++j) rho[j] = state.eta * rng.normal();
    scores.noalias() = base + state.actions * rho;
    int best = 0;
    for (int i = 1; i < count; ++i)
      if (scores[i] > scores[best]) best = i;
    mean += state.actions.row(best);
  }
  return mean / static_cast<double>(mc_samples);
}

RegretResult ftpl_regret_harness(const Eigen::MatrixXd& actions,
                                 const std::vector<Eigen::VectorXd>& adversary, double omega,
                                 double eta, int mc_samples, RngStream rng) {
  if (eta <= 0.0) throw Error("ftpl_regret_harness: eta must be positive");
  if (omega <= 0.0) throw Error("ftpl_regret_harness: omega must be positive");
  const int T = static_cast<int>(adversary.size());
  const int d = static_cast<int>(actions.cols());

  FtplState state;
  state.actions = actions;
  state.cumulative = Eigen::VectorXd::Zero(d);
  state.omega = omega;
  state.eta = eta;

  RegretResult out;
  double g_bound = 0.0;
  for (int t = 0; t < T; ++t) {
    RngStream step_rng = rng.derive(static_cast<std::uint64_t>(t));
    Eigen::VectorXd play = ftpl_step(state, mc_samples, step_rng);
    out.earned += play.dot(adversary[t]);
    out.plays.push_back(std::move(play));
    state.cumulative += adversary[t];
    state.round = t + 1;
    g_bound = std::max(g_bound, adversary[t].norm());
  }
  Eigen::VectorXd totals = actions * state.cumulative;
  out.best_fixed = totals.maxCoeff();
  out.regret = out.best_fixed - out.earned;

  double d_bound = 0.0;
  for (int i = 0; i < actions.rows(); ++i) d_bound = std::max(d_bound, actions.row(i).norm());
  const double j_stab = eta * std::sqrt(static_cast<double>(d));
  const double l_stab = 1.0 / eta;
  out.bound = omega * l_stab * d_bound * g_bound * g_bound * static_cast<double>(T) +
              j_stab * d_bound / omega;
  return out;
}

}  // namespace lorl
