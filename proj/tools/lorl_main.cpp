#include <CLI11.hpp>

#include <lorl/actor.hpp>
#include <lorl/dataset.hpp>
#include <lorl/evaluate.hpp>
#include <lorl/instances.hpp>
#include <lorl/lower_bound.hpp>
#include <lorl/parallel.hpp>
#include <lorl/serialize.hpp>
#include <lorl/structural.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "exp_config.hpp"

namespace {

using namespace lorl;
using cli::ExperimentConfig;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
  std::uint64_t seed = 20240601;
  int threads = 0;
  std::string out;
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Master seed; every draw derives from it");
  cmd->add_option("--threads", opts.threads, "Worker threads (0 = hardware)");
  cmd->add_option("--out", opts.out, "Output CSV path (default: stdout)");
  cmd->add_option("--config", opts.config_file, "key = value config file");
  cmd->add_option("--set", opts.overrides, "Override a config entry, key=value");
}

// defaults < config file < --set overrides < dedicated flags (applied by caller)
ExperimentConfig load_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_file.empty()) cfg = ExperimentConfig::parse_file(opts.config_file);
  for (const std::string& kv : opts.overrides) cfg.apply_override(kv);
  return cfg;
}

struct OutputFile {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit OutputFile(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw Error("cannot open output file: " + path);
    os = &file;
  }
};

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

void run_verify_checks(const std::string& only, std::uint64_t seed,
                       std::vector<StructuralCheckRow>& rows) {
  auto wanted = [&](const std::string& name) {
    return only.empty() || name.find(only) != std::string::npos;
  };

  if (wanted("softmax-counterexample")) {
    CounterexampleReport rep = softmax_counterexample();
    rows.push_back({"softmax-counterexample/ibe", rep.measured_eps_be, 1e-9,
                    rep.measured_eps_be <= 1e-9});
    rows.push_back({"softmax-counterexample/certificate", rep.certificate_residual, 1e-12,
                    rep.certificate_residual <= 1e-12});
    double gap_err = std::abs(rep.gap - 0.29803174072948346);
    rows.push_back({"softmax-counterexample/gap", gap_err, 1e-6, gap_err <= 1e-6});
  }

  if (wanted("backup-linear")) {
    FeatureMdp mdp = absmax_counterexample_mdp();
    Eigen::VectorXd w(1);
    w << 0.8;
    BackupFitReport lin = fit_linear_backup(mdp, 0, StepPolicy{PerturbedLinear{w, 0.5}},
                                            {w, -w}, 0.0, 1.0, 0, RngStream(seed));
    rows.push_back({"backup-linear/perturbed", lin.max_residual, 1e-9,
                    lin.max_residual <= 1e-9});
    BackupFitReport soft = fit_linear_backup(
        mdp, 0, StepPolicy{SoftmaxPolicy{Eigen::VectorXd::Ones(1), 1.0}},
        {Eigen::VectorXd::Ones(1)}, 0.0, 1.0, 0, RngStream(seed));
    rows.push_back({"backup-linear/softmax-breaks", soft.max_residual, 0.14,
                    soft.max_residual >= 0.14});
  }

  if (wanted("smoothed-gradient")) {
    RngStream rng(seed ^ 0x5117);
    for (int k = 0; k < 2; ++k) {
      // small random instance, d = 2, four actions
      FeatureMdp mdp;
      RngStream make = rng.derive(k);
      const int X = 4, A = 4;
      mdp.horizon = 2;
      mdp.num_states = X;
      mdp.num_actions = A;
      mdp.dim = 2;
      mdp.initial_state = 0;
      for (int h = 0; h < 2; ++h) {
        Eigen::MatrixXd phi(X * A, 2), trans(X * A, X);
        for (int r = 0; r < X * A; ++r) {
          Eigen::VectorXd v = make.standard_normal_vector(2);
          phi.row(r) = (0.9 * make.uniform01() / v.norm()) * v;
          for (int y = 0; y < X; ++y) trans(r, y) = -std::log(1.0 - make.uniform01());
          trans.row(r) /= trans.row(r).sum();
        }
        mdp.features.push_back(phi);
        mdp.transitions.push_back(trans);
        mdp.reward_coeffs.push_back(Eigen::VectorXd::Zero(2));
      }
      mdp.validate();

      RngStream probe = rng.derive(100 + k);
      Eigen::VectorXd w = probe.standard_normal_vector(2);
      SmoothedGradientReport rep =
          smoothed_gradient_check(mdp, 0, k % 4, k % 4, w, 0.5, 1e-3, 200000, probe);
      rows.push_back({"smoothed-gradient/" + std::to_string(k), rep.rel_error, 0.02,
                      rep.rel_error <= 0.02});
    }
  }

  if (wanted("gaussian-stability")) {
    RngStream rng(seed ^ 0x57ab);
    double worst = -1.0;
    bool strict = true;
    for (int k = 0; k < 100; ++k) {
      int d = 1 + static_cast<int>(rng.uniform01() * 5);
      double eta = 0.05 + 2.0 * rng.uniform01();
      Eigen::VectorXd v = rng.standard_normal_vector(d);
      StabilityCheck chk = gaussian_stability_check(eta, v);
      worst = std::max(worst, chk.tv_distance - chk.bound);
      strict = strict && (chk.bound - chk.tv_distance > 0.0);
    }
    rows.push_back({"gaussian-stability/tv-under-bound", worst, 0.0, worst <= 0.0 && strict});
  }

  if (wanted("hard-instance")) {
    const double eps = 1.0 / 16.0;
    HardInstance inst = build_instance(eps, HardBits::zeros(4));
    BoundedBallSpec spec;
    spec.bound_b = std::sqrt(2.0);
    double measured = measure_inherent_bellman_error(inst.mdp, spec, RngStream(seed ^ 0x1b));
    rows.push_back({"hard-instance/ibe", measured, 2.0 * eps + 1e-9,
                    measured <= 2.0 * eps + 1e-9});
    double v = exact_policy_value(inst.mdp, reference_policy(inst)).value_at_initial(inst.mdp);
    double v_err = std::abs(v - inst.c_phi * 5.0 * eps / 32.0);
    rows.push_back({"hard-instance/reference-value", v_err, 1e-12, v_err <= 1e-12});

    RngStream data_rng(seed ^ 0x2c);
    OfflineDataset data = generate_hard_dataset(inst, 1200, data_rng);
    double cov = coverage_parameter(data, reference_policy(inst), inst.mdp, 0.0);
    double cov_expected = std::sqrt(6.0) + std::sqrt(3.0) * 5.0 / 8.0;
    rows.push_back({"hard-instance/coverage", std::abs(cov - cov_expected), 1e-9,
                    std::abs(cov - cov_expected) <= 1e-9});
  }

  if (wanted("ibe-trivial")) {
    FeatureMdp tiny;
    tiny.horizon = 2;
    tiny.num_states = 1;
    tiny.num_actions = 1;
    tiny.dim = 1;
    tiny.initial_state = 0;
    tiny.features = {Eigen::MatrixXd::Ones(1, 1) * 0.5, Eigen::MatrixXd::Ones(1, 1) * 0.5};
    tiny.transitions = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    tiny.reward_coeffs = {Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
    tiny.validate();
    BoundedBallSpec spec;
    double v = measure_inherent_bellman_error(tiny, spec, RngStream(seed));
    rows.push_back({"ibe-trivial/single-cell", v, 1e-12, v <= 1e-12});
  }
}

int cmd_verify(const CommonOpts& common, const std::string& only, const std::string& mdp_path) {
  ExperimentConfig cfg = load_config(common);
  cfg.set("command", std::string("verify"));
  cfg.set("seed", static_cast<long long>(common.seed));
  if (!only.empty()) cfg.set("only", only);
  if (!mdp_path.empty()) cfg.set("mdp_file", mdp_path);

  std::vector<StructuralCheckRow> rows;
  if (!mdp_path.empty()) {
    std::ifstream in(mdp_path);
    if (!in) throw Error("cannot open mdp file: " + mdp_path);
    FeatureMdp mdp = read_mdp(in);  // throws ParseError naming the line
    for (const std::string& note : mdp.soft_warnings())
      std::cerr << "note: " << mdp_path << ": " << note << '\n';
    rows.push_back({"file-validate", 0.0, 0.0, true});
  }
  run_verify_checks(only, common.seed, rows);
  if (rows.empty()) throw Error("verify: no checks match --only " + only);

  OutputFile out(common.out);
  cli::write_config_comment(*out.os, cfg);
  write_structural_csv(*out.os, rows);

  bool all_ok = true;
  for (const StructuralCheckRow& row : rows) {
    all_ok = all_ok && row.pass;
    std::cerr << (row.pass ? "pass " : "FAIL ") << row.name << " residual=" << row.residual
              << " bound=" << row.bound << '\n';
  }
  return all_ok ? kExitPass : kExitCheckFailure;
}

// ---------------------------------------------------------------------------
// run-upper
// ---------------------------------------------------------------------------

struct UpperInstance {
  FeatureMdp mdp;
  double bound_b = 1.0;
};

UpperInstance resolve_instance(const std::string& name, double gap, double bound_b_flag) {
  UpperInstance inst;
  if (name == "bandit2") {
    inst.mdp = two_arm_bandit(gap);
    inst.bound_b = std::sqrt(2.0);
  } else if (name == "tabular") {
    inst.mdp = one_hot_instance(2, 2, 2, 91);
    inst.bound_b = std::sqrt(static_cast<double>(inst.mdp.dim));
  } else if (name.rfind("file:", 0) == 0) {
    std::string path = name.substr(5);
    std::ifstream in(path);
    if (!in) throw Error("cannot open mdp file: " + path);
    inst.mdp = read_mdp(in);
    if (bound_b_flag <= 0.0)
      throw Error("run-upper: file instances need --set bound_b=... for the norm bound");
    inst.bound_b = bound_b_flag;
  } else {
    throw Error("unknown instance: " + name + " (expected bandit2, tabular, or file:PATH)");
  }
  if (bound_b_flag > 0.0) inst.bound_b = bound_b_flag;
  return inst;
}

std::vector<PlanEntry> uniform_cell_plan(const FeatureMdp& mdp, long long n) {
  std::vector<PlanEntry> plan;
  long long cells = 0;
  for (int h = 0; h < mdp.horizon; ++h)
    cells += static_cast<long long>(mdp.active_states(h).size()) * mdp.num_actions;
  long long base = n / cells, extra = n % cells;
  for (int h = 0; h < mdp.horizon; ++h)
    for (int x : mdp.active_states(h))
      for (int a = 0; a < mdp.num_actions; ++a) {
        long long count = base + (extra > 0 ? 1 : 0);
        if (extra > 0) --extra;
        plan.push_back({h, x, a, count});
      }
  return plan;
}

int cmd_run_upper(const CommonOpts& common, ExperimentConfig cfg) {
  const std::string instance = cfg.has("instance") ? cfg.get("instance") : "bandit2";
  const double gap = cfg.get_double("gap", 0.3);
  UpperInstance inst = resolve_instance(instance, gap, cfg.get_double("bound_b", 0.0));

  std::vector<long long> n_grid;
  {
    std::istringstream grid(cfg.has("n_grid") ? cfg.get("n_grid") : "300,1200,4800");
    std::string tok;
    while (std::getline(grid, tok, ',')) n_grid.push_back(std::stoll(tok));
  }
  const int seeds = static_cast<int>(cfg.get_int("seeds", 20));
  const int eval_mc = static_cast<int>(cfg.get_int("eval_mc", 0));

  cfg.set("command", std::string("run-upper"));
  cfg.set("instance", instance);
  cfg.set("seed", static_cast<long long>(common.seed));
  cfg.set("seeds", static_cast<long long>(seeds));

  auto [pi_star, v_table] = optimal_policy(inst.mdp);
  const double v_star = v_table.value_at_initial(inst.mdp);

  struct Row {
    long long n = 0;
    int seed = 0;
    double subopt = 0, coverage = 0, runtime = 0;
  };
  std::vector<std::pair<long long, int>> jobs;
  for (long long n : n_grid)
    for (int seed = 0; seed < seeds; ++seed) jobs.emplace_back(n, seed);

  RngStream master(common.seed);
  std::function<Row(int)> one = [&](int j) {
    auto [n, seed] = jobs[j];
    auto start = std::chrono::steady_clock::now();
    RngStream local = master.derive({static_cast<std::uint64_t>(n),
                                     static_cast<std::uint64_t>(seed)});
    RngStream data_rng = local.derive(1);
    OfflineDataset data = generate_dataset(inst.mdp, uniform_cell_plan(inst.mdp, n), data_rng);

    ParamInputs in;
    in.eps_final = cfg.get_double("eps_final", 0.1);
    in.delta = cfg.get_double("delta", 0.05);
    in.n = data.n();
    in.d = inst.mdp.dim;
    in.H = inst.mdp.horizon;
    in.B = inst.bound_b;
    in.eps_be = cfg.get_double("eps_be", 0.0);
    in.T_cap = cfg.get_int("t_cap", 2000);
    in.const_alpha = cfg.get_double("const_alpha", 1.0);
    in.const_zeta = cfg.get_double("const_zeta", 1.0);
    ActorRun run = run_actor(inst.mdp, data, default_params(in), local.derive(2));

    EvalOptions eval = eval_mc > 0 ? EvalOptions::monte_carlo(eval_mc, local.derive(3))
                                   : EvalOptions::exact();
    double v_mix = mixture_value(inst.mdp, run, eval);
    double cov = coverage_parameter(data, pi_star, inst.mdp, 0.0);
    return Row{n, seed, v_star - v_mix, cov, elapsed_seconds(start)};
  };
  std::vector<Row> rows =
      parallel_map<Row>(static_cast<int>(jobs.size()), common.threads, one);

  OutputFile out(common.out);
  cli::write_config_comment(*out.os, cfg);
  *out.os << "n,seed,suboptimality,coverage,runtime_s\n";
  for (const Row& row : rows)
    *out.os << row.n << ',' << row.seed << ',' << format_double(row.subopt) << ','
            << format_double(row.coverage) << ',' << format_double(row.runtime) << '\n';
  return kExitPass;
}

// ---------------------------------------------------------------------------
// run-lower
// ---------------------------------------------------------------------------

Policy constant_reference_policy() {
  Eigen::VectorXd w1(2), w2(2);
  w1 << 1.0, 1.0;
  w2 << 0.0, 1.0;
  return Policy::perturbed_linear({w1, w2}, 0.0);
}

Policy naive_greedy_policy() {
  Eigen::VectorXd w(2);
  w << 0.0, 1.0;
  return Policy::perturbed_linear({w, w}, 0.0);
}

std::string shifts_to_string(const HardBits& bits) {
  std::string out;
  for (const auto& s : bits.shift) {
    out += std::to_string(s[0]);
    out += std::to_string(s[1]);
  }
  return out;
}

int cmd_run_lower(const CommonOpts& common, ExperimentConfig cfg) {
  const double eps = admissible_eps(cfg.get_double("eps", 1.0 / 16.0));
  const long long n = cfg.get_int("n", 3000);
  const std::string algorithm =
      cfg.has("algorithm") ? cfg.get("algorithm") : "builtin-actor";

  cfg.set("command", std::string("run-lower"));
  cfg.set("algorithm", algorithm);
  cfg.set("eps", eps);
  cfg.set("n", n);
  cfg.set("seed", static_cast<long long>(common.seed));

  GapResult result;
  if (algorithm == "constant-ref") {
    result = evaluate_gap_deterministic(constant_reference_policy(), eps);
  } else if (algorithm == "naive-greedy") {
    result = evaluate_gap_deterministic(naive_greedy_policy(), eps);
  } else if (algorithm == "uniform") {
    int levels = static_cast<int>(std::lround(1.0 / std::sqrt(eps)));
    HardInstance tmpl = build_instance(eps, HardBits::zeros(levels));
    result = evaluate_gap_deterministic(Policy::uniform_tabular(tmpl.mdp), eps);
  } else if (algorithm == "builtin-actor" || algorithm == "external") {
    GapOptions opts;
    opts.trials_estimate = static_cast<int>(cfg.get_int("trials_est", 50));
    opts.trials_holdout = static_cast<int>(cfg.get_int("trials_holdout", 50));
    opts.prob_draws = static_cast<int>(cfg.get_int("prob_draws", 20000));
    opts.eval_mc_draws = static_cast<int>(cfg.get_int("eval_mc", 20000));
    opts.threads = common.threads;

    AlgorithmFn algo;
    if (algorithm == "builtin-actor") {
      ParamInputs base;
      base.eps_final = cfg.get_double("eps_final", 0.25);
      base.delta = cfg.get_double("delta", 0.05);
      base.d = 2;
      base.H = 2;
      base.B = std::sqrt(2.0);
      base.eps_be = cfg.get_double("eps_be_assumed", 2.0 * eps);
      base.T_cap = cfg.get_int("t_cap", 64);
      base.const_alpha = cfg.get_double("const_alpha", 1.0);
      base.const_zeta = cfg.get_double("const_zeta", 1.0);
      algo = [base](const FeatureMdp& mdp, const OfflineDataset& data, int, RngStream rng) {
        ParamInputs in = base;
        in.n = data.n();
        ActorRun run = run_actor(mdp, data, default_params(in), rng);
        return run.sampled_policy;
      };
    } else {
      std::string dir = cfg.has("policy_dir") ? cfg.get("policy_dir") : "";
      if (dir.empty()) throw Error("run-lower: external algorithm needs --set policy_dir=DIR");
      algo = [dir](const FeatureMdp&, const OfflineDataset&, int trial, RngStream) {
        std::string path = dir + "/policy_" + std::to_string(trial) + ".txt";
        std::ifstream in(path);
        if (!in) throw Error("cannot open policy file: " + path);
        return read_policy(in);
      };
    }
    result = evaluate_gap(algo, eps, n, opts, RngStream(common.seed));
  } else {
    throw Error("unknown algorithm: " + algorithm +
                " (expected builtin-actor, naive-greedy, constant-ref, uniform, external)");
  }

  if (result.regime_warning)
    std::cerr << "warning: 1/sqrt(n) >= sqrt(eps); the spacing-driven gap regime "
                 "does not apply at this n\n";

  const bool pass = result.gap >= result.threshold - 3.0 * result.std_err;
  OutputFile out(common.out);
  cli::write_config_comment(*out.os, cfg);
  *out.os << "algorithm,eps,n,case,b_init,b_rew,shifts,gap,std_err,threshold,pass\n";
  *out.os << algorithm << ',' << format_double(eps) << ',' << n << ',' << result.case_id << ','
          << result.bits.b_init << ',' << result.bits.b_rew << ','
          << shifts_to_string(result.bits) << ',' << format_double(result.gap) << ','
          << format_double(result.std_err) << ',' << format_double(result.threshold) << ','
          << (pass ? 1 : 0) << '\n';
  std::cerr << "case " << result.case_id << " gap=" << result.gap
            << " threshold=" << result.threshold << " std_err=" << result.std_err
            << (pass ? " pass" : " FAIL") << '\n';
  return pass ? kExitPass : kExitCheckFailure;
}

// ---------------------------------------------------------------------------
// ftpl-bench
// ---------------------------------------------------------------------------

int cmd_ftpl_bench(const CommonOpts& common, ExperimentConfig cfg) {
  const int rounds = static_cast<int>(cfg.get_int("rounds", 200));
  const int mc = static_cast<int>(cfg.get_int("mc", 20000));
  const double omega = cfg.get_double("omega", 1.0);
  const double g_scale = cfg.get_double("reward_scale", 0.8);
  const int d = 2;
  double eta = cfg.get_double("eta", 0.0);
  if (eta <= 0.0)
    eta = g_scale * std::sqrt(static_cast<double>(rounds)) * std::pow(d, -0.25);

  cfg.set("command", std::string("ftpl-bench"));
  cfg.set("rounds", static_cast<long long>(rounds));
  cfg.set("eta", eta);
  cfg.set("seed", static_cast<long long>(common.seed));

  Eigen::MatrixXd actions(4, d);
  actions << 1, 0, -1, 0, 0, 1, 0, -1;

  std::vector<std::pair<std::string, std::vector<Eigen::VectorXd>>> adversaries;
  {
    adversaries.emplace_back("zero",
                             std::vector<Eigen::VectorXd>(rounds, Eigen::VectorXd::Zero(d)));

    Eigen::VectorXd c(d);
    c << g_scale, 0.0;
    adversaries.emplace_back("constant", std::vector<Eigen::VectorXd>(rounds, c));

    std::vector<Eigen::VectorXd> alt;
    for (int t = 0; t < rounds; ++t) {
      Eigen::VectorXd w(d);
      w << (t % 2 == 0 ? g_scale : -g_scale), 0.0;
      alt.push_back(w);
    }
    adversaries.emplace_back("alternating", alt);

    RngStream rng(common.seed ^ 0xadu);
    const int num_random = static_cast<int>(cfg.get_int("num_random", 7));
    for (int k = 0; k < num_random; ++k) {
      std::vector<Eigen::VectorXd> seq;
      RngStream local = rng.derive(k);
      for (int t = 0; t < rounds; ++t) {
        Eigen::VectorXd w = local.standard_normal_vector(d);
        seq.push_back(g_scale * w / std::max(1.0, w.norm()));
      }
      adversaries.emplace_back("random-" + std::to_string(k), seq);
    }
  }

  OutputFile out(common.out);
  cli::write_config_comment(*out.os, cfg);
  *out.os << "adversary,rounds,regret,bound,mc_std_err,pass\n";
  bool all_ok = true;
  RngStream master(common.seed);
  for (size_t k = 0; k < adversaries.size(); ++k) {
    const auto& [name, seq] = adversaries[k];
    RegretResult res = ftpl_regret_harness(actions, seq, omega, eta, mc, master.derive(k));
    // Monte-Carlo error of the earned sum: each play averages mc draws
    double var = 0.0;
    for (const Eigen::VectorXd& w : seq) var += w.squaredNorm() / mc;
    double se = std::sqrt(var);
    bool pass = res.regret <= res.bound + 3.0 * se;
    all_ok = all_ok && pass;
    *out.os << name << ',' << rounds << ',' << format_double(res.regret) << ','
            << format_double(res.bound) << ',' << format_double(se) << ',' << (pass ? 1 : 0)
            << '\n';
  }
  return all_ok ? kExitPass : kExitCheckFailure;
}

int cmd_check_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open csv: " + path);
  std::string message;
  bool ok = cli::check_csv_config_hash(in, &message);
  std::cerr << message << '\n';
  return ok ? kExitPass : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline linear RL: pessimistic actor-critic, structural checks, and "
               "hard-instance experiments"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string only, mdp_path, csv_path;

  CLI::App* verify = app.add_subcommand("verify", "Run the structural check suite");
  add_common(verify, common);
  verify->add_option("--only", only, "Run only checks whose name contains this substring");
  verify->add_option("--mdp", mdp_path, "Also parse and validate an MDP file");

  CLI::App* upper = app.add_subcommand("run-upper", "Actor suboptimality across an n-grid");
  add_common(upper, common);
  std::string u_instance, u_ngrid;
  long long u_seeds = -1, u_tcap = -1;
  upper->add_option("--instance", u_instance, "bandit2 | tabular | file:PATH");
  upper->add_option("--n-grid", u_ngrid, "Comma-separated dataset sizes");
  upper->add_option("--seeds", u_seeds, "Seeds per grid point");
  upper->add_option("--t-cap", u_tcap, "Cap on actor rounds");

  CLI::App* lower = app.add_subcommand("run-lower", "Adversarial value-gap evaluation");
  add_common(lower, common);
  std::string l_algorithm;
  double l_eps = -1.0;
  long long l_n = -1, l_te = -1, l_th = -1, l_tcap = -1;
  lower->add_option("--algorithm", l_algorithm,
                    "builtin-actor | naive-greedy | constant-ref | uniform | external");
  lower->add_option("--eps", l_eps, "Level spacing (rounded down to an admissible value)");
  lower->add_option("--n", l_n, "Dataset size");
  lower->add_option("--trials-est", l_te, "Trials for the distribution estimate");
  lower->add_option("--trials-holdout", l_th, "Held-out trials for the gap");
  lower->add_option("--t-cap", l_tcap, "Cap on actor rounds (builtin-actor)");

  CLI::App* bench = app.add_subcommand("ftpl-bench", "Perturbed-leader regret harness");
  add_common(bench, common);
  long long b_rounds = -1;
  bench->add_option("--rounds", b_rounds, "Rounds per adversary");

  CLI::App* check = app.add_subcommand("check-csv", "Re-verify a CSV's config hash");
  check->add_option("file", csv_path, "CSV produced by another subcommand")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(common, only, mdp_path);
    if (upper->parsed()) {
      ExperimentConfig cfg = load_config(common);
      if (!u_instance.empty()) cfg.set("instance", u_instance);
      if (!u_ngrid.empty()) cfg.set("n_grid", u_ngrid);
      if (u_seeds >= 0) cfg.set("seeds", u_seeds);
      if (u_tcap >= 0) cfg.set("t_cap", u_tcap);
      return cmd_run_upper(common, cfg);
    }
    if (lower->parsed()) {
      ExperimentConfig cfg = load_config(common);
      if (!l_algorithm.empty()) cfg.set("algorithm", l_algorithm);
      if (l_eps > 0.0) cfg.set("eps", l_eps);
      if (l_n >= 0) cfg.set("n", l_n);
      if (l_te >= 0) cfg.set("trials_est", l_te);
      if (l_th >= 0) cfg.set("trials_holdout", l_th);
      if (l_tcap >= 0) cfg.set("t_cap", l_tcap);
      return cmd_run_lower(common, cfg);
    }
    if (bench->parsed()) {
      ExperimentConfig cfg = load_config(common);
      if (b_rounds >= 0) cfg.set("rounds", b_rounds);
      return cmd_ftpl_bench(common, cfg);
    }
    if (check->parsed()) return cmd_check_csv(csv_path);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
