#include "lorl/critic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "lorl/serialize.hpp"

namespace lorl {

namespace {

// ---------------------------------------------------------------------------
// Ellipsoid projection: min ||u - v||^2 s.t. ||M u - c||_Sigma <= alpha with
// M = [I] or M = [I, -A]. Reduced to the residual y = M u - c, which solves
// (I + lambda*G*Sigma) y = (M v - c) with G = M M^T; the dual scalar lambda
// is found by safeguarded Newton on psi(lambda) = ||y||_Sigma^2 - alpha^2.
// ---------------------------------------------------------------------------

double solve_dual_scalar(const Eigen::MatrixXd& g_mat, const Eigen::MatrixXd& sigma,
                         const Eigen::VectorXd& y0, double alpha, Eigen::VectorXd& y_out) {
  const int d = static_cast<int>(y0.size());
  const Eigen::MatrixXd gs = g_mat * sigma;

  auto eval = [&](double lam, Eigen::VectorXd& y) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) + lam * gs;
    y = m.partialPivLu().solve(y0);
    return y.dot(sigma * y) - alpha * alpha;
  };

  Eigen::VectorXd y;
  double psi0 = eval(0.0, y);
  if (psi0 <= 0.0) {
    y_out = y;
    return 0.0;
  }
  double lo = 0.0, hi = 1.0;
  double psi_hi = eval(hi, y);
  int guard = 0;
  while (psi_hi > 0.0 && guard++ < 200) {
    lo = hi;
    hi *= 4.0;
    psi_hi = eval(hi, y);
  }
  double lam = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd ycur;
    double psi = eval(lam, ycur);
    if (psi > 0.0)
      lo = lam;
    else
      hi = lam;
    if (std::abs(psi) <= 1e-15 * (1.0 + alpha * alpha)) {
      y_out = ycur;
      return lam;
    }
    // Newton step with bisection fallback
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) + lam * gs;
    Eigen::VectorXd dy = -m.partialPivLu().solve(gs * ycur);
    double dpsi = 2.0 * ycur.dot(sigma * dy);
    double next = (dpsi < 0.0) ? lam - psi / dpsi : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - lam) <= 1e-16 * (1.0 + lam)) {
      y_out = ycur;
      return lam;
    }
    lam = next;
  }
  eval(lam, y_out);
  return lam;
}

// Stacked-variable description of the program.
struct Program {
  int horizon = 0;
  int dim = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<Eigen::MatrixXd> sigma;  // d x d per step
  std::vector<Eigen::MatrixXd> amat;   // A_h, zero matrix for the last step
  std::vector<Eigen::VectorXd> cvec;   // Sigma_h^{-1} sum phi r
  Eigen::VectorXd q;                   // objective vector acting on block 0
  double scale = 1.0;

  Eigen::Ref<const Eigen::VectorXd> block(const Eigen::VectorXd& w, int h) const {
    return w.segment(h * dim, dim);
  }
  Eigen::Ref<Eigen::VectorXd> block(Eigen::VectorXd& w, int h) const {
    return w.segment(h * dim, dim);
  }

  Eigen::VectorXd xi(const Eigen::VectorXd& w, int h) const {
    Eigen::VectorXd out = block(w, h) - cvec[h];
    if (h + 1 < horizon) out -= amat[h] * block(w, h + 1);
    return out;
  }

  double sig_norm(int h, const Eigen::VectorXd& v) const {
    return std::sqrt(std::max(0.0, v.dot(sigma[h] * v)));
  }

  double objective(const Eigen::VectorXd& w) const { return q.dot(block(w, 0)); }

  double max_violation(const Eigen::VectorXd& w) const {
    double worst = 0.0;
    for (int h = 0; h < horizon; ++h) {
      worst = std::max(worst, sig_norm(h, xi(w, h)) - alpha);
      worst = std::max(worst, block(w, h).norm() - beta);
    }
    return worst;
  }

  void project_ball_all(Eigen::VectorXd& w) const {
    for (int h = 0; h < horizon; ++h) {
      double n = block(w, h).norm();
      if (n > beta) block(w, h) *= beta / n;
    }
  }

  // Project the (w_h, w_{h+1}) pair (or the single last block) onto the
  // step-h ellipsoid constraint.
  void project_ellipsoid_constraint(Eigen::VectorXd& w, int h) const {
    if (h + 1 >= horizon) {
      Eigen::VectorXd y0 = block(w, h) - cvec[h];
      Eigen::VectorXd y;
      double lam = solve_dual_scalar(Eigen::MatrixXd::Identity(dim, dim), sigma[h], y0, alpha, y);
      if (lam > 0.0) block(w, h) -= lam * (sigma[h] * y);
      return;
    }
    Eigen::VectorXd y0 = xi(w, h);
    Eigen::MatrixXd g_mat =
        Eigen::MatrixXd::Identity(dim, dim) + amat[h] * amat[h].transpose();
    Eigen::VectorXd y;
    double lam = solve_dual_scalar(g_mat, sigma[h], y0, alpha, y);
    if (lam > 0.0) {
      Eigen::VectorXd sy = sigma[h] * y;
      block(w, h) -= lam * sy;
      block(w, h + 1) += lam * (amat[h].transpose() * sy);
    }
  }

  // One backward sweep of alternating projections; returns the violation
  // before the sweep.
  double pocs_sweep(Eigen::VectorXd& w) const {
    double before = max_violation(w);
    for (int h = horizon - 1; h >= 0; --h) project_ellipsoid_constraint(w, h);
    project_ball_all(w);
    return before;
  }
};

Program build_program(const CriticProblem& p) {
  const FeatureMdp& mdp = *p.mdp;
  const OfflineDataset& data = *p.data;
  Program prog;
  prog.horizon = mdp.horizon;
  prog.dim = mdp.dim;
  prog.alpha = p.params.alpha;
  prog.beta = p.params.beta;
  prog.q = p.phi1_hat;
  for (int h = 0; h < mdp.horizon; ++h) {
    Eigen::MatrixXd sig = p.params.lambda * Eigen::MatrixXd::Identity(mdp.dim, mdp.dim);
    Eigen::MatrixXd sum_phi_phihat = Eigen::MatrixXd::Zero(mdp.dim, mdp.dim);
    Eigen::VectorXd sum_phi_r = Eigen::VectorXd::Zero(mdp.dim);
    for (int i : data.step_index(h)) {
      const DataTuple& t = data.tuples[i];
      Eigen::VectorXd phi = mdp.feature(t.h, t.x, t.a);
      sig += phi * phi.transpose();
      sum_phi_r += phi * t.r;
      if (h + 1 < mdp.horizon) sum_phi_phihat += phi * p.phi_hat[i].transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sig);
    prog.sigma.push_back(sig);
    prog.cvec.push_back(llt.solve(sum_phi_r));
    prog.amat.push_back(h + 1 < mdp.horizon ? Eigen::MatrixXd(llt.solve(sum_phi_phihat))
                                            : Eigen::MatrixXd::Zero(mdp.dim, mdp.dim));
  }
  double cmax = 0.0;
  for (const auto& c : prog.cvec) cmax = std::max(cmax, c.norm());
  prog.scale = 1.0 + prog.alpha + prog.beta + cmax;
  return prog;
}

// Augmented-Lagrangian value of the ellipsoid constraints; the ball
// constraints are handled by projection inside the inner loop.
struct AlmState {
  std::vector<double> mu;
  double rho = 1.0;
};

double alm_value(const Program& prog, const AlmState& alm, const Eigen::VectorXd& w) {
  double val = prog.objective(w);
  for (int h = 0; h < prog.horizon; ++h) {
    double g = prog.sig_norm(h, prog.xi(w, h)) - prog.alpha;
    double m = std::max(0.0, alm.mu[h] + alm.rho * g);
    val += (m * m - alm.mu[h] * alm.mu[h]) / (2.0 * alm.rho);
  }
  return val;
}

Eigen::VectorXd alm_gradient(const Program& prog, const AlmState& alm,
                             const Eigen::VectorXd& w) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(w.size());
  prog.block(grad, 0) += prog.q;
  for (int h = 0; h < prog.horizon; ++h) {
    Eigen::VectorXd xi = prog.xi(w, h);
    double norm = prog.sig_norm(h, xi);
    double m = std::max(0.0, alm.mu[h] + alm.rho * (norm - prog.alpha));
    if (m <= 0.0 || norm <= 1e-300) continue;
    Eigen::VectorXd dir = (prog.sigma[h] * xi) / norm;
    prog.block(grad, h) += m * dir;
    if (h + 1 < prog.horizon) prog.block(grad, h + 1) -= m * (prog.amat[h].transpose() * dir);
  }
  return grad;
}

}  // namespace

CriticProblem make_critic_problem(const FeatureMdp& mdp, const OfflineDataset& data,
                                  Policy policy, CriticParams params) {
  if (params.alpha < 0.0 || params.beta <= 0.0)
    throw Error("critic: alpha must be >= 0 and beta > 0");
  if (params.lambda <= 0.0) throw Error("critic: lambda must be positive");
  if (policy.horizon() != mdp.horizon) throw DimensionError("critic: policy horizon mismatch");
  for (int h = 0; h < mdp.horizon; ++h)
    if (!std::holds_alternative<PerturbedLinear>(policy.steps[h]))
      throw UnsupportedPolicyError("critic: policy must be perturbed linear at every step");
  CriticProblem p;
  p.mdp = &mdp;
  p.data = &data;
  p.policy = std::move(policy);
  p.params = params;
  return p;
}

void draw_feature_estimates(CriticProblem& problem, RngStream& rng) {
  const FeatureMdp& mdp = *problem.mdp;
  const OfflineDataset& data = *problem.data;
  const double delta_each = problem.params.delta / std::max(1, data.n());
  problem.phi_hat.assign(data.n(), Eigen::VectorXd::Zero(mdp.dim));

  // One estimate per distinct (next step, next state) within this call.
  std::map<std::pair<int, int>, Eigen::VectorXd> cache;
  for (int i = 0; i < data.n(); ++i) {
    const DataTuple& t = data.tuples[i];
    if (t.h + 1 >= mdp.horizon) continue;  // next-step features are identically zero
    auto key = std::make_pair(t.h + 1, t.x_next);
    auto it = cache.find(key);
    if (it == cache.end()) {
      RngStream sub = rng.derive({0x7068u, static_cast<std::uint64_t>(t.h + 1),
                                  static_cast<std::uint64_t>(t.x_next)});
      FeatureEstimate est = est_feature(mdp, t.x_next, problem.policy, t.h + 1,
                                        problem.params.eps_apx, delta_each, sub);
      it = cache.emplace(key, std::move(est.phi_hat)).first;
    }
    problem.phi_hat[i] = it->second;
  }
  RngStream sub = rng.derive(0x6f626au);
  problem.phi1_hat = est_feature(mdp, mdp.initial_state, problem.policy, 0,
                                 problem.params.eps_apx, delta_each, sub)
                         .phi_hat;
  problem.estimates_ready = true;
}

Eigen::VectorXd empirical_bellman(const OfflineDataset& data, const FeatureMdp& mdp, int h,
                                  const Eigen::VectorXd& w_next,
                                  const std::vector<Eigen::VectorXd>& phi_hat, double lambda) {
  if (lambda <= 0.0) throw Error("empirical_bellman: lambda must be positive");
  if (w_next.size() != mdp.dim) throw DimensionError("empirical_bellman: w_next dimension");
  Eigen::MatrixXd sig = lambda * Eigen::MatrixXd::Identity(mdp.dim, mdp.dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mdp.dim);
  for (int i : data.step_index(h)) {
    const DataTuple& t = data.tuples[i];
    Eigen::VectorXd phi = mdp.feature(t.h, t.x, t.a);
    sig += phi * phi.transpose();
    double target = t.r;
    if (t.h + 1 < mdp.horizon) target += phi_hat[i].dot(w_next);
    rhs += phi * target;
  }
  return sig.llt().solve(rhs);
}

CriticSolution solve_critic(CriticProblem& problem, RngStream& rng) {
  if (problem.mdp == nullptr || problem.data == nullptr)
    throw Error("solve_critic: problem not initialized");
  if (!problem.estimates_ready) draw_feature_estimates(problem, rng);

  const Program prog = build_program(problem);
  const SolverOptions& opt = problem.params.solver;
  const int H = prog.horizon, d = prog.dim;

  CriticSolution sol;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(H * d);

  auto record = [&](long long it, const Eigen::VectorXd& cur) {
    if (!opt.record_trace) return;
    sol.trace.push_back({it, prog.objective(cur), prog.max_violation(cur)});
  };

  if (prog.alpha == 0.0) {
    // Equality-pinned chain: w_h = That_h(w_{h+1}) backward from the last step.
    for (int h = H - 1; h >= 0; --h) {
      Eigen::VectorXd wh = prog.cvec[h];
      if (h + 1 < H) wh += prog.amat[h] * prog.block(w, h + 1);
      prog.block(w, h) = wh;
    }
    for (int h = 0; h < H; ++h) {
      double n = prog.block(w, h).norm();
      if (n > prog.beta + 1e-9 * prog.scale) {
        std::ostringstream os;
        os << "critic program infeasible: alpha = 0 pins ||w_" << h + 1 << "|| = " << n
           << " > beta = " << prog.beta;
        throw InfeasibleProgramError(os.str(), n - prog.beta);
      }
    }
    record(0, w);
  } else {
    // Phase 0: feasible start by alternating projections.
    for (int h = H - 1; h >= 0; --h) {
      Eigen::VectorXd wh = prog.cvec[h];
      if (h + 1 < H) wh += prog.amat[h] * prog.block(w, h + 1);
      double n = wh.norm();
      if (n > prog.beta) wh *= prog.beta / n;
      prog.block(w, h) = wh;
    }
    const double feas_tol = 1e-12 * prog.scale;
    double best_violation = prog.max_violation(w);
    int stalled = 0;
    for (int sweep = 0; sweep < 3000; ++sweep) {
      double v = prog.pocs_sweep(w);
      if (v <= feas_tol) break;
      if (v > best_violation - 1e-14 * prog.scale) {
        if (++stalled >= 200) break;
      } else {
        stalled = 0;
        best_violation = v;
      }
    }
    double v = prog.max_violation(w);
    if (v > 1e-8 * prog.scale) {
      std::ostringstream os;
      os << "critic program infeasible: alternating projections stalled at constraint "
         << "distance " << v;
      throw InfeasibleProgramError(os.str(), v);
    }

    // Phase 1: augmented Lagrangian over the ellipsoid constraints with the
    // norm balls kept exact by projection.
    AlmState alm;
    alm.mu.assign(H, 0.0);
    alm.rho = 10.0 / std::max(1.0, prog.alpha);
    Eigen::VectorXd best_w = w;
    double best_obj = prog.objective(w);
    long long used = 0;
    double step = 1.0;
    double prev_round_obj = best_obj;
    int flat_rounds = 0;

    const int max_outer = 60;
    for (int outer = 0; outer < max_outer && used < opt.max_iters; ++outer) {
      // inner: projected gradient with sufficient-decrease backtracking
      double fw = alm_value(prog, alm, w);
      for (int it = 0; it < 400 && used < opt.max_iters; ++it, ++used) {
        Eigen::VectorXd grad = alm_gradient(prog, alm, w);
        Eigen::VectorXd cand;
        double fc = 0.0;
        int halvings = 0;
        for (;;) {
          cand = w - step * grad;
          prog.project_ball_all(cand);
          fc = alm_value(prog, alm, cand);
          Eigen::VectorXd diff = cand - w;
          double quad = grad.dot(diff) + diff.squaredNorm() / (2.0 * step);
          if (fc <= fw + quad + 1e-14 * (1.0 + std::abs(fw))) break;
          step *= 0.5;
          if (++halvings > 60) break;
        }
        record(used, cand);
        double move = (cand - w).norm();
        w = std::move(cand);
        fw = fc;
        step = std::min(step * 1.3, 1e6);
        if (move <= 1e-13 * (1.0 + w.norm())) break;
      }
      // multiplier update
      double viol = 0.0;
      for (int h = 0; h < H; ++h) {
        double g = prog.sig_norm(h, prog.xi(w, h)) - prog.alpha;
        alm.mu[h] = std::max(0.0, alm.mu[h] + alm.rho * g);
        viol = std::max(viol, g);
      }
      if (viol > 1e-10 * prog.scale) alm.rho = std::min(alm.rho * 3.0, 1e10);

      // restore feasibility and track the best feasible objective
      Eigen::VectorXd restored = w;
      for (int sweep = 0; sweep < 80; ++sweep)
        if (prog.pocs_sweep(restored) <= feas_tol) break;
      double obj = prog.objective(restored);
      if (prog.max_violation(restored) <= 1e-9 * prog.scale && obj < best_obj) {
        best_obj = obj;
        best_w = restored;
      }
      if (std::abs(prev_round_obj - obj) < opt.progress_tol * (1.0 + std::abs(obj))) {
        if (++flat_rounds >= 3) break;
      } else {
        flat_rounds = 0;
      }
      prev_round_obj = obj;
    }
    sol.iterations = used;
    w = best_w;
  }

  sol.w.resize(H);
  sol.xi.resize(H);
  sol.ellipsoid_residual.resize(H);
  sol.ball_residual.resize(H);
  for (int h = 0; h < H; ++h) {
    sol.w[h] = prog.block(w, h);
    sol.xi[h] = prog.xi(w, h);
    sol.ellipsoid_residual[h] = prog.sig_norm(h, sol.xi[h]) - prog.alpha;
    sol.ball_residual[h] = sol.w[h].norm() - prog.beta;
  }
  sol.objective = prog.objective(w);
  return sol;
}

CertifyReport certify_solution(const CriticSolution& solution, const CriticProblem& problem,
                               double tolerance) {
  const FeatureMdp& mdp = *problem.mdp;
  const OfflineDataset& data = *problem.data;
  CertifyReport report;
  const int H = mdp.horizon;
  for (int h = 0; h < H; ++h) {
    Eigen::VectorXd w_next =
        (h + 1 < H) ? solution.w[h + 1] : Eigen::VectorXd::Zero(mdp.dim).eval();
    Eigen::VectorXd that = empirical_bellman(data, mdp, h, w_next, problem.phi_hat,
                                             problem.params.lambda);
    Eigen::VectorXd xi = solution.w[h] - that;
    report.equality_gap =
        std::max(report.equality_gap, (xi - solution.xi[h]).cwiseAbs().maxCoeff());

    CovarianceSummary cov = covariance(data, h, problem.params.lambda, mdp);
    double xi_norm = std::sqrt(std::max(0.0, xi.dot(cov.sigma * xi)));
    CertifyRow ell{"step " + std::to_string(h + 1) + " bellman-consistency", xi_norm,
                   problem.params.alpha, problem.params.alpha - xi_norm,
                   xi_norm <= problem.params.alpha + tolerance};
    report.rows.push_back(ell);

    double w_norm = solution.w[h].norm();
    CertifyRow ball{"step " + std::to_string(h + 1) + " weight-norm", w_norm,
                    problem.params.beta, problem.params.beta - w_norm,
                    w_norm <= problem.params.beta + tolerance};
    report.rows.push_back(ball);
  }
  report.max_violation = 0.0;
  report.ok = true;
  for (const CertifyRow& row : report.rows) {
    report.max_violation = std::max(report.max_violation, -row.slack);
    report.ok = report.ok && row.ok;
  }
  return report;
}

Eigen::VectorXd project_to_ellipsoid(const Eigen::VectorXd& v, const Eigen::VectorXd& center,
                                     const Eigen::MatrixXd& sigma, double alpha) {
  Eigen::VectorXd y;
  double lam = solve_dual_scalar(Eigen::MatrixXd::Identity(v.size(), v.size()), sigma,
                                 (v - center).eval(), alpha, y);
  if (lam <= 0.0) return v;
  return v - lam * (sigma * y);
}

void write_solver_trace_csv(std::ostream& os, const std::vector<SolverTraceRow>& trace) {
  os << "iteration,objective,max_residual\n";
  for (const SolverTraceRow& row : trace)
    os << row.iteration << ',' << format_double(row.objective) << ','
       << format_double(row.max_residual) << '\n';
}

}  // namespace lorl
