#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lorl/dataset.hpp"
#include "lorl/mdp.hpp"
#include "lorl/policy.hpp"
#include "lorl/rng.hpp"

namespace lorl {

struct SolverOptions {
  int max_iters = 20000;       // total inner-iteration budget
  double eps_solve = 1e-6;     // target objective accuracy and constraint violation
  double progress_tol = 1e-10; // early stop when outer objective progress falls below
  bool record_trace = false;   // keep per-iteration (objective, max residual) rows
};

struct SolverTraceRow {
  long long iteration = 0;
  double objective = 0.0;
  double max_residual = 0.0;
};

struct CriticParams {
  double eps_apx = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  double lambda = 1.0;
  SolverOptions solver;
};

// The pessimistic program for a fixed perturbed-linear policy:
//
//   min <w_1, phi1_hat>   s.t.  || w_h - That_h(w_{h+1}) ||_{Sigma_h} <= alpha,
//                               || w_h ||_2 <= beta          for all h,
//
// where That_h is the empirical Bellman operator built from the dataset and
// the per-tuple next-feature estimates phi_hat. The slack variables xi_h of
// the equality form are eliminated; they are re-derived exactly as
// xi_h = w_h - That_h(w_{h+1}) in the solution.
struct CriticProblem {
  const FeatureMdp* mdp = nullptr;
  const OfflineDataset* data = nullptr;
  Policy policy;
  CriticParams params;

  // Feature estimates. solve_critic draws them fresh on every call unless
  // they were injected beforehand (estimates_ready = true), which tests use
  // to pin oracles.
  std::vector<Eigen::VectorXd> phi_hat;  // one per tuple; zero for last-step tuples
  Eigen::VectorXd phi1_hat;              // estimate of phi_1(x_1, pi_1(x_1))
  bool estimates_ready = false;
};

CriticProblem make_critic_problem(const FeatureMdp& mdp, const OfflineDataset& data,
                                  Policy policy, CriticParams params);

// Draw all feature estimates for the problem (per-tuple budget delta/n), with
// one estimate shared by tuples that have the same (step, next state).
void draw_feature_estimates(CriticProblem& problem, RngStream& rng);

// Sigma_h^{-1} sum_{i in I_h} phi_h(x_i,a_i) (r_i + <phi_hat_i, w_next>),
// with Sigma_h = lambda I + sum phi phi^T. Requires lambda > 0.
Eigen::VectorXd empirical_bellman(const OfflineDataset& data, const FeatureMdp& mdp, int h,
                                  const Eigen::VectorXd& w_next,
                                  const std::vector<Eigen::VectorXd>& phi_hat, double lambda);

struct CriticSolution {
  std::vector<Eigen::VectorXd> w;
  std::vector<Eigen::VectorXd> xi;
  double objective = 0.0;
  // per step: ||xi_h||_{Sigma_h} - alpha and ||w_h|| - beta (<= 0 when satisfied)
  std::vector<double> ellipsoid_residual;
  std::vector<double> ball_residual;
  long long iterations = 0;
  std::vector<SolverTraceRow> trace;
};

// Solves the program to options.eps_solve accuracy. Throws
// InfeasibleProgramError when alternating projections stall at a positive
// constraint distance.
CriticSolution solve_critic(CriticProblem& problem, RngStream& rng);

struct CertifyRow {
  std::string constraint;
  double value = 0.0;
  double limit = 0.0;
  double slack = 0.0;  // limit - value
  bool ok = false;
};

struct CertifyReport {
  std::vector<CertifyRow> rows;
  double max_violation = 0.0;
  double equality_gap = 0.0;  // max over h of ||xi_h - (w_h - That_h w_{h+1})||
  bool ok = false;
};

// Recomputes every constraint from the dataset and stored feature estimates,
// independent of solver state.
CertifyReport certify_solution(const CriticSolution& solution, const CriticProblem& problem,
                               double tolerance);

// Exact projection of v onto {u : ||u - center||_Sigma <= alpha} by Newton on
// the dual scalar. Exposed for tests.
Eigen::VectorXd project_to_ellipsoid(const Eigen::VectorXd& v, const Eigen::VectorXd& center,
                                     const Eigen::MatrixXd& sigma, double alpha);

void write_solver_trace_csv(std::ostream& os, const std::vector<SolverTraceRow>& trace);

}  // namespace lorl
