#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "lorl/evaluate.hpp"
#include "lorl/mdp.hpp"
#include "lorl/policy.hpp"
#include "lorl/rng.hpp"

namespace lorl {

// Index used in place of a successor state for step-H tuples whose next state
// is the terminal marker; the step-H+1 feature map is zero, so it is inert.
inline constexpr int kTerminalState = -1;

struct DataTuple {
  int h = 0;  // 0-based step
  int x = 0;
  int a = 0;
  double r = 0.0;
  int x_next = kTerminalState;
};

struct OfflineDataset {
  std::vector<DataTuple> tuples;
  int n() const { return static_cast<int>(tuples.size()); }
  std::vector<int> step_index(int h) const;  // positions i with h_i == h
};

struct PlanEntry {
  int h = 0;
  int x = 0;
  int a = 0;
  long long count = 0;
};

// Fixed-design dataset: each plan entry contributes `count` independent
// samples of (r, x') at its (h, x, a). Rewards are the exact linear rewards.
OfflineDataset generate_dataset(const FeatureMdp& mdp, const std::vector<PlanEntry>& plan,
                                RngStream& rng);

// Behavior-policy dataset: each trajectory contributes H tuples.
OfflineDataset generate_rollouts(const FeatureMdp& mdp, const Policy& behavior,
                                 long long num_trajectories, RngStream& rng);

struct CovarianceSummary {
  Eigen::MatrixXd sigma;       // lambda*I + sum phi phi^T over step-h tuples
  double lambda = 0.0;
  std::vector<int> index_set;  // tuple positions contributing to this step
};

CovarianceSummary covariance(const OfflineDataset& data, int h, double lambda,
                             const FeatureMdp& mdp);

// sum_h || E^pi[phi_h] ||_{n Sigma_h^{-1}} with Sigma_h at the given lambda.
// lambda == 0 uses the pseudo-inverse restricted to the span of the data
// features and throws InfiniteCoverageError when the mean feature leaves it.
double coverage_parameter(const OfflineDataset& data, const Policy& policy,
                          const FeatureMdp& mdp, double lambda,
                          const EvalOptions& opts = {});

// CSV with header h,x,a,r,x_next; rewards at 17 significant digits.
void write_dataset_csv(std::ostream& os, const OfflineDataset& data);
OfflineDataset read_dataset_csv(std::istream& is);

}  // namespace lorl
