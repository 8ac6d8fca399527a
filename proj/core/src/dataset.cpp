#include "lorl/dataset.hpp"

#include <Eigen/Eigenvalues>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "lorl/serialize.hpp"

namespace lorl {

std::vector<int> OfflineDataset::step_index(int h) const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i)
    if (tuples[i].h == h) idx.push_back(i);
  return idx;
}

OfflineDataset generate_dataset(const FeatureMdp& mdp, const std::vector<PlanEntry>& plan,
                                RngStream& rng) {
  if (plan.empty()) throw Error("generate_dataset: empty plan");
  OfflineDataset out;
  for (const PlanEntry& e : plan) {
    if (e.h < 0 || e.h >= mdp.horizon) throw Error("generate_dataset: plan step out of range");
    if (e.x < 0 || e.x >= mdp.num_states || !mdp.is_active(e.h, e.x))
      throw Error("generate_dataset: plan state invalid at its step");
    if (e.a < 0 || e.a >= mdp.num_actions) throw Error("generate_dataset: plan action invalid");
    const double reward = mdp.reward(e.h, e.x, e.a);
    const auto row = mdp.transitions[e.h].row(mdp.row(e.x, e.a)).transpose();
    for (long long k = 0; k < e.count; ++k) {
      DataTuple t;
      t.h = e.h;
      t.x = e.x;
      t.a = e.a;
      t.r = reward;
      t.x_next = (e.h + 1 < mdp.horizon) ? rng.categorical(row) : kTerminalState;
      out.tuples.push_back(t);
    }
  }
  return out;
}

OfflineDataset generate_rollouts(const FeatureMdp& mdp, const Policy& behavior,
                                 long long num_trajectories, RngStream& rng) {
  if (num_trajectories <= 0) throw Error("generate_rollouts: need at least one trajectory");
  OfflineDataset out;
  for (long long traj = 0; traj < num_trajectories; ++traj) {
    int x = mdp.initial_state;
    for (int h = 0; h < mdp.horizon; ++h) {
      int a = sample_action(mdp, behavior, h, x, rng);
      DataTuple t;
      t.h = h;
      t.x = x;
      t.a = a;
      t.r = mdp.reward(h, x, a);
      if (h + 1 < mdp.horizon) {
        t.x_next = rng.categorical(mdp.transitions[h].row(mdp.row(x, a)).transpose());
        x = t.x_next;
      } else {
        t.x_next = kTerminalState;
      }
      out.tuples.push_back(t);
    }
  }
  return out;
}

CovarianceSummary covariance(const OfflineDataset& data, int h, double lambda,
                             const FeatureMdp& mdp) {
  if (lambda < 0.0) throw Error("covariance: lambda must be nonnegative");
  CovarianceSummary out;
  out.lambda = lambda;
  out.sigma = lambda * Eigen::MatrixXd::Identity(mdp.dim, mdp.dim);
  out.index_set = data.step_index(h);
  for (int i : out.index_set) {
    const DataTuple& t = data.tuples[i];
    Eigen::VectorXd phi = mdp.feature(t.h, t.x, t.a);
    out.sigma += phi * phi.transpose();
  }
  return out;
}

double coverage_parameter(const OfflineDataset& data, const Policy& policy,
                          const FeatureMdp& mdp, double lambda, const EvalOptions& opts) {
  const Eigen::MatrixXd means = mean_features(mdp, policy, opts);
  const double n = static_cast<double>(data.n());
  double total = 0.0;
  for (int h = 0; h < mdp.horizon; ++h) {
    Eigen::VectorXd mu = means.row(h).transpose();
    CovarianceSummary cov = covariance(data, h, lambda, mdp);
    if (lambda > 0.0) {
      total += std::sqrt(n * mu.dot(cov.sigma.ldlt().solve(mu)));
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.sigma);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    const double cut = scale * kTol.span_relative;
    Eigen::VectorXd in_basis = eig.eigenvectors().transpose() * mu;
    double quad = 0.0;
    double out_of_span = 0.0;
    for (int i = 0; i < mdp.dim; ++i) {
      if (eig.eigenvalues()[i] > cut)
        quad += in_basis[i] * in_basis[i] / eig.eigenvalues()[i];
      else
        out_of_span += in_basis[i] * in_basis[i];
    }
    if (std::sqrt(out_of_span) > kTol.span_relative * std::max(1.0, mu.norm())) {
      std::ostringstream os;
      os << "coverage: mean feature at step " << h
         << " leaves the span of the dataset features (coverage is infinite)";
      throw InfiniteCoverageError(os.str());
    }
    total += std::sqrt(n * quad);
  }
  return total;
}

void write_dataset_csv(std::ostream& os, const OfflineDataset& data) {
  os << "h,x,a,r,x_next\n";
  for (const DataTuple& t : data.tuples)
    os << t.h << ',' << t.x << ',' << t.a << ',' << format_double(t.r) << ',' << t.x_next
       << '\n';
}

OfflineDataset read_dataset_csv(std::istream& is) {
  OfflineDataset out;
  std::string line;
  if (!std::getline(is, line)) throw ParseError("dataset csv: empty input");
  if (line != "h,x,a,r,x_next") throw ParseError("dataset csv: unexpected header: " + line);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    DataTuple t;
    try {
      std::getline(row, field, ',');
      t.h = std::stoi(field);
      std::getline(row, field, ',');
      t.x = std::stoi(field);
      std::getline(row, field, ',');
      t.a = std::stoi(field);
      std::getline(row, field, ',');
      t.r = std::stod(field);
      std::getline(row, field, ',');
      t.x_next = std::stoi(field);
    } catch (const std::exception&) {
      throw ParseError("dataset csv: malformed row at line " + std::to_string(lineno));
    }
    out.tuples.push_back(t);
  }
  return out;
}

}  // namespace lorl
