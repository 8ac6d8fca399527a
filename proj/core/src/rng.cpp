#include "lorl/rng.hpp"

#include <cmath>
#include <numbers>

namespace lorl {

double RngStream::normal() {
  // 1 - u keeps the argument of log strictly positive.
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd RngStream::standard_normal_vector(int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd RngStream::normal_vector(const Eigen::VectorXd& mean, double sigma) {
  return mean + sigma * standard_normal_vector(static_cast<int>(mean.size()));
}

Eigen::VectorXd RngStream::unit_sphere_vector(int dim) {
  for (;;) {
    Eigen::VectorXd v = standard_normal_vector(dim);
    double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

int RngStream::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  double u = uniform01();
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace lorl
