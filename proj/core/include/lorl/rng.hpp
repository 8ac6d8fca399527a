#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>

namespace lorl {

// Counter-based random stream. Every draw hashes (key, counter), and child
// streams re-key with the derivation index, so a draw is a pure function of
// the seed and the derivation path (trial, step, state, draw-index, ...).
// Streams are small value types; pass them by value to give a callee its own
// independent stream, or by reference to let it advance the caller's.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : key_(mix(0x9e3779b97f4a7c15ull, seed)) {}

  // Independent child stream; does not disturb this stream's counter.
  [[nodiscard]] RngStream derive(std::uint64_t index) const {
    RngStream child;
    child.key_ = mix(key_, index + 1);
    return child;
  }
  [[nodiscard]] RngStream derive(std::initializer_list<std::uint64_t> path) const {
    RngStream child = *this;
    for (std::uint64_t p : path) child = child.derive(p);
    return child;
  }

  std::uint64_t next_u64() { return mix(key_, ++counter_); }

  // Uniform in [0, 1), 53 mantissa bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();

  Eigen::VectorXd standard_normal_vector(int dim);
  Eigen::VectorXd normal_vector(const Eigen::VectorXd& mean, double sigma);
  Eigen::VectorXd unit_sphere_vector(int dim);

  // Index drawn from a probability vector (assumed to sum to ~1).
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);

  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t mix(std::uint64_t key, std::uint64_t word) {
    // splitmix64 finalizer over a keyed input
    std::uint64_t z = key + 0x9e3779b97f4a7c15ull * (word + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0x853c49e6748fea9bull;
  std::uint64_t counter_ = 0;
};

}  // namespace lorl
