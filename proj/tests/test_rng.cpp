#include <doctest.h>

#include <lorl/rng.hpp>

#include <cmath>

using lorl::RngStream;

TEST_CASE("identical seeds replay identical draws") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams are independent of the parent counter") {
  RngStream parent(7);
  RngStream child_before = parent.derive(3);
  parent.uniform01();
  parent.uniform01();
  RngStream child_after = parent.derive(3);
  CHECK(child_before.next_u64() == child_after.next_u64());

  RngStream other = parent.derive(4);
  CHECK(parent.derive(3).next_u64() != other.next_u64());
}

TEST_CASE("derivation paths compose") {
  RngStream root(1);
  CHECK(root.derive({5, 9}).next_u64() == root.derive(5).derive(9).next_u64());
}

TEST_CASE("normal draws have roughly standard moments") {
  RngStream rng(2024);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("categorical respects point masses and frequencies") {
  RngStream rng(5);
  Eigen::VectorXd p(3);
  p << 0.0, 1.0, 0.0;
  for (int i = 0; i < 20; ++i) CHECK(rng.categorical(p) == 1);

  Eigen::VectorXd q(2);
  q << 0.25, 0.75;
  int ones = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) ones += rng.categorical(q);
  CHECK(std::abs(ones / static_cast<double>(n) - 0.75) < 0.02);
}

TEST_CASE("unit sphere vectors have unit norm") {
  RngStream rng(11);
  for (int d : {1, 2, 5}) {
    Eigen::VectorXd v = rng.unit_sphere_vector(d);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
  }
}
