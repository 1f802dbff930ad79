#include <doctest.h>

#include <cmath>
#include <vector>

#include "tarma/rng.hpp"

using namespace tarma;

TEST_CASE("identical streams reproduce identical draws") {
  Rng a(RngStream{42, 7});
  Rng b(RngStream{42, 7});
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(RngStream{42, 7});
  Rng d(RngStream{42, 7});
  for (int i = 0; i < 100; ++i) CHECK(c.gaussian() == d.gaussian());
}

TEST_CASE("distinct replicate ids give distinct streams") {
  Rng a(RngStream{42, 0});
  Rng b(RngStream{42, 1});
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64() ? 1 : 0;
  CHECK(equal == 0);
}

TEST_CASE("gaussian moments are sane") {
  Rng rng(RngStream{1234, 0});
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.gaussian();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform01 stays in [0,1)") {
  Rng rng(RngStream{9, 9});
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
