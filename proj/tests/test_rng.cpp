#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "multicoag/rng.hpp"

using namespace multicoag;

TEST_CASE("streams are a pure function of the seed") {
  Philox4x32 a(12345);
  Philox4x32 b(12345);
  Philox4x32 c(12346);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("uniform doubles stay in [0, 1) with sane moments") {
  Philox4x32 rng(777);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // 5 sigma bands for the uniform moments
  CHECK(std::abs(mean - 0.5) < 5.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(var - 1.0 / 12.0) < 5e-3);
}

TEST_CASE("exponential sampler matches its rate") {
  Philox4x32 rng(31415);
  const double rate = 2.5;
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dt = rng.exponential(rate);
    REQUIRE(dt > 0.0);
    sum += dt;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - 1.0 / rate) < 5.0 / (rate * std::sqrt(static_cast<double>(n))));
}

TEST_CASE("poisson sampler is exact in distribution for small and large means") {
  Philox4x32 rng(999);
  SECTION("mean zero") { CHECK(rng.poisson(0.0) == 0); }
  SECTION("moderate mean") {
    const double mean = 12.5;
    const int n = 50000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = static_cast<double>(rng.poisson(mean));
      sum += v;
      sumsq += v * v;
    }
    const double m = sum / n;
    const double var = sumsq / n - m * m;
    CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(std::abs(var - mean) < 0.05 * mean);
  }
  SECTION("large mean crosses the chunking threshold") {
    // mean 1e5: mean and variance both 1e5, sd of the sample mean is
    // sqrt(mean / n)
    const double mean = 1e5;
    const int n = 200;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(mean));
    const double m = sum / n;
    CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
  }
}

TEST_CASE("word stream has no short cycles") {
  Philox4x32 rng(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 4096; ++i) CHECK(seen.insert(rng.next_u64()).second);
}
