#pragma once

// Counter-based random number generation (Philox 4x32-10) plus the handful
// of exact samplers the stochastic solver needs. Counter-based state makes
// the stream a pure function of (seed, counter), so manifests can pin runs
// by naming the generator and the 64-bit seed.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace multicoag {

inline constexpr std::string_view kRngName = "philox4x32-10";

class Philox4x32 {
 public:
  explicit Philox4x32(std::uint64_t seed) : key_{static_cast<std::uint32_t>(seed),
                                                 static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      block_ = generate(counter_, key_);
      ++counter_;
      pos_ = 0;
    }
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]; safe as a log argument.
  double uniform_positive() { return 1.0 - uniform(); }

  double exponential(double rate) { return -std::log(uniform_positive()) / rate; }

  /// Exact Poisson sample. Knuth's product method applied in chunks so the
  /// running product never underflows for large means.
  long long poisson(double mean) {
    long long total = 0;
    while (mean > 500.0) {
      total += poisson_knuth(500.0);
      mean -= 500.0;
    }
    return total + poisson_knuth(mean);
  }

 private:
  long long poisson_knuth(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    long long n = -1;
    double product = 1.0;
    do {
      ++n;
      product *= uniform_positive();
    } while (product > limit);
    return n;
  }

  static std::array<std::uint32_t, 4> generate(std::uint64_t counter,
                                               std::array<std::uint32_t, 2> key) {
    std::array<std::uint32_t, 4> x{static_cast<std::uint32_t>(counter),
                                   static_cast<std::uint32_t>(counter >> 32), 0u, 0u};
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * x[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * x[2];
      x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return x;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

}  // namespace multicoag
