#pragma once

// Coagulation kernels with their growth-envelope contract: symmetric rates
// K(x,y) bounded by c_u * |x|^{-theta1}|y|^{theta2} for |x| <= |y| (and the
// mirrored branch otherwise), with theta2 < 1, -theta1 <= theta2 and
// gamma = theta2 - theta1 < 1 for the uniqueness class. Kernels outside that
// class (e.g. the multiplicative kernel) carry an explicit flag and are only
// accepted for solver smoke runs.

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "multicoag/composition.hpp"
#include "multicoag/weights.hpp"

namespace multicoag {

struct EnvelopeReport {
  bool pass = false;
  double max_ratio = 0.0;
  CompositionVector worst_x;
  CompositionVector worst_y;
};

class Kernel {
 public:
  enum class Family { constant, brownian, product_envelope, multiplicative, user, user_table };

  using RateFn = std::function<double(std::span<const double>, std::span<const double>)>;

  /// K(x,y) = value. Zero is allowed (source-only runs); the envelope
  /// constant then defaults to 1 so the spec never degenerates.
  static Kernel constant(double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("constant kernel value must be >= 0");
    Kernel k;
    k.family_ = Family::constant;
    k.value_ = value;
    k.c_u_ = value > 0.0 ? value : 1.0;
    k.theta1_ = 0.0;
    k.theta2_ = 0.0;
    k.check_class();
    return k;
  }

  /// Brownian-coagulation rate as a function of l1 sizes:
  /// (r^{1/3} + s^{1/3})(r^{-1/3} + s^{-1/3}); tight envelope constant 4.
  static Kernel brownian() {
    Kernel k;
    k.family_ = Family::brownian;
    k.c_u_ = 4.0;
    k.theta1_ = 1.0 / 3.0;
    k.theta2_ = 1.0 / 3.0;
    k.check_class();
    return k;
  }

  /// coeff * (r^{-theta1} s^{theta2} + r^{theta2} s^{-theta1}); the summed
  /// form satisfies the two-branch envelope with constant 2*coeff whenever
  /// theta1 + theta2 >= 0.
  static Kernel product_envelope(double coeff, double theta1, double theta2) {
    if (!(coeff > 0.0)) throw std::invalid_argument("product_envelope coefficient must be > 0");
    if (theta1 + theta2 < 0.0)
      throw std::invalid_argument("product_envelope requires theta1 + theta2 >= 0");
    Kernel k;
    k.family_ = Family::product_envelope;
    k.value_ = coeff;
    k.c_u_ = 2.0 * coeff;
    k.theta1_ = theta1;
    k.theta2_ = theta2;
    k.check_class();
    return k;
  }

  /// K = |x||y|; gamma = 2, outside the uniqueness class. Solver smoke use
  /// only (pre-gelation); the comparison harness refuses it.
  static Kernel multiplicative() {
    Kernel k;
    k.family_ = Family::multiplicative;
    k.c_u_ = 1.0;
    k.theta1_ = -1.0;
    k.theta2_ = 1.0;
    k.outside_class_ = true;
    return k;
  }

  /// User-supplied symmetric rate with declared envelope parameters.
  static Kernel user(RateFn rate, double c_u, double theta1, double theta2,
                     bool outside_class = false) {
    if (!rate) throw std::invalid_argument("user kernel requires a rate function");
    if (!(c_u > 0.0)) throw std::invalid_argument("envelope constant must be > 0");
    Kernel k;
    k.family_ = Family::user;
    k.rate_ = std::move(rate);
    k.c_u_ = c_u;
    k.theta1_ = theta1;
    k.theta2_ = theta2;
    k.outside_class_ = outside_class;
    if (!outside_class) k.check_class();
    return k;
  }

  /// Rate tabulated over integer l1 sizes; table[r-1][s-1] = K(r,s), clamped
  /// to the nearest entry outside the tabulated range. Must be symmetric.
  static Kernel user_table(std::vector<std::vector<double>> table, double c_u, double theta1,
                           double theta2, bool outside_class = false) {
    if (table.empty()) throw std::invalid_argument("user_table kernel requires a table");
    const std::size_t n = table.size();
    for (const auto& row : table)
      if (row.size() != n) throw std::invalid_argument("user_table must be square");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (table[i][j] != table[j][i])
          throw std::invalid_argument("user_table must be symmetric");
    if (!(c_u > 0.0)) throw std::invalid_argument("envelope constant must be > 0");
    Kernel k;
    k.family_ = Family::user_table;
    k.table_ = std::move(table);
    k.c_u_ = c_u;
    k.theta1_ = theta1;
    k.theta2_ = theta2;
    k.outside_class_ = outside_class;
    if (!outside_class) k.check_class();
    return k;
  }

  Family family() const { return family_; }
  double c_u() const { return c_u_; }
  double theta1() const { return theta1_; }
  double theta2() const { return theta2_; }
  double gamma() const { return -theta1_ + theta2_; }
  bool outside_class() const { return outside_class_; }

  /// True when the rate depends on (x, y) only through the l1 sizes, which
  /// lets lattice solvers evaluate through a size-indexed table.
  bool norm_based() const { return family_ != Family::user; }

  double evaluate(const CompositionVector& x, const CompositionVector& y) const {
    return evaluate_span(x.coords(), y.coords());
  }

  double evaluate_span(std::span<const double> x, std::span<const double> y) const {
    if (family_ == Family::user) return rate_(x, y);
    double r = 0.0, s = 0.0;
    for (double c : x) r += c;
    for (double c : y) s += c;
    return norm_rate(r, s);
  }

  /// Rate as a function of l1 sizes; only meaningful when norm_based().
  double norm_rate(double r, double s) const {
    switch (family_) {
      case Family::constant:
        return value_;
      case Family::brownian:
        return (std::cbrt(r) + std::cbrt(s)) * (1.0 / std::cbrt(r) + 1.0 / std::cbrt(s));
      case Family::product_envelope:
        return value_ * (std::pow(r, -theta1_) * std::pow(s, theta2_) +
                         std::pow(r, theta2_) * std::pow(s, -theta1_));
      case Family::multiplicative:
        return r * s;
      case Family::user_table: {
        const std::size_t n = table_.size();
        auto clamp_idx = [n](double v) {
          long i = std::lround(v) - 1;
          if (i < 0) i = 0;
          if (i >= static_cast<long>(n)) i = static_cast<long>(n) - 1;
          return static_cast<std::size_t>(i);
        };
        return table_[clamp_idx(r)][clamp_idx(s)];
      }
      case Family::user:
        break;
    }
    throw std::logic_error("norm_rate called on a component-sensitive kernel");
  }

  /// Two-branch envelope value c_u |x|^{-theta1}|y|^{theta2} (|x| <= |y|).
  double envelope(const CompositionVector& x, const CompositionVector& y) const {
    const double r = x.l1_norm();
    const double s = y.l1_norm();
    return r <= s ? c_u_ * std::pow(r, -theta1_) * std::pow(s, theta2_)
                  : c_u_ * std::pow(r, theta2_) * std::pow(s, -theta1_);
  }

  /// Sampled max of rate / envelope; PASS iff the ratio stays within
  /// 1 + 1e-12 over the sample set.
  EnvelopeReport envelope_check(std::size_t dim, int samples, unsigned long long seed) const {
    if (samples <= 0) throw std::invalid_argument("envelope_check requires samples > 0");
    EnvelopeReport report;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < samples; ++i) {
      const auto x = detail::sample_point(rng, dim);
      const auto y = detail::sample_point(rng, dim);
      const double env = envelope(x, y);
      const double rate = evaluate(x, y);
      const double ratio = env > 0.0 ? rate / env : (rate > 0.0 ? HUGE_VAL : 0.0);
      if (ratio > report.max_ratio) {
        report.max_ratio = ratio;
        report.worst_x = x;
        report.worst_y = y;
      }
    }
    report.pass = report.max_ratio <= 1.0 + 1e-12;
    return report;
  }

 private:
  void check_class() const {
    if (!(theta2_ < 1.0)) throw std::invalid_argument("kernel class requires theta2 < 1");
    if (!(-theta1_ <= theta2_)) throw std::invalid_argument("kernel class requires -theta1 <= theta2");
    if (!(gamma() < 1.0)) throw std::invalid_argument("kernel class requires gamma < 1");
  }

  Family family_ = Family::constant;
  double value_ = 0.0;
  double c_u_ = 1.0;
  double theta1_ = 0.0;
  double theta2_ = 0.0;
  bool outside_class_ = false;
  RateFn rate_;
  std::vector<std::vector<double>> table_;
};

}  // namespace multicoag
