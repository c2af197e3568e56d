#pragma once

// Two-branch power weights w(x) = |x|^alpha (|x| <= 1) / |x|^beta (|x| > 1)
// and the bounded/regularized variants built from them: truncation at a cap,
// sublinear regularization that is linear near zero, the convex-moment
// weight Phi(|x|^-alpha) with linear patch, and the capped k-power weight.
// All of these are subadditive in their stated parameter ranges, which is
// what makes their integrals monotone under coagulation.

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "multicoag/composition.hpp"

namespace multicoag {

/// Exponent pair (alpha: small-size branch, beta: large-size branch).
struct WeightParams {
  double alpha = 0.0;
  double beta = 0.0;
};

// Scalar form on sizes r > 0. The boundary r == 1 takes the alpha branch;
// both branches equal 1 there, so the choice only pins down bit-exact output.
inline double weight_scalar(const WeightParams& p, double r) {
  return r <= 1.0 ? std::pow(r, p.alpha) : std::pow(r, p.beta);
}

inline double weight_eval(const WeightParams& p, const CompositionVector& x) {
  return weight_scalar(p, x.l1_norm());
}

/// One of the four bounded weight constructions. Use the named factories;
/// they validate parameter ranges.
class RegularizedWeight {
 public:
  enum class Kind { truncated, sublinear_reg, convex_moment, power };

  /// min(w_{alpha,beta}, cap), cap > 1.
  static RegularizedWeight truncated(WeightParams base, double cap) {
    if (!(cap > 1.0)) throw std::invalid_argument("truncated weight requires cap > 1");
    RegularizedWeight w;
    w.kind_ = Kind::truncated;
    w.base_ = base;
    w.cap_ = cap;
    return w;
  }

  /// Linear below eps, min(sublinear(r), cap) above; eps in (0,1), cap > 1.
  /// `sublinear` must satisfy f(lambda r) <= lambda f(r) for lambda >= 1.
  static RegularizedWeight sublinear_reg(std::function<double(double)> sublinear, double eps,
                                         double cap) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("sublinear_reg requires eps in (0,1)");
    if (!(cap > 1.0)) throw std::invalid_argument("sublinear_reg requires cap > 1");
    if (!sublinear) throw std::invalid_argument("sublinear_reg requires a base function");
    RegularizedWeight w;
    w.kind_ = Kind::sublinear_reg;
    w.fn_ = std::move(sublinear);
    w.eps_ = eps;
    w.cap_ = cap;
    return w;
  }

  /// Phi(|x|^-alpha) with linear patch below eps; Phi continuous,
  /// nondecreasing, Phi(0) = 0; eps in (0,1), alpha > 0.
  static RegularizedWeight convex_moment(std::function<double(double)> phi, double eps,
                                         double alpha) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("convex_moment requires eps in (0,1)");
    if (!(alpha > 0.0)) throw std::invalid_argument("convex_moment requires alpha > 0");
    if (!phi) throw std::invalid_argument("convex_moment requires a base function");
    RegularizedWeight w;
    w.kind_ = Kind::convex_moment;
    w.fn_ = std::move(phi);
    w.eps_ = eps;
    w.alpha_ = alpha;
    return w;
  }

  /// eps^{k-1}|x| below eps, min(|x|, cap)^k above; eps in (0,1), cap > 1, k > 1.
  static RegularizedWeight power(double eps, double cap, double k) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("power weight requires eps in (0,1)");
    if (!(cap > 1.0)) throw std::invalid_argument("power weight requires cap > 1");
    if (!(k > 1.0)) throw std::invalid_argument("power weight requires k > 1");
    RegularizedWeight w;
    w.kind_ = Kind::power;
    w.eps_ = eps;
    w.cap_ = cap;
    w.k_ = k;
    return w;
  }

  double evaluate_scalar(double r) const {
    switch (kind_) {
      case Kind::truncated:
        return std::min(weight_scalar(base_, r), cap_);
      case Kind::sublinear_reg:
        return r < eps_ ? fn_(eps_) / eps_ * r : std::min(fn_(r), cap_);
      case Kind::convex_moment:
        return r < eps_ ? fn_(std::pow(eps_, -alpha_)) * r / eps_ : fn_(std::pow(r, -alpha_));
      case Kind::power:
        return r < eps_ ? std::pow(eps_, k_ - 1.0) * r : std::pow(std::min(r, cap_), k_);
    }
    return 0.0;  // unreachable
  }

  double operator()(const CompositionVector& x) const { return evaluate_scalar(x.l1_norm()); }

  /// Pointwise upper bound the construction never exceeds: the unregularized
  /// weight it approximates (for `power`, the two-branch majorant with the
  /// given small-size exponent, valid whenever that exponent is <= 1).
  double majorant_scalar(double r, double power_small_exponent = 1.0) const {
    switch (kind_) {
      case Kind::truncated:
        return weight_scalar(base_, r);
      case Kind::sublinear_reg:
        return fn_(r);
      case Kind::convex_moment:
        return fn_(std::pow(r, -alpha_));
      case Kind::power:
        return weight_scalar(WeightParams{power_small_exponent, k_}, r);
    }
    return 0.0;  // unreachable
  }

  Kind kind() const { return kind_; }
  double eps() const { return eps_; }
  double cap() const { return cap_; }
  double k() const { return k_; }
  double alpha() const { return alpha_; }

 private:
  RegularizedWeight() = default;

  Kind kind_ = Kind::truncated;
  WeightParams base_{};
  std::function<double(double)> fn_;
  double eps_ = 0.0;
  double cap_ = 0.0;
  double alpha_ = 0.0;
  double k_ = 0.0;
};

/// w(x+y) - w(x) - w(y); nonpositive exactly when w is subadditive.
template <class Weight>
double subadditivity_defect(const Weight& w, const CompositionVector& x,
                            const CompositionVector& y) {
  return w(x + y) - w(x) - w(y);
}

// ---------------------------------------------------------------------------
// Sampling-based validation that a scalar function is an admissible test
// function: finite and bounded on the sampled range, Lipschitz with a
// reported estimate, and exactly additive on pairs with |x+y| below the
// claimed linearity radius.

struct TestFunctionBudget {
  int value_samples = 1000;
  int lipschitz_pairs = 1000;
  int additivity_pairs = 1000;
  unsigned long long seed = 24601;
};

struct TestFunctionWitness {
  CompositionVector x;
  CompositionVector y;
  double defect = 0.0;
};

struct TestFunctionReport {
  bool valid = false;
  double sampled_sup = 0.0;
  double lipschitz_estimate = 0.0;
  std::optional<TestFunctionWitness> witness;
  std::string message;
};

namespace detail {

// Log-uniform size over [1e-6, 1e6], direction uniform on the simplex.
template <class Rng>
CompositionVector sample_point(Rng& rng, std::size_t dim, double size_lo = 1e-6,
                               double size_hi = 1e6) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double size = size_lo * std::pow(size_hi / size_lo, unif(rng));
  std::vector<double> coords(dim);
  double total = 0.0;
  std::exponential_distribution<double> expo(1.0);
  for (auto& c : coords) {
    c = expo(rng);
    total += c;
  }
  if (total <= 0.0) {
    coords[0] = 1.0;
    total = 1.0;
  }
  for (auto& c : coords) c *= size / total;
  return CompositionVector(std::move(coords));
}

}  // namespace detail

template <class Fn>
TestFunctionReport validate_test_function(const Fn& phi, std::size_t dim, double eps_lin,
                                          const TestFunctionBudget& budget = {}) {
  if (!(eps_lin > 0.0)) throw std::invalid_argument("linearity radius must be positive");
  TestFunctionReport report;
  std::mt19937_64 rng(budget.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (int i = 0; i < budget.value_samples; ++i) {
    const auto x = detail::sample_point(rng, dim);
    const double v = phi(x);
    if (!std::isfinite(v)) {
      report.message = "non-finite value at |x| = " + std::to_string(x.l1_norm());
      return report;
    }
    report.sampled_sup = std::max(report.sampled_sup, std::abs(v));
  }

  for (int i = 0; i < budget.lipschitz_pairs; ++i) {
    const auto x = detail::sample_point(rng, dim);
    // Perturb one coordinate by a relative step to probe difference quotients.
    std::vector<double> shifted(x.coords().begin(), x.coords().end());
    const std::size_t j = static_cast<std::size_t>(unif(rng) * static_cast<double>(dim)) % dim;
    const double h = (0.5 + unif(rng)) * 1e-3 * std::max(x.l1_norm(), 1e-6);
    shifted[j] += h;
    const CompositionVector y(std::move(shifted));
    const double quotient = std::abs(phi(y) - phi(x)) / h;
    if (!std::isfinite(quotient)) {
      report.message = "non-finite difference quotient";
      return report;
    }
    report.lipschitz_estimate = std::max(report.lipschitz_estimate, quotient);
  }

  for (int i = 0; i < budget.additivity_pairs; ++i) {
    // Build x + y with |x+y| strictly inside the claimed linearity radius.
    const double total = eps_lin * (1e-6 + (1.0 - 2e-6) * unif(rng));
    auto sum = detail::sample_point(rng, dim, total, total);
    const double split = 1e-3 + (1.0 - 2e-3) * unif(rng);
    std::vector<double> xs(dim), ys(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      xs[j] = split * sum[j];
      ys[j] = sum[j] - xs[j];
    }
    bool degenerate = true;
    for (double c : xs)
      if (c > 0.0) degenerate = false;
    for (double c : ys)
      if (!(c >= 0.0)) degenerate = true;
    if (degenerate) continue;
    bool y_positive = false;
    for (double c : ys)
      if (c > 0.0) y_positive = true;
    if (!y_positive) continue;
    const CompositionVector x(std::move(xs));
    const CompositionVector y(std::move(ys));
    const CompositionVector xy = x + y;
    const double defect = phi(xy) - phi(x) - phi(y);
    const double scale =
        std::max({std::abs(phi(xy)), std::abs(phi(x)), std::abs(phi(y)), 1e-300});
    if (std::abs(defect) > 1e-9 * scale) {
      report.witness = TestFunctionWitness{x, y, defect};
      report.message = "additivity violated below the linearity radius";
      return report;
    }
  }

  report.valid = true;
  return report;
}

}  // namespace multicoag
