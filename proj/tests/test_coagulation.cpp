#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "multicoag/coagulation.hpp"
#include "multicoag/property_suites.hpp"

using namespace multicoag;

namespace {

SignedDiscreteMeasure delta(std::initializer_list<double> point, double w) {
  return SignedDiscreteMeasure::from_atoms(point.size(), {Atom{CompositionVector(point), w}});
}

// brute-force reference for the gain bilinear form, independent of the
// measure-building path
template <class Fn>
double gain_form_reference(const Kernel& k, const SignedDiscreteMeasure& mu,
                           const SignedDiscreteMeasure& nu, const Fn& phi) {
  double s = 0.0;
  for (const auto& a : mu.atoms())
    for (const auto& b : nu.atoms())
      s += phi(a.point + b.point) * k.evaluate(a.point, b.point) * a.weight * b.weight;
  return s;
}

}  // namespace

TEST_CASE("weak form on a single atom") {
  const auto k = Kernel::constant(2.0);
  const auto mu = delta({1.0}, 1.0);
  auto phi = [](const CompositionVector& x) { return std::min(x.l1_norm(), 1.5); };
  // (1/2) K [phi(2) - 2 phi(1)] = (1/2)(2)(1.5 - 2)
  CHECK(weak_apply(k, mu, mu, phi) == Catch::Approx(-0.5));
}

TEST_CASE("weak form vanishes on additive functions") {
  std::mt19937_64 rng(5);
  const auto k = Kernel::brownian();
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = detail::sample_measure(rng, 2, 10, false);
    for (std::size_t coord = 0; coord < 2; ++coord) {
      auto phi = [coord](const CompositionVector& x) { return x[coord]; };
      const double scale = weighted_norm(strong_gain(k, mu, mu), WeightParams{1.0, 1.0});
      CHECK(std::abs(weak_apply(k, mu, mu, phi)) <= 1e-12 * std::max(scale, 1e-300));
    }
  }
}

TEST_CASE("weak form is nonpositive for subadditive functions on nonnegative input") {
  std::mt19937_64 rng(6);
  const auto k = Kernel::constant(1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = detail::sample_measure(rng, 2, 10, false);
    auto phi = [](const CompositionVector& x) { return weight_scalar(WeightParams{0.5, 0.7}, x.l1_norm()); };
    CHECK(weak_apply(k, mu, mu, phi) <= 1e-12);
  }
}

TEST_CASE("strong gain and loss on two atoms") {
  const auto k = Kernel::constant(2.0);
  const auto mu = delta({1.0, 0.0}, 2.0);
  const auto nu = delta({0.0, 1.0}, 3.0);
  const auto gain = strong_gain(k, mu, nu);
  REQUIRE(gain.atoms().size() == 1);
  CHECK(gain.atoms()[0].point == CompositionVector{1.0, 1.0});
  CHECK(gain.atoms()[0].weight == 12.0);
  const auto loss = strong_loss(k, mu, nu);
  REQUIRE(loss.atoms().size() == 1);
  CHECK(loss.atoms()[0].point == CompositionVector{1.0, 0.0});
  CHECK(loss.atoms()[0].weight == 12.0);
  CHECK(strong_gain(k, mu, SignedDiscreteMeasure(2)).empty());
  CHECK(strong_loss(k, mu, SignedDiscreteMeasure(2)).empty());
}

TEST_CASE("gain pairing equals the bilinear form") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.5, 3.0);
  const auto k = Kernel::brownian();
  for (int trial = 0; trial < 1000; ++trial) {
    const auto mu = detail::sample_measure(rng, 2, 6, true);
    const auto nu = detail::sample_measure(rng, 2, 6, true);
    const double cap = unif(rng);
    auto phi = [cap](const CompositionVector& x) { return std::min(x.l1_norm(), cap); };
    const double via_measure = pair(strong_gain(k, mu, nu), phi);
    const double reference = gain_form_reference(k, mu, nu, phi);
    const double scale = std::max(std::abs(reference), strong_gain(k, mu, nu).total_variation() * cap);
    CHECK(std::abs(via_measure - reference) <= 1e-12 * std::max(scale, 1e-300));
  }
}

TEST_CASE("full operator on a single atom") {
  const auto k = Kernel::constant(2.0);
  const auto mu = delta({1.0, 0.0}, 1.0);
  const auto out = strong_apply(k, mu);
  REQUIRE(out.atoms().size() == 2);
  // canonical order sorts (1,0) after (0,? ) lexicographically: (1,0) < (2,0)
  CHECK(out.atoms()[0].point == CompositionVector{1.0, 0.0});
  CHECK(out.atoms()[0].weight == -2.0);
  CHECK(out.atoms()[1].point == CompositionVector{2.0, 0.0});
  CHECK(out.atoms()[1].weight == 1.0);

  // number density decay rate: <Q(mu,mu), 1> = -c^2 for mu = c delta
  for (double c : {0.5, 1.0, 2.0}) {
    const auto m = delta({1.0}, c);
    CHECK(pair(strong_apply(k, m), [](const CompositionVector&) { return 1.0; }) ==
          Catch::Approx(-c * c));
  }
}

TEST_CASE("operator output parts are consistent") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = detail::sample_measure(rng, 3, 8, false);
    const auto k = Kernel::brownian();
    const auto parts = apply_parts(k, mu);
    CHECK(parts.gain.nonnegative());
    CHECK(parts.loss.nonnegative());
    const auto direct = strong_apply(k, mu);
    CHECK(weighted_distance(parts.combined, direct, WeightParams{0.0, 0.0}) == 0.0);
  }
}

TEST_CASE("bilinearity of gain and loss") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const auto k = Kernel::brownian();
  const WeightParams tv{0.0, 0.0};
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu1 = detail::sample_measure(rng, 2, 5, true);
    const auto mu2 = detail::sample_measure(rng, 2, 5, true);
    const auto nu = detail::sample_measure(rng, 2, 5, true);
    const double a = unif(rng);
    const auto left = strong_gain(k, a * mu1 + mu2, nu);
    const auto right = a * strong_gain(k, mu1, nu) + strong_gain(k, mu2, nu);
    const double scale = std::max(left.total_variation() + right.total_variation(), 1e-300);
    CHECK(weighted_distance(left, right, tv) <= 1e-12 * scale);

    const auto lleft = strong_loss(k, nu, a * mu1 + mu2);
    const auto lright = a * strong_loss(k, nu, mu1) + strong_loss(k, nu, mu2);
    const double lscale = std::max(lleft.total_variation() + lright.total_variation(), 1e-300);
    CHECK(weighted_distance(lleft, lright, tv) <= 1e-12 * lscale);
  }
}

TEST_CASE("norm bound report") {
  SECTION("single atoms with the constant kernel") {
    const auto k = Kernel::constant(2.0);
    const auto report = operator_norm_bound_check(k, delta({1.0}, 1.0), delta({2.0}, 0.5),
                                                  WeightParams{0.0, 0.0});
    CHECK(report.pass);
    CHECK(report.gain_ratio <= 1.0);
    CHECK(report.loss_ratio <= 1.0);
  }
  SECTION("three-atom measure with the brownian kernel") {
    auto mu = delta({0.1}, 1.0) + delta({1.0}, 1.0) + delta({10.0}, 1.0);
    const auto report =
        operator_norm_bound_check(Kernel::brownian(), mu, mu, WeightParams{0.0, 0.0});
    CHECK(report.pass);
  }
  SECTION("empty second factor") {
    const auto report = operator_norm_bound_check(Kernel::brownian(), delta({1.0}, 1.0),
                                                  SignedDiscreteMeasure(1), WeightParams{1.0, 1.0});
    CHECK(report.pass);
    CHECK(report.gain_norm == 0.0);
    CHECK(report.loss_norm == 0.0);
  }
  SECTION("negative weight exponents are rejected") {
    CHECK_THROWS_AS(operator_norm_bound_check(Kernel::brownian(), delta({1.0}, 1.0),
                                              delta({1.0}, 1.0), WeightParams{-0.5, 0.0}),
                    std::invalid_argument);
  }
}
