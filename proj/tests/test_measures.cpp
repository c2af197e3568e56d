#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "multicoag/measures.hpp"
#include "multicoag/property_suites.hpp"

using namespace multicoag;

namespace {

SignedDiscreteMeasure delta(std::initializer_list<double> point, double w) {
  return SignedDiscreteMeasure::from_atoms(point.size(), {Atom{CompositionVector(point), w}});
}

}  // namespace

TEST_CASE("weighted norm") {
  // atoms at sizes 0.25 and 4 with weights 0.5 and 4
  auto mu = delta({0.25}, 0.5) + delta({4.0}, 4.0);
  CHECK(weighted_norm(mu, WeightParams{-1.0, 1.0}) == Catch::Approx(18.0));
  CHECK(weighted_norm(SignedDiscreteMeasure(1), WeightParams{-1.0, 1.0}) == 0.0);
  // exact cancellation happens before total variation
  auto cancelled = delta({1.0, 0.0}, 1.0) + delta({1.0, 0.0}, -1.0);
  CHECK(cancelled.empty());
  CHECK(weighted_norm(cancelled, WeightParams{0.0, 0.0}) == 0.0);
}

TEST_CASE("canonicalization merges bit-equal points only") {
  auto m = SignedDiscreteMeasure::from_atoms(
      1, {Atom{CompositionVector{1.0}, 0.5}, Atom{CompositionVector{1.0}, 0.25},
          Atom{CompositionVector{1.0 + 1e-12}, 1.0}});
  CHECK(m.atoms().size() == 2);
  CHECK(m.atoms()[0].weight == 0.75);
}

TEST_CASE("dual pairing") {
  auto mu = delta({1.0, 0.0}, 2.0) + delta({0.0, 3.0}, 1.0);
  SECTION("coordinate functions recover the mass vector") {
    const auto m = mass_vector(mu);
    CHECK(m[0] == 2.0);
    CHECK(m[1] == 3.0);
    CHECK(pair(mu, [](const CompositionVector& x) { return x[0]; }) == 2.0);
    CHECK(pair(mu, [](const CompositionVector& x) { return x[1]; }) == 3.0);
  }
  SECTION("the constant function gives the number density") {
    CHECK(pair(mu, [](const CompositionVector&) { return 1.0; }) == 3.0);
  }
  SECTION("mass vector is linear in the weights") {
    const auto scaled = mass_vector(2.5 * mu);
    CHECK(scaled[0] == Catch::Approx(5.0));
    CHECK(scaled[1] == Catch::Approx(7.5));
  }
}

TEST_CASE("duality sandwich and attainment") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> expo(-1.5, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const WeightParams p{expo(rng), expo(rng)};
    const auto mu = detail::sample_measure(rng, 2, 10, true);
    const double norm = weighted_norm(mu, p);

    // |<mu, phi>| <= ||mu|| whenever |phi| <= omega pointwise
    std::vector<double> damping(mu.atoms().size());
    for (auto& d : damping) d = unif(rng);
    std::size_t i = 0;
    double paired = 0.0;
    for (const auto& a : mu.atoms()) paired += damping[i++] * weight_eval(p, a.point) * a.weight;
    CHECK(std::abs(paired) <= norm * (1.0 + 1e-12) + 1e-300);

    // the sign-matched choice attains the norm on discrete support
    double attained = 0.0;
    for (const auto& a : mu.atoms())
      attained += (a.weight >= 0.0 ? 1.0 : -1.0) * weight_eval(p, a.point) * a.weight;
    CHECK(attained == Catch::Approx(norm).epsilon(1e-12));
  }
}

TEST_CASE("weighted distance") {
  const WeightParams size_weight{1.0, 1.0};
  auto mu = delta({2.0}, 1.0);
  auto nu = delta({2.0}, 0.5);
  CHECK(weighted_distance(mu, mu, size_weight) == 0.0);
  CHECK(weighted_distance(mu, nu, size_weight) == Catch::Approx(1.0));
  // disjoint supports add up
  auto rho = delta({5.0}, 1.0);
  CHECK(weighted_distance(mu, rho, size_weight) ==
        Catch::Approx(weighted_norm(mu, size_weight) + weighted_norm(rho, size_weight)));
}

TEST_CASE("triangle inequality and homogeneity of the weighted norm") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    const WeightParams p{-0.5, 0.9};
    const auto mu = detail::sample_measure(rng, 2, 8, true);
    const auto nu = detail::sample_measure(rng, 2, 8, true);
    CHECK(weighted_norm(mu + nu, p) <=
          (weighted_norm(mu, p) + weighted_norm(nu, p)) * (1.0 + 1e-12));
    CHECK(weighted_norm(-3.0 * mu, p) == Catch::Approx(3.0 * weighted_norm(mu, p)));
  }
}

TEST_CASE("lattice binning") {
  SECTION("floor rule and boundary") {
    auto mu = delta({1.2, 0.7}, 2.0);
    const auto binned = bin_to_lattice(mu, 1.0, 8);
    REQUIRE(binned.on_lattice.atoms().size() == 1);
    CHECK(binned.on_lattice.atoms()[0].point == CompositionVector{1.0, 0.0});
    CHECK(binned.on_lattice.atoms()[0].weight == 2.0);
    CHECK(binned.overflow_weight == 0.0);

    const auto exact = bin_to_lattice(delta({2.0, 1.0}, 1.0), 1.0, 8);
    CHECK(exact.on_lattice.atoms()[0].point == CompositionVector{2.0, 1.0});
  }
  SECTION("overflow keeps the weight") {
    auto mu = delta({11.0, 0.0}, 0.25);
    const auto binned = bin_to_lattice(mu, 1.0, 8);
    CHECK(binned.on_lattice.empty());
    CHECK(binned.overflow_weight == 0.25);
    CHECK(binned.overflow_mass[0] == Catch::Approx(11.0 * 0.25));
  }
  SECTION("sub-cell atoms land in the underflow bucket") {
    auto mu = delta({0.3, 0.4}, 1.5);
    const auto binned = bin_to_lattice(mu, 1.0, 8);
    CHECK(binned.on_lattice.empty());
    CHECK(binned.underflow_weight == 1.5);
  }
  SECTION("total weight is preserved") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const auto mu = detail::sample_measure(rng, 2, 15, false, 1e-2, 30.0);
      const auto binned = bin_to_lattice(mu, 1.0, 8);
      const double total = binned.on_lattice.total_weight() + binned.overflow_weight +
                           binned.underflow_weight;
      CHECK(total == Catch::Approx(mu.total_weight()).epsilon(1e-14));
    }
  }
}
