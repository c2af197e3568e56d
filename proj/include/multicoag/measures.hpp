#pragma once

// Signed discrete measures: finite atom lists over composition space, kept
// canonical (atoms sorted lexicographically, bit-equal points merged, zero
// weights dropped). Total variation is the atomwise absolute weight sum,
// which is exact for discrete measures.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "multicoag/composition.hpp"
#include "multicoag/weights.hpp"

namespace multicoag {

struct Atom {
  CompositionVector point;
  double weight = 0.0;
};

class SignedDiscreteMeasure {
 public:
  SignedDiscreteMeasure() = default;
  explicit SignedDiscreteMeasure(std::size_t dimension) : dim_(dimension) {}

  static SignedDiscreteMeasure from_atoms(std::size_t dimension, std::vector<Atom> atoms) {
    SignedDiscreteMeasure m(dimension);
    m.atoms_ = std::move(atoms);
    for (const auto& a : m.atoms_)
      if (a.point.dim() != dimension)
        throw std::invalid_argument("atom dimension does not match measure dimension");
    m.canonicalize();
    return m;
  }

  std::size_t dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }

  void add_atom(CompositionVector point, double weight) {
    if (point.dim() != dim_) throw std::invalid_argument("atom dimension mismatch");
    atoms_.push_back(Atom{std::move(point), weight});
    canonicalize();
  }

  double total_variation() const {
    double tv = 0.0;
    for (const auto& a : atoms_) tv += std::abs(a.weight);
    return tv;
  }

  /// Signed total weight (the number density for nonnegative measures).
  double total_weight() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
  }

  bool nonnegative() const {
    for (const auto& a : atoms_)
      if (a.weight < 0.0) return false;
    return true;
  }

  std::vector<double> mass_vector() const {
    std::vector<double> m(dim_, 0.0);
    for (const auto& a : atoms_)
      for (std::size_t i = 0; i < dim_; ++i) m[i] += a.point[i] * a.weight;
    return m;
  }

  /// integral of |x| d mu; equals the mass-vector sum on the nonnegative cone.
  double l1_moment() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.point.l1_norm() * a.weight;
    return s;
  }

  double moment(double order) const {
    double s = 0.0;
    for (const auto& a : atoms_) s += std::pow(a.point.l1_norm(), order) * a.weight;
    return s;
  }

  friend SignedDiscreteMeasure operator+(const SignedDiscreteMeasure& a,
                                         const SignedDiscreteMeasure& b) {
    if (a.dim_ != b.dim_) throw std::invalid_argument("measure dimension mismatch");
    SignedDiscreteMeasure out = a;
    out.atoms_.insert(out.atoms_.end(), b.atoms_.begin(), b.atoms_.end());
    out.canonicalize();
    return out;
  }

  friend SignedDiscreteMeasure operator-(const SignedDiscreteMeasure& a,
                                         const SignedDiscreteMeasure& b) {
    return a + (-1.0) * b;
  }

  friend SignedDiscreteMeasure operator*(double s, const SignedDiscreteMeasure& m) {
    SignedDiscreteMeasure out = m;
    for (auto& a : out.atoms_) a.weight *= s;
    out.canonicalize();
    return out;
  }

 private:
  void canonicalize() {
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return lex_less(a.point, b.point); });
    std::vector<Atom> merged;
    merged.reserve(atoms_.size());
    for (auto& a : atoms_) {
      if (!merged.empty() && merged.back().point == a.point)
        merged.back().weight += a.weight;
      else
        merged.push_back(std::move(a));
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Atom& a) { return a.weight == 0.0; }),
                 merged.end());
    atoms_ = std::move(merged);
  }

  std::size_t dim_ = 0;
  std::vector<Atom> atoms_;
};

inline double weighted_norm(const SignedDiscreteMeasure& mu, const WeightParams& p) {
  double s = 0.0;
  for (const auto& a : mu.atoms()) s += weight_eval(p, a.point) * std::abs(a.weight);
  return s;
}

template <class Fn>
double pair(const SignedDiscreteMeasure& mu, const Fn& phi) {
  double s = 0.0;
  for (const auto& a : mu.atoms()) s += phi(a.point) * a.weight;
  return s;
}

inline std::vector<double> mass_vector(const SignedDiscreteMeasure& mu) {
  return mu.mass_vector();
}

inline double weighted_distance(const SignedDiscreteMeasure& mu, const SignedDiscreteMeasure& nu,
                                const WeightParams& p) {
  return weighted_norm(mu - nu, p);
}

// ---------------------------------------------------------------------------
// Lattice binning (floor per coordinate; an exact multiple of the cell size
// lands in the cell it indexes). Atoms beyond the extent go to the overflow
// bucket; atoms whose every coordinate floors to zero go to the underflow
// bucket. Weight is preserved across the three parts.

struct BinnedMeasure {
  SignedDiscreteMeasure on_lattice;
  double overflow_weight = 0.0;
  std::vector<double> overflow_mass;  // per-component mass of overflow atoms
  double underflow_weight = 0.0;
};

inline BinnedMeasure bin_to_lattice(const SignedDiscreteMeasure& mu, double cell, int extent) {
  if (!(cell > 0.0)) throw std::invalid_argument("cell size must be positive");
  if (extent < 1) throw std::invalid_argument("lattice extent must be >= 1");
  BinnedMeasure out;
  out.overflow_mass.assign(mu.dim(), 0.0);
  std::vector<Atom> binned;
  binned.reserve(mu.atoms().size());
  for (const auto& a : mu.atoms()) {
    std::vector<double> idx(mu.dim());
    bool overflow = false;
    bool all_zero = true;
    for (std::size_t i = 0; i < mu.dim(); ++i) {
      const double k = std::floor(a.point[i] / cell);
      if (k > static_cast<double>(extent)) overflow = true;
      if (k > 0.0) all_zero = false;
      idx[i] = k * cell;
    }
    if (overflow) {
      out.overflow_weight += a.weight;
      for (std::size_t i = 0; i < mu.dim(); ++i) out.overflow_mass[i] += a.point[i] * a.weight;
    } else if (all_zero) {
      out.underflow_weight += a.weight;
    } else {
      binned.push_back(Atom{CompositionVector(std::move(idx)), a.weight});
    }
  }
  out.on_lattice = SignedDiscreteMeasure::from_atoms(mu.dim(), std::move(binned));
  return out;
}

}  // namespace multicoag
