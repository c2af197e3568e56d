#pragma once

// Composition-space geometry: points of [0,inf)^d \ {0} with the l1 size
// and the componentwise strict order used throughout the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace multicoag {

/// A cluster composition: d nonnegative component volumes, not all zero.
class CompositionVector {
 public:
  CompositionVector() = default;

  explicit CompositionVector(std::vector<double> coords) : coords_(std::move(coords)) {
    validate();
  }

  CompositionVector(std::initializer_list<double> coords) : coords_(coords) { validate(); }

  std::size_t dim() const { return coords_.size(); }
  std::span<const double> coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  double l1_norm() const {
    double s = 0.0;
    for (double c : coords_) s += c;
    return s;
  }

  friend CompositionVector operator+(const CompositionVector& a, const CompositionVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("composition dimension mismatch");
    std::vector<double> sum(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) sum[i] = a.coords_[i] + b.coords_[i];
    return CompositionVector(std::move(sum));
  }

  friend bool operator==(const CompositionVector& a, const CompositionVector& b) {
    return a.coords_ == b.coords_;
  }

  // Lexicographic order on raw coordinates; used only for canonical atom
  // storage, not for any mathematical statement.
  friend bool lex_less(const CompositionVector& a, const CompositionVector& b) {
    return std::lexicographical_compare(a.coords_.begin(), a.coords_.end(),
                                        b.coords_.begin(), b.coords_.end());
  }

 private:
  void validate() const {
    if (coords_.empty()) throw std::invalid_argument("composition must have dimension >= 1");
    bool positive = false;
    for (double c : coords_) {
      if (!(c >= 0.0)) throw std::invalid_argument("composition coordinates must be >= 0");
      if (c > 0.0) positive = true;
    }
    if (!positive) throw std::invalid_argument("composition must have at least one coordinate > 0");
  }

  std::vector<double> coords_;
};

inline double l1_norm(const CompositionVector& x) { return x.l1_norm(); }

/// Componentwise x_l <= y_l for all l, and x != y.
inline bool strictly_below(const CompositionVector& x, const CompositionVector& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("composition dimension mismatch");
  bool strict = false;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    if (x[i] > y[i]) return false;
    if (x[i] < y[i]) strict = true;
  }
  return strict;
}

}  // namespace multicoag
