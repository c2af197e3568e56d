#pragma once

// Deterministic solver for the coagulation equation with source on the
// integer lattice {0..N}^d \ {0}: classic fixed-step RK4 in time, exact
// convolution sums in composition.
//
// Truncation semantics:
//   closed - pairs whose sum would leave the lattice do not react; the
//            in-domain mass vector then drifts only by floating-point
//            accumulation.
//   open   - every pair reacts; gain landing outside the lattice is tallied
//            into a per-component lost-mass accumulator integrated alongside
//            the densities, so mass + lost_mass reproduces the source line.
//
// Stability guidance: dt * (max total coagulation rate) < 0.1. The step is
// fixed by config; no adaptivity, so reruns are bit-identical.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "multicoag/kernels.hpp"
#include "multicoag/measures.hpp"
#include "multicoag/trajectory.hpp"

namespace multicoag {

inline constexpr int kMaxGridDim = 8;

enum class Truncation { closed, open };

struct GridSpec {
  int dim = 1;
  int extent = 1;  // per-axis N; lattice points have coordinates in 0..N
  Truncation truncation = Truncation::closed;
  double dt = 1e-3;
  double t_end = 1.0;
  int output_every = 1;  // steps between snapshots

  void validate() const {
    if (dim < 1 || dim > kMaxGridDim) throw std::invalid_argument("grid dim must be in 1..8");
    if (extent < 1) throw std::invalid_argument("grid extent must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("grid dt must be > 0");
    if (!(t_end >= 0.0)) throw std::invalid_argument("grid t_end must be >= 0");
    if (output_every < 1) throw std::invalid_argument("grid output_every must be >= 1");
    const double steps = t_end / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      throw std::invalid_argument("grid t_end must be an integer multiple of dt");
  }

  long long steps() const { return static_cast<long long>(std::llround(t_end / dt)); }
};

struct GridState {
  std::vector<double> density;    // (N+1)^d, row-major, origin entry always 0
  double t = 0.0;
  std::vector<double> lost_mass;  // per component (open mode)
  double clamped_mass = 0.0;      // cumulative l1 mass removed by clamping
};

struct GridSnapshot {
  double t = 0.0;
  std::vector<double> density;
  std::vector<double> lost_mass;
  double clamped_mass = 0.0;
};

struct GridTrajectory {
  GridSpec spec;
  std::vector<GridSnapshot> snapshots;
};

struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Row-major odometer over the inclusive box [0, bound]; fn(flat, l1norm).
template <class F>
inline void scan_box(int dim, const int* bound, const std::int64_t* strides, F&& fn) {
  std::array<int, kMaxGridDim> y{};
  std::int64_t flat = 0;
  int norm = 0;
  for (;;) {
    fn(flat, norm);
    int j = dim - 1;
    for (; j >= 0; --j) {
      if (y[j] < bound[j]) {
        ++y[j];
        flat += strides[j];
        ++norm;
        break;
      }
      norm -= y[j];
      flat -= static_cast<std::int64_t>(y[j]) * strides[j];
      y[j] = 0;
    }
    if (j < 0) return;
  }
}

}  // namespace detail

class GridSolver {
 public:
  GridSolver(GridSpec spec, Kernel kernel, SignedDiscreteMeasure source)
      : spec_(spec), kernel_(std::move(kernel)) {
    spec_.validate();
    const int d = spec_.dim;
    const int n1 = spec_.extent + 1;
    strides_.assign(d, 1);
    for (int j = d - 2; j >= 0; --j) {
      strides_[j] = strides_[j + 1] * n1;
      if (strides_[j] > (1LL << 40) / n1)
        throw std::invalid_argument("lattice too large: reduce extent or dimension");
    }
    cells_ = strides_[0] * n1;
    if (cells_ > 64LL * 1024 * 1024)
      throw std::invalid_argument("lattice too large: reduce extent or dimension");
    max_norm_ = d * spec_.extent;

    coords_.assign(static_cast<std::size_t>(cells_) * d, 0);
    fcoords_.assign(static_cast<std::size_t>(cells_) * d, 0.0);
    norms_.assign(cells_, 0);
    for (std::int64_t flat = 0; flat < cells_; ++flat) {
      std::int64_t rest = flat;
      int norm = 0;
      for (int j = 0; j < d; ++j) {
        const int v = static_cast<int>(rest / strides_[j]);
        rest %= strides_[j];
        coords_[flat * d + j] = v;
        fcoords_[flat * d + j] = v;
        norm += v;
      }
      norms_[flat] = norm;
    }

    if (kernel_.norm_based()) {
      rate_table_.assign(static_cast<std::size_t>(max_norm_ + 1) * (max_norm_ + 1), 0.0);
      for (int r = 1; r <= max_norm_; ++r)
        for (int s = 1; s <= max_norm_; ++s)
          rate_table_[static_cast<std::size_t>(r) * (max_norm_ + 1) + s] =
              kernel_.norm_rate(static_cast<double>(r), static_cast<double>(s));
    }

    zeta_ = to_density(source, "source");
    zeta_mass_.assign(d, 0.0);
    for (std::int64_t i = 1; i < cells_; ++i)
      if (zeta_[i] != 0.0)
        for (int j = 0; j < d; ++j) zeta_mass_[j] += zeta_[i] * coords_[i * d + j];
  }

  const GridSpec& spec() const { return spec_; }
  std::int64_t cells() const { return cells_; }
  const std::vector<double>& source_density() const { return zeta_; }
  const std::vector<double>& source_mass() const { return zeta_mass_; }

  /// Lattice coordinates of a flat cell index.
  std::span<const int> cell_coords(std::int64_t flat) const {
    return {coords_.data() + flat * spec_.dim, static_cast<std::size_t>(spec_.dim)};
  }

  /// Dense density array from a lattice measure (integer points within the
  /// extent, origin excluded).
  std::vector<double> to_density(const SignedDiscreteMeasure& m, const char* what) const {
    if (m.dim() != static_cast<std::size_t>(spec_.dim))
      throw std::invalid_argument(std::string(what) + ": dimension mismatch with grid");
    std::vector<double> c(cells_, 0.0);
    for (const auto& a : m.atoms()) {
      if (a.weight < 0.0)
        throw std::invalid_argument(std::string(what) + ": weights must be >= 0");
      std::int64_t flat = 0;
      for (int j = 0; j < spec_.dim; ++j) {
        const double v = a.point[j];
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9)
          throw std::invalid_argument(std::string(what) + ": atom not on the integer lattice");
        if (r < 0.0 || r > spec_.extent)
          throw std::invalid_argument(std::string(what) + ": atom outside the lattice extent");
        flat += static_cast<std::int64_t>(r) * strides_[j];
      }
      if (flat == 0) throw std::invalid_argument(std::string(what) + ": atom at the origin");
      c[flat] += a.weight;
    }
    return c;
  }

  SignedDiscreteMeasure to_measure(const std::vector<double>& c) const {
    std::vector<Atom> atoms;
    for (std::int64_t i = 1; i < cells_; ++i) {
      if (c[i] == 0.0) continue;
      std::vector<double> pt(spec_.dim);
      for (int j = 0; j < spec_.dim; ++j) pt[j] = coords_[i * spec_.dim + j];
      atoms.push_back(Atom{CompositionVector(std::move(pt)), c[i]});
    }
    return SignedDiscreteMeasure::from_atoms(spec_.dim, std::move(atoms));
  }

  /// dc/dt and d(lost_mass)/dt at the given densities.
  void rhs(const std::vector<double>& c, std::vector<double>& dc, std::vector<double>& dlost,
           int threads = 1) const {
    const int d = spec_.dim;
    dc.assign(cells_, 0.0);
    dlost.assign(d, 0.0);
    gain_.assign(cells_, 0.0);
    loss_factor_.assign(cells_, 0.0);

    const bool open = spec_.truncation == Truncation::open;
    if (open && kernel_.norm_based()) {
      norm_hist_.assign(max_norm_ + 1, 0.0);
      for (std::int64_t i = 1; i < cells_; ++i) norm_hist_[norms_[i]] += c[i];
    }

    auto work = [&](std::int64_t begin, std::int64_t end) { rhs_cells(c, begin, end); };
    if (threads <= 1 || cells_ - 1 < 2 * threads) {
      work(1, cells_);
    } else {
      std::vector<std::thread> pool;
      const std::int64_t span = (cells_ - 1 + threads - 1) / threads;
      for (int tindex = 0; tindex < threads; ++tindex) {
        const std::int64_t b = 1 + tindex * span;
        const std::int64_t e = std::min<std::int64_t>(cells_, b + span);
        if (b < e) pool.emplace_back(work, b, e);
      }
      for (auto& th : pool) th.join();
    }

    for (std::int64_t i = 1; i < cells_; ++i)
      dc[i] = gain_[i] - c[i] * loss_factor_[i] + zeta_[i];

    if (open) {
      // leak rate = mass removed by losses minus mass redeposited by gains
      for (std::int64_t i = 1; i < cells_; ++i) {
        const double removed = c[i] * loss_factor_[i];
        const double deposited = gain_[i];
        if (removed == 0.0 && deposited == 0.0) continue;
        for (int j = 0; j < d; ++j)
          dlost[j] += coords_[i * d + j] * (removed - deposited);
      }
    }
  }

  GridState initial_state(const SignedDiscreteMeasure& f0) const {
    GridState s;
    s.density = to_density(f0, "initial datum");
    s.t = 0.0;
    s.lost_mass.assign(spec_.dim, 0.0);
    s.clamped_mass = 0.0;
    return s;
  }

  /// One RK4 step. Aborts (NumericalAbort) on a non-finite stage value;
  /// negative densities from roundoff are clamped to zero and logged.
  void step(GridState& s, int threads = 1) const {
    const double dt = spec_.dt;
    const std::int64_t m = cells_;
    k1_.assign(m, 0.0);
    k2_.assign(m, 0.0);
    k3_.assign(m, 0.0);
    k4_.assign(m, 0.0);
    stage_.assign(m, 0.0);
    std::vector<double> l1(spec_.dim), l2(spec_.dim), l3(spec_.dim), l4(spec_.dim);

    rhs(s.density, k1_, l1, threads);
    check_finite(k1_, s.t, 1);
    for (std::int64_t i = 0; i < m; ++i) stage_[i] = s.density[i] + 0.5 * dt * k1_[i];
    rhs(stage_, k2_, l2, threads);
    check_finite(k2_, s.t, 2);
    for (std::int64_t i = 0; i < m; ++i) stage_[i] = s.density[i] + 0.5 * dt * k2_[i];
    rhs(stage_, k3_, l3, threads);
    check_finite(k3_, s.t, 3);
    for (std::int64_t i = 0; i < m; ++i) stage_[i] = s.density[i] + dt * k3_[i];
    rhs(stage_, k4_, l4, threads);
    check_finite(k4_, s.t, 4);

    const double w = dt / 6.0;
    for (std::int64_t i = 0; i < m; ++i)
      s.density[i] += w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    for (int j = 0; j < spec_.dim; ++j)
      s.lost_mass[j] += w * (l1[j] + 2.0 * l2[j] + 2.0 * l3[j] + l4[j]);

    for (std::int64_t i = 1; i < m; ++i) {
      if (s.density[i] < 0.0) {
        s.clamped_mass += -s.density[i] * norms_[i];
        s.density[i] = 0.0;
      }
    }
    s.t += dt;
  }

  GridTrajectory simulate(const SignedDiscreteMeasure& f0, int threads = 1) const {
    GridTrajectory traj;
    traj.spec = spec_;
    GridState s = initial_state(f0);
    const long long total = spec_.steps();
    auto snap = [&](const GridState& st, long long i) {
      traj.snapshots.push_back(
          GridSnapshot{i * spec_.dt, st.density, st.lost_mass, st.clamped_mass});
    };
    snap(s, 0);
    for (long long i = 1; i <= total; ++i) {
      step(s, threads);
      s.t = static_cast<double>(i) * spec_.dt;  // keep time exact, not accumulated
      if (i % spec_.output_every == 0 || i == total) snap(s, i);
    }
    return traj;
  }

  MeasureTrajectory to_measures(const GridTrajectory& traj) const {
    MeasureTrajectory mt;
    mt.dim = spec_.dim;
    mt.dt_hint = spec_.dt;
    for (const auto& snap : traj.snapshots)
      mt.snapshots.push_back(MeasureSnapshot{snap.t, to_measure(snap.density), snap.lost_mass});
    return mt;
  }

 private:
  void rhs_cells(const std::vector<double>& c, std::int64_t begin, std::int64_t end) const {
    const int d = spec_.dim;
    const bool open = spec_.truncation == Truncation::open;
    const bool tabulated = kernel_.norm_based();
    const int w = max_norm_ + 1;
    const double* tab = rate_table_.data();
    std::array<int, kMaxGridDim> bound{};

    for (std::int64_t fx = begin; fx < end; ++fx) {
      const int* xc = coords_.data() + fx * d;
      const int nx = norms_[fx];

      double g = 0.0;
      for (int j = 0; j < d; ++j) bound[j] = xc[j];
      if (tabulated) {
        detail::scan_box(d, bound.data(), strides_.data(), [&](std::int64_t fy, int ny) {
          if (fy == 0 || fy == fx) return;
          g += tab[static_cast<std::size_t>(ny) * w + (nx - ny)] * c[fy] * c[fx - fy];
        });
      } else {
        detail::scan_box(d, bound.data(), strides_.data(), [&](std::int64_t fy, int ny) {
          (void)ny;
          if (fy == 0 || fy == fx) return;
          if (c[fy] == 0.0 || c[fx - fy] == 0.0) return;
          g += kernel_.evaluate_span(cell_span(fy), cell_span(fx - fy)) * c[fy] * c[fx - fy];
        });
      }
      gain_[fx] = 0.5 * g;

      double L = 0.0;
      if (!open) {
        for (int j = 0; j < d; ++j) bound[j] = spec_.extent - xc[j];
        if (tabulated) {
          const double* row = tab + static_cast<std::size_t>(nx) * w;
          detail::scan_box(d, bound.data(), strides_.data(), [&](std::int64_t fy, int ny) {
            if (fy == 0) return;
            L += row[ny] * c[fy];
          });
        } else {
          detail::scan_box(d, bound.data(), strides_.data(), [&](std::int64_t fy, int ny) {
            (void)ny;
            if (fy == 0 || c[fy] == 0.0) return;
            L += kernel_.evaluate_span(cell_span(fx), cell_span(fy)) * c[fy];
          });
        }
      } else if (tabulated) {
        const double* row = tab + static_cast<std::size_t>(nx) * w;
        for (int s = 1; s <= max_norm_; ++s) L += row[s] * norm_hist_[s];
      } else {
        for (std::int64_t fy = 1; fy < cells_; ++fy) {
          if (c[fy] == 0.0) continue;
          L += kernel_.evaluate_span(cell_span(fx), cell_span(fy)) * c[fy];
        }
      }
      loss_factor_[fx] = L;
    }
  }

  std::span<const double> cell_span(std::int64_t flat) const {
    return {fcoords_.data() + flat * spec_.dim, static_cast<std::size_t>(spec_.dim)};
  }

  void check_finite(const std::vector<double>& v, double t, int stage) const {
    for (std::int64_t i = 0; i < cells_; ++i)
      if (!std::isfinite(v[i]))
        throw NumericalAbort("non-finite density derivative at t = " + std::to_string(t) +
                             ", RK stage " + std::to_string(stage) + ", cell " +
                             std::to_string(i));
  }

  GridSpec spec_;
  Kernel kernel_;
  std::vector<std::int64_t> strides_;
  std::int64_t cells_ = 0;
  int max_norm_ = 0;
  std::vector<int> coords_;       // cells x dim lattice coordinates
  std::vector<double> fcoords_;   // same, as doubles, for kernel spans
  std::vector<int> norms_;        // per-cell l1 norm
  std::vector<double> rate_table_;
  std::vector<double> zeta_;
  std::vector<double> zeta_mass_;

  // scratch; solver instances are not shared across threads
  mutable std::vector<double> gain_, loss_factor_, norm_hist_;
  mutable std::vector<double> k1_, k2_, k3_, k4_, stage_;
};

}  // namespace multicoag
