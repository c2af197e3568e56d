#pragma once

// Trajectory-level checks: conservation of the componentwise mass line,
// monotone sublinear and convex-negative moments, directional localisation
// summaries, the time-Lipschitz property of solutions, the integrated weak
// form residual, and the two-trajectory agreement harness.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "multicoag/coagulation.hpp"
#include "multicoag/measures.hpp"
#include "multicoag/trajectory.hpp"

namespace multicoag {

struct CheckReport {
  std::string name;
  bool pass = false;
  double worst_violation = 0.0;  // <= tolerance iff pass
  double tolerance = 0.0;
  double at_time = 0.0;
  std::string location;
  std::string context;
};

namespace detail {

inline std::string format_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Componentwise mass line: mass(t) + lost(t) = mass(t0) + lost(t0)
// + (t - t0) * mass(source). The baseline is the trajectory's own first
// snapshot, so the statement is pathwise: a particle run is held to its own
// sampled initial state, not to the nominal one (which it matches only in
// expectation). The nominal initial datum enters the relative scale.

inline CheckReport mass_conservation_residual(const MeasureTrajectory& traj,
                                              const SignedDiscreteMeasure& f0,
                                              const SignedDiscreteMeasure& zeta,
                                              double tol = 1e-8) {
  if (traj.snapshots.empty())
    throw std::invalid_argument("mass conservation residual requires snapshots");
  CheckReport report;
  report.name = "mass-conservation";
  report.tolerance = tol;
  const auto& first = traj.snapshots.front();
  auto m0 = first.f.mass_vector();
  for (std::size_t j = 0; j < m0.size(); ++j)
    if (!first.lost_mass.empty()) m0[j] += first.lost_mass[j];
  const auto mz = zeta.mass_vector();
  const auto nominal = f0.mass_vector();
  const double t_end = traj.snapshots.back().t;
  double scale = 0.0;
  for (std::size_t j = 0; j < m0.size(); ++j)
    scale = std::max(scale, std::abs(nominal[j]) + t_end * std::abs(mz[j]));
  scale = std::max(scale, 1e-300);

  for (const auto& snap : traj.snapshots) {
    const auto mt = snap.f.mass_vector();
    for (std::size_t j = 0; j < m0.size(); ++j) {
      const double lost = snap.lost_mass.empty() ? 0.0 : snap.lost_mass[j];
      const double residual =
          std::abs(mt[j] + lost - m0[j] - (snap.t - first.t) * mz[j]) / scale;
      if (residual > report.worst_violation) {
        report.worst_violation = residual;
        report.at_time = snap.t;
        report.location = "component " + std::to_string(j);
      }
    }
  }
  report.pass = report.worst_violation <= tol;
  return report;
}

// ---------------------------------------------------------------------------
// Initial mass direction on the simplex.

inline std::vector<double> theta0(const SignedDiscreteMeasure& f0) {
  auto m = f0.mass_vector();
  double total = 0.0;
  for (double v : m) total += v;
  if (!(total > 0.0)) throw std::invalid_argument("theta0 requires a measure with positive mass");
  for (double& v : m) v /= total;
  return m;
}

struct LocalisationParams {
  double gamma = 0.0;             // kernel growth exponent, < 1
  double delta = 0.5;             // window/cone width, in (0,1)
  std::vector<double> direction;  // theta0, on the simplex

  void validate() const {
    if (!(gamma < 1.0)) throw std::invalid_argument("localisation requires gamma < 1");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("localisation requires delta in (0,1)");
    double total = 0.0;
    for (double v : direction) {
      if (v < 0.0) throw std::invalid_argument("localisation direction must be >= 0");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("localisation direction must lie on the simplex");
  }
};

/// Fraction of the size-weighted measure inside the scaling window
/// delta t^{1/(1-gamma)} <= |x| <= t^{1/(1-gamma)}/delta intersected with the
/// l1 cone |x/|x| - theta0|_1 <= delta. Both sets are closed.
inline double localisation_fraction(const SignedDiscreteMeasure& f, double t,
                                    const LocalisationParams& p) {
  p.validate();
  if (!(t > 0.0)) throw std::invalid_argument("localisation_fraction requires t > 0");
  const double typical = std::pow(t, 1.0 / (1.0 - p.gamma));
  const double lo = p.delta * typical;
  const double hi = typical / p.delta;
  double inside = 0.0, total = 0.0;
  for (const auto& a : f.atoms()) {
    const double size = a.point.l1_norm();
    const double weighted = size * a.weight;
    total += weighted;
    if (size < lo || size > hi) continue;
    double dist = 0.0;
    for (std::size_t j = 0; j < f.dim(); ++j) dist += std::abs(a.point[j] / size - p.direction[j]);
    if (dist <= p.delta) inside += weighted;
  }
  return total != 0.0 ? inside / total : 0.0;
}

struct DirectionStats {
  std::vector<double> mean_direction;
  double directional_variance = 0.0;
};

inline DirectionStats direction_stats(const SignedDiscreteMeasure& f,
                                      const std::vector<double>& direction) {
  if (direction.size() != f.dim())
    throw std::invalid_argument("direction dimension mismatch");
  double denom = 0.0;
  std::vector<double> mass(f.dim(), 0.0);
  double var = 0.0;
  for (const auto& a : f.atoms()) {
    const double size = a.point.l1_norm();
    denom += size * a.weight;
    double dist = 0.0;
    for (std::size_t j = 0; j < f.dim(); ++j) {
      mass[j] += a.point[j] * a.weight;
      dist += std::abs(a.point[j] / size - direction[j]);
    }
    var += size * dist * dist * a.weight;
  }
  if (denom == 0.0) throw std::invalid_argument("direction_stats requires nonzero l1 mass");
  DirectionStats out;
  out.mean_direction = std::move(mass);
  for (double& v : out.mean_direction) v /= denom;
  out.directional_variance = var / denom;
  return out;
}

// ---------------------------------------------------------------------------
// Monotone moments along a trajectory. For alpha, beta <= 1 the two-branch
// weight is subadditive, so its integral can only decrease under coagulation
// and grow linearly from the source.

inline CheckReport sublinear_moment_check(const MeasureTrajectory& traj,
                                          const SignedDiscreteMeasure& f0,
                                          const SignedDiscreteMeasure& zeta,
                                          const WeightParams& p, double tol = 1e-8) {
  if (!(p.alpha <= 1.0 && p.beta <= 1.0))
    throw std::invalid_argument("sublinear moment check requires alpha, beta <= 1");
  CheckReport report;
  {
    std::ostringstream name;
    name << "sublinear-moment(alpha=" << p.alpha << ",beta=" << p.beta << ")";
    report.name = name.str();
  }
  report.tolerance = tol;
  const double base = weighted_norm(f0, p);
  const double zrate = weighted_norm(zeta, p);
  for (const auto& snap : traj.snapshots) {
    const double lhs = weighted_norm(snap.f, p);
    const double rhs = base + snap.t * zrate;
    const double violation = (lhs - rhs) / std::max(rhs, 1e-300);
    if (violation > report.worst_violation) {
      report.worst_violation = violation;
      report.at_time = snap.t;
    }
  }
  report.pass = report.worst_violation <= tol;
  return report;
}

/// Moment of Phi(|x|^-alpha) for convex nondecreasing Phi with Phi(0) = 0;
/// also monotone apart from the linear source contribution.
inline CheckReport phi_moment_check(const MeasureTrajectory& traj,
                                    const SignedDiscreteMeasure& f0,
                                    const SignedDiscreteMeasure& zeta,
                                    const std::function<double(double)>& phi, double alpha,
                                    double tol = 1e-8) {
  if (!(alpha > 0.0)) throw std::invalid_argument("phi moment check requires alpha > 0");
  if (!phi) throw std::invalid_argument("phi moment check requires a function");
  CheckReport report;
  report.name = "convex-negative-moment(alpha=" + detail::format_time(alpha) + ")";
  report.tolerance = tol;
  auto value = [&](const SignedDiscreteMeasure& m) {
    double s = 0.0;
    for (const auto& a : m.atoms()) s += phi(std::pow(a.point.l1_norm(), -alpha)) * a.weight;
    return s;
  };
  const double base = value(f0);
  const double zrate = value(zeta);
  if (!std::isfinite(base) || !std::isfinite(zrate))
    throw std::invalid_argument("phi moment check requires finite initial moments");
  for (const auto& snap : traj.snapshots) {
    const double lhs = value(snap.f);
    const double rhs = base + snap.t * zrate;
    const double violation = (lhs - rhs) / std::max(std::abs(rhs), 1e-300);
    if (violation > report.worst_violation) {
      report.worst_violation = violation;
      report.at_time = snap.t;
    }
  }
  report.pass = report.worst_violation <= tol;
  return report;
}

// ---------------------------------------------------------------------------
// Superlinear moment growth is reported, never asserted: the bounding
// constants are non-constructive, so we fit |x|^k-moment growth against
// (1 + t)^b and hand back the series.

struct MomentGrowthReport {
  double k = 0.0;
  std::vector<double> times;
  std::vector<double> values;
  double fitted_exponent = 0.0;  // least-squares b in log M_k = a + b log(1+t)
};

inline MomentGrowthReport higher_moment_report(const MeasureTrajectory& traj, double k) {
  MomentGrowthReport report;
  report.k = k;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& snap : traj.snapshots) {
    const double v = snap.f.moment(k);
    report.times.push_back(snap.t);
    report.values.push_back(v);
    if (v > 0.0) {
      const double x = std::log1p(snap.t);
      const double y = std::log(v);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  }
  const double denom = n > 1 ? static_cast<double>(n) * sxx - sx * sx : 0.0;
  report.fitted_exponent = denom != 0.0 ? (static_cast<double>(n) * sxy - sx * sy) / denom : 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Time-Lipschitz property: the weighted distance between snapshots grows at
// most linearly in the gap. The estimate must be finite and stable when the
// snapshot set is coarsened by a factor of two.

struct TimeLipschitzResult {
  CheckReport report;
  double fitted_constant = 0.0;
};

inline TimeLipschitzResult time_lipschitz_check(const MeasureTrajectory& traj,
                                                const WeightParams& p) {
  if (traj.snapshots.size() < 3)
    throw std::invalid_argument("time_lipschitz_check requires at least 3 snapshots");
  CheckReport report;
  report.name = "time-lipschitz";
  auto estimate = [&](std::size_t stride) {
    double best = 0.0;
    for (std::size_t i = 0; i < traj.snapshots.size(); i += stride) {
      for (std::size_t j = i + stride; j < traj.snapshots.size(); j += stride) {
        const auto& a = traj.snapshots[i];
        const auto& b = traj.snapshots[j];
        const double gap = std::abs(b.t - a.t);
        if (gap <= 0.0) continue;
        best = std::max(best, weighted_distance(a.f, b.f, p) / gap);
      }
    }
    return best;
  };
  const double fine = estimate(1);
  const double coarse = estimate(2);
  const double ratio = coarse > 0.0 ? fine / coarse : (fine > 0.0 ? HUGE_VAL : 1.0);
  const double stability = std::max(ratio, 1.0 / std::max(ratio, 1e-300));
  report.worst_violation = stability;
  report.tolerance = 2.0;
  report.pass = std::isfinite(fine) && stability < 2.0;
  {
    std::ostringstream os;
    os << "fitted constant " << fine << ", coarse/fine stability ratio " << ratio;
    report.context = os.str();
  }
  return TimeLipschitzResult{std::move(report), fine};
}

// ---------------------------------------------------------------------------
// Integrated weak-form residual. With snapshots every h and solver step dt,
// the identity
//   <f_t, phi> = <f_0, phi> + int_0^t <Q(f_s, f_s), phi> ds + t <zeta, phi>
// holds up to O(dt^4) integration error plus O(h^4) quadrature error, so the
// acceptance bound is safety * (dt^4 + h^4) * scale. Quadrature: composite
// Simpson for even interval counts, Simpson plus one 3/8 panel for odd
// counts >= 3 (still fourth order); a two-snapshot trajectory only supports
// a trapezoid, which widens the tolerance by an O(h^2) term.

inline constexpr double kWeakResidualSafety = 50.0;

template <class Fn>
CheckReport weak_solution_residual(const MeasureTrajectory& traj, const Kernel& kernel,
                                   const SignedDiscreteMeasure& f0,
                                   const SignedDiscreteMeasure& zeta, const Fn& phi,
                                   double safety = kWeakResidualSafety) {
  if (traj.snapshots.size() < 2)
    throw std::invalid_argument("weak residual requires at least 2 snapshots");
  const std::size_t n = traj.snapshots.size();
  const double h = traj.snapshots[1].t - traj.snapshots[0].t;
  for (std::size_t j = 1; j < n; ++j) {
    const double gap = traj.snapshots[j].t - traj.snapshots[j - 1].t;
    if (std::abs(gap - h) > 1e-9 * std::max(1.0, h))
      throw std::invalid_argument("weak residual requires equally spaced snapshots");
  }

  std::vector<double> q(n);
  for (std::size_t j = 0; j < n; ++j)
    q[j] = weak_apply(kernel, traj.snapshots[j].f, traj.snapshots[j].f, phi);

  const double phi_f0 = pair(f0, phi);
  const double phi_zeta = pair(zeta, phi);

  CheckReport report;
  report.name = "weak-form-residual";
  bool trapezoid_used = false;
  double scale = std::abs(phi_f0);
  for (std::size_t j = 1; j < n; ++j) {
    double integral = 0.0;
    if (j % 2 == 0) {
      for (std::size_t i = 0; i + 2 <= j; i += 2)
        integral += h / 3.0 * (q[i] + 4.0 * q[i + 1] + q[i + 2]);
    } else if (j >= 3) {
      for (std::size_t i = 0; i + 2 <= j - 3; i += 2)
        integral += h / 3.0 * (q[i] + 4.0 * q[i + 1] + q[i + 2]);
      integral += 3.0 * h / 8.0 * (q[j - 3] + 3.0 * q[j - 2] + 3.0 * q[j - 1] + q[j]);
    } else if (j == 1 && n == 2) {
      integral = 0.5 * h * (q[0] + q[1]);
      trapezoid_used = true;
    } else {
      continue;  // j == 1 inside a longer trajectory: no fourth-order rule
    }
    const double t = traj.snapshots[j].t;
    const double lhs = pair(traj.snapshots[j].f, phi);
    const double rhs = phi_f0 + integral + t * phi_zeta;
    const double residual = std::abs(lhs - rhs);
    scale = std::max(scale, std::abs(lhs));
    if (residual > report.worst_violation) {
      report.worst_violation = residual;
      report.at_time = t;
    }
  }
  scale = std::max(scale, 1e-300);
  const double dt = traj.dt_hint > 0.0 ? traj.dt_hint : h;
  double tol = safety * (std::pow(dt, 4) + std::pow(h, 4)) * scale;
  if (trapezoid_used) tol += safety * h * h * scale;
  report.tolerance = tol;
  report.pass = report.worst_violation <= tol;
  {
    std::ostringstream os;
    os << "scale " << scale << ", dt " << dt << ", snapshot spacing " << h
       << (trapezoid_used ? ", trapezoid fallback in use" : "");
    report.context = os.str();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Agreement of two trajectories in a weighted total-variation distance. The
// tolerance series is the sum of the callers' error budgets (deterministic
// discretization plus statistical three-sigma, as applicable).

struct CompareResult {
  CheckReport report;
  std::vector<double> times;
  std::vector<double> distances;
};

inline CompareResult uniqueness_compare(const MeasureTrajectory& a, const MeasureTrajectory& b,
                                        const WeightParams& p,
                                        const std::vector<double>& tol_series) {
  if (a.dim != b.dim) throw std::invalid_argument("trajectory dimension mismatch");
  if (a.snapshots.size() != b.snapshots.size() || a.snapshots.size() != tol_series.size())
    throw std::invalid_argument("trajectory snapshot counts do not match");
  CompareResult out;
  out.report.name = "trajectory-agreement";
  out.report.pass = true;
  for (std::size_t j = 0; j < a.snapshots.size(); ++j) {
    if (std::abs(a.snapshots[j].t - b.snapshots[j].t) > 1e-9)
      throw std::invalid_argument("trajectory snapshot times do not match");
    const double d = weighted_distance(a.snapshots[j].f, b.snapshots[j].f, p);
    out.times.push_back(a.snapshots[j].t);
    out.distances.push_back(d);
    const double tol = tol_series[j];
    const double excess = tol > 0.0 ? d / tol : (d > 0.0 ? HUGE_VAL : 0.0);
    if (excess > out.report.worst_violation) {
      out.report.worst_violation = excess;
      out.report.at_time = a.snapshots[j].t;
    }
    if (d > tol) out.report.pass = false;
  }
  out.report.tolerance = 1.0;  // worst_violation is the distance/budget ratio
  return out;
}

}  // namespace multicoag
