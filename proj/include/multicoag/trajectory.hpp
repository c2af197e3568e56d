#pragma once

// Solver-agnostic trajectory view used by the diagnostics: a time series of
// discrete measures plus the per-component mass that has left the domain
// (lattice leak for open truncation, bin overflow for particle runs).

#include <vector>

#include "multicoag/measures.hpp"

namespace multicoag {

struct MeasureSnapshot {
  double t = 0.0;
  SignedDiscreteMeasure f;
  std::vector<double> lost_mass;
};

struct MeasureTrajectory {
  std::size_t dim = 0;
  std::vector<MeasureSnapshot> snapshots;
  double dt_hint = 0.0;  // integrator step, when the producer has one
};

}  // namespace multicoag
