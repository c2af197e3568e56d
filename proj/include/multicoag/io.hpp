#pragma once

// File emission: trajectory CSV (17 significant digits, so doubles
// round-trip exactly), run manifests, and diagnostic reports as JSON.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "multicoag/diagnostics.hpp"
#include "multicoag/grid_solver.hpp"
#include "multicoag/ssa_solver.hpp"

namespace multicoag {

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Small row-major lattice indexer shared by the CSV writers.
struct LatticeIndexer {
  int dim = 1;
  int extent = 1;
  std::vector<std::int64_t> strides;
  std::int64_t cells = 0;

  LatticeIndexer(int d, int n) : dim(d), extent(n), strides(d, 1) {
    for (int j = d - 2; j >= 0; --j) strides[j] = strides[j + 1] * (n + 1);
    cells = strides[0] * (n + 1);
  }

  std::int64_t flat_of(const CompositionVector& p) const {
    std::int64_t flat = 0;
    for (int j = 0; j < dim; ++j) {
      const double k = std::round(p[j]);
      if (k < 0 || k > extent) return -1;
      flat += static_cast<std::int64_t>(k) * strides[j];
    }
    return flat;
  }
};

// One row per snapshot: t, densities in row-major lattice order (origin
// skipped), lost-mass components, cumulative clamped mass.
inline std::string grid_trajectory_csv(const GridTrajectory& traj) {
  std::string out;
  for (const auto& snap : traj.snapshots) {
    out += format_g17(snap.t);
    for (std::size_t i = 1; i < snap.density.size(); ++i) {
      out += ',';
      out += format_g17(snap.density[i]);
    }
    for (double v : snap.lost_mass) {
      out += ',';
      out += format_g17(v);
    }
    out += ',';
    out += format_g17(snap.clamped_mass);
    out += '\n';
  }
  return out;
}

// One row per snapshot: t, per-cell replica means in row-major lattice order
// (origin skipped), then the matching per-cell standard errors, then the
// replica-mean overflow mass components.
inline std::string ssa_trajectory_csv(const SsaRunResult& run, int dim, int extent) {
  const LatticeIndexer indexer(dim, extent);
  std::string out;
  std::vector<double> dense(indexer.cells, 0.0);
  for (std::size_t s = 0; s < run.times.size(); ++s) {
    out += format_g17(run.times[s]);
    for (const auto* traj : {&run.mean_binned, &run.se_binned}) {
      std::fill(dense.begin(), dense.end(), 0.0);
      for (const auto& a : traj->snapshots[s].f.atoms()) {
        const std::int64_t flat = indexer.flat_of(a.point);
        if (flat > 0) dense[flat] = a.weight;
      }
      for (std::int64_t i = 1; i < indexer.cells; ++i) {
        out += ',';
        out += format_g17(dense[i]);
      }
    }
    for (double v : run.mean_binned.snapshots[s].lost_mass) {
      out += ',';
      out += format_g17(v);
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::json report_to_json(const CheckReport& r) {
  return nlohmann::json{{"name", r.name},
                        {"pass", r.pass},
                        {"worst_violation", r.worst_violation},
                        {"tolerance", r.tolerance},
                        {"at_time", r.at_time},
                        {"location", r.location},
                        {"context", r.context}};
}

inline nlohmann::json reports_to_json(const std::vector<CheckReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr;
}

}  // namespace multicoag
