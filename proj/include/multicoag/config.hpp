#pragma once

// Run configuration: one JSON document per run, strictly validated (unknown
// keys are errors, never ignored). The grammar is documented in the README;
// the parsed form carries everything a batch run needs.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "multicoag/grid_solver.hpp"
#include "multicoag/kernels.hpp"
#include "multicoag/measures.hpp"
#include "multicoag/ssa_solver.hpp"

namespace multicoag {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SolverChoice { grid, ssa, both };

struct DiagnosticSpec {
  std::string check;
  double tol = 1e-8;
  double alpha = 0.0;
  double beta = 0.0;
  double k = 2.0;
  double delta = 0.5;
  double cap = 2.0;
  double safety = 50.0;
  std::string phi = "square";
};

struct RunConfig {
  std::size_t dimension = 1;
  std::uint64_t seed = 0;
  std::string output = "out";
  Kernel kernel = Kernel::constant(1.0);
  SignedDiscreteMeasure init;
  SignedDiscreteMeasure source;
  SolverChoice solver = SolverChoice::grid;
  std::optional<GridSpec> grid;
  std::optional<SsaSpec> ssa;
  std::vector<DiagnosticSpec> diagnostics;
  nlohmann::json raw;  // the parsed document, for manifests
};

namespace detail {

using nlohmann::json;

inline void expect_keys(const json& obj, const std::string& where,
                        std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) known = true;
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + ": missing required key '" + key + "'");
  return *it;
}

inline double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline double number_or(const json& obj, const char* key, double fallback,
                        const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return it->get<double>();
}

inline long long require_integer(const json& obj, const char* key, const std::string& where) {
  const double v = require_number(obj, key, where);
  if (v != std::floor(v)) throw ConfigError(where + ": '" + key + "' must be an integer");
  return static_cast<long long>(v);
}

inline long long integer_or(const json& obj, const char* key, long long fallback,
                            const std::string& where) {
  if (obj.find(key) == obj.end()) return fallback;
  return require_integer(obj, key, where);
}

inline std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

inline SignedDiscreteMeasure parse_measure(const json& arr, std::size_t dim,
                                           const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + ": expected an array of atoms");
  std::vector<Atom> atoms;
  for (const auto& rec : arr) {
    if (!rec.is_object()) throw ConfigError(where + ": atom records must be objects");
    expect_keys(rec, where, {"point", "weight"});
    const json& pt = require(rec, "point", where);
    if (!pt.is_array() || pt.size() != dim)
      throw ConfigError(where + ": atom point must be an array of length " + std::to_string(dim));
    std::vector<double> coords;
    for (const auto& c : pt) {
      if (!c.is_number()) throw ConfigError(where + ": point coordinates must be numbers");
      coords.push_back(c.get<double>());
    }
    const double w = require_number(rec, "weight", where);
    if (w < 0.0) throw ConfigError(where + ": atom weights must be >= 0");
    if (w == 0.0) continue;
    try {
      atoms.push_back(Atom{CompositionVector(std::move(coords)), w});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return SignedDiscreteMeasure::from_atoms(dim, std::move(atoms));
}

inline Kernel parse_kernel(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::string type = require_string(obj, "type", where);
  try {
    if (type == "constant") {
      expect_keys(obj, where, {"type", "value"});
      return Kernel::constant(require_number(obj, "value", where));
    }
    if (type == "brownian") {
      expect_keys(obj, where, {"type"});
      return Kernel::brownian();
    }
    if (type == "product_envelope") {
      expect_keys(obj, where, {"type", "coeff", "theta1", "theta2"});
      return Kernel::product_envelope(number_or(obj, "coeff", 1.0, where),
                                      require_number(obj, "theta1", where),
                                      require_number(obj, "theta2", where));
    }
    if (type == "multiplicative") {
      expect_keys(obj, where, {"type"});
      return Kernel::multiplicative();
    }
    if (type == "user_table") {
      expect_keys(obj, where, {"type", "table", "c_u", "theta1", "theta2", "outside_class"});
      const json& tbl = require(obj, "table", where);
      if (!tbl.is_array()) throw ConfigError(where + ": 'table' must be an array of arrays");
      std::vector<std::vector<double>> table;
      for (const auto& row : tbl) {
        if (!row.is_array()) throw ConfigError(where + ": 'table' must be an array of arrays");
        std::vector<double> r;
        for (const auto& v : row) r.push_back(v.get<double>());
        table.push_back(std::move(r));
      }
      bool outside = false;
      if (auto it = obj.find("outside_class"); it != obj.end()) outside = it->get<bool>();
      return Kernel::user_table(std::move(table), require_number(obj, "c_u", where),
                                require_number(obj, "theta1", where),
                                require_number(obj, "theta2", where), outside);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown kernel type '" + type + "'");
}

inline GridSpec parse_grid(const json& obj, std::size_t dim, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  expect_keys(obj, where, {"extent", "truncation", "dt", "t_end", "output_every"});
  GridSpec spec;
  spec.dim = static_cast<int>(dim);
  spec.extent = static_cast<int>(require_integer(obj, "extent", where));
  const std::string trunc = require_string(obj, "truncation", where);
  if (trunc == "closed")
    spec.truncation = Truncation::closed;
  else if (trunc == "open")
    spec.truncation = Truncation::open;
  else
    throw ConfigError(where + ": truncation must be 'closed' or 'open'");
  spec.dt = require_number(obj, "dt", where);
  spec.t_end = require_number(obj, "t_end", where);
  spec.output_every = static_cast<int>(integer_or(obj, "output_every", 1, where));
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

inline SsaSpec parse_ssa(const json& obj, const std::optional<GridSpec>& grid,
                         std::uint64_t seed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  expect_keys(obj, where,
              {"volume", "replicas", "t_end", "snapshot_dt", "extent", "recompute_interval"});
  SsaSpec spec;
  spec.volume = require_number(obj, "volume", where);
  spec.replicas = static_cast<int>(integer_or(obj, "replicas", 1, where));
  spec.t_end = require_number(obj, "t_end", where);
  spec.snapshot_dt = require_number(obj, "snapshot_dt", where);
  spec.recompute_interval =
      static_cast<int>(integer_or(obj, "recompute_interval", 10000, where));
  spec.seed = seed;
  if (obj.find("extent") != obj.end()) {
    spec.lattice_extent = static_cast<int>(require_integer(obj, "extent", where));
  } else if (grid) {
    spec.lattice_extent = grid->extent;
  } else {
    throw ConfigError(where + ": 'extent' is required when no grid block is present");
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

inline DiagnosticSpec parse_diagnostic(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  DiagnosticSpec d;
  d.check = require_string(obj, "check", where);
  if (d.check == "mass_conservation") {
    expect_keys(obj, where, {"check", "tol"});
    d.tol = number_or(obj, "tol", 1e-8, where);
  } else if (d.check == "sublinear_moment") {
    expect_keys(obj, where, {"check", "alpha", "beta", "tol"});
    d.alpha = require_number(obj, "alpha", where);
    d.beta = require_number(obj, "beta", where);
    d.tol = number_or(obj, "tol", 1e-8, where);
    if (!(d.alpha <= 1.0 && d.beta <= 1.0))
      throw ConfigError(where + ": sublinear_moment requires alpha, beta <= 1");
  } else if (d.check == "phi_moment") {
    expect_keys(obj, where, {"check", "phi", "alpha", "tol"});
    d.phi = require_string(obj, "phi", where);
    if (d.phi != "square" && d.phi != "identity")
      throw ConfigError(where + ": phi must be 'square' or 'identity'");
    d.alpha = require_number(obj, "alpha", where);
    if (!(d.alpha > 0.0)) throw ConfigError(where + ": phi_moment requires alpha > 0");
    d.tol = number_or(obj, "tol", 1e-8, where);
  } else if (d.check == "moment_growth") {
    expect_keys(obj, where, {"check", "k"});
    d.k = require_number(obj, "k", where);
    if (!(d.k > 1.0)) throw ConfigError(where + ": moment_growth requires k > 1");
  } else if (d.check == "time_lipschitz") {
    expect_keys(obj, where, {"check"});
  } else if (d.check == "weak_residual") {
    expect_keys(obj, where, {"check", "phi", "cap", "safety"});
    d.phi = require_string(obj, "phi", where);
    if (d.phi != "capped_size") throw ConfigError(where + ": phi must be 'capped_size'");
    d.cap = number_or(obj, "cap", 2.0, where);
    if (!(d.cap > 0.0)) throw ConfigError(where + ": cap must be > 0");
    d.safety = number_or(obj, "safety", 50.0, where);
  } else if (d.check == "localisation") {
    expect_keys(obj, where, {"check", "delta"});
    d.delta = number_or(obj, "delta", 0.5, where);
    if (!(d.delta > 0.0 && d.delta < 1.0))
      throw ConfigError(where + ": localisation requires delta in (0,1)");
  } else {
    throw ConfigError(where + ": unknown check '" + d.check + "'");
  }
  if (!(d.tol > 0.0)) throw ConfigError(where + ": tolerances must be positive");
  return d;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  detail::expect_keys(doc, "config",
                      {"dimension", "seed", "output", "kernel", "init", "source", "solver",
                       "grid", "ssa", "diagnostics"});

  RunConfig cfg;
  cfg.raw = doc;
  const double dim = detail::require_number(doc, "dimension", "config");
  if (dim < 1 || dim > kMaxGridDim || dim != std::floor(dim))
    throw ConfigError("config: dimension must be an integer in 1..8");
  cfg.dimension = static_cast<std::size_t>(dim);
  cfg.seed = static_cast<std::uint64_t>(detail::number_or(doc, "seed", 0, "config"));
  if (auto it = doc.find("output"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("config: 'output' must be a string");
    cfg.output = it->get<std::string>();
  }

  cfg.kernel = detail::parse_kernel(detail::require(doc, "kernel", "config"), "kernel");
  cfg.init = detail::parse_measure(detail::require(doc, "init", "config"), cfg.dimension, "init");
  if (auto it = doc.find("source"); it != doc.end())
    cfg.source = detail::parse_measure(*it, cfg.dimension, "source");
  else
    cfg.source = SignedDiscreteMeasure(cfg.dimension);

  const std::string solver = detail::require_string(doc, "solver", "config");
  if (solver == "grid")
    cfg.solver = SolverChoice::grid;
  else if (solver == "ssa")
    cfg.solver = SolverChoice::ssa;
  else if (solver == "both")
    cfg.solver = SolverChoice::both;
  else
    throw ConfigError("config: solver must be 'grid', 'ssa' or 'both'");

  if (auto it = doc.find("grid"); it != doc.end())
    cfg.grid = detail::parse_grid(*it, cfg.dimension, "grid");
  if (auto it = doc.find("ssa"); it != doc.end())
    cfg.ssa = detail::parse_ssa(*it, cfg.grid, cfg.seed, "ssa");

  if ((cfg.solver == SolverChoice::grid || cfg.solver == SolverChoice::both) && !cfg.grid)
    throw ConfigError("config: solver requires a 'grid' block");
  if ((cfg.solver == SolverChoice::ssa || cfg.solver == SolverChoice::both) && !cfg.ssa)
    throw ConfigError("config: solver requires an 'ssa' block");
  if (cfg.solver == SolverChoice::both && cfg.kernel.outside_class())
    throw ConfigError("config: the comparison harness refuses kernels outside the "
                      "uniqueness class");

  if (auto it = doc.find("diagnostics"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("config: 'diagnostics' must be an array");
    for (const auto& entry : *it)
      cfg.diagnostics.push_back(detail::parse_diagnostic(entry, "diagnostics"));
  }
  return cfg;
}

}  // namespace multicoag
