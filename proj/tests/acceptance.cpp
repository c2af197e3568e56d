// Acceptance suite: end-to-end checks against closed forms, hand-derived
// bounds, statistical oracles and the CLI itself. One pass/fail line per
// criterion; the exit code is the number of failures.
//
// Usage: multicoag_acceptance <cli-binary> <configs-dir> <scratch-dir>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "multicoag/config.hpp"
#include "multicoag/diagnostics.hpp"
#include "multicoag/grid_solver.hpp"
#include "multicoag/property_suites.hpp"
#include "multicoag/ssa_solver.hpp"

namespace fs = std::filesystem;
using namespace multicoag;

namespace {

int g_index = 0;
int g_failures = 0;

void record(bool pass, const std::string& name, const std::string& detail) {
  ++g_index;
  std::cout << "[" << (g_index < 10 ? " " : "") << g_index << "/10] "
            << (pass ? "PASS" : "FAIL") << " " << name << " (" << detail << ")" << std::endl;
  if (!pass) ++g_failures;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

RunConfig load(const fs::path& configs, const char* name) {
  std::ifstream in(configs / name, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("missing config ") + name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

double closed_form(int k, double t) {
  return std::pow(t, k - 1) / std::pow(1.0 + t, k + 1);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::cerr << "usage: multicoag_acceptance <cli-binary> <configs-dir> <scratch-dir>\n";
    return 64;
  }
  const std::string cli = argv[1];
  const fs::path configs = argv[2];
  const fs::path scratch = argv[3];
  fs::create_directories(scratch);

  // 1. constant-kernel closed form at desk scale, single-threaded
  MeasureTrajectory standard_run;  // reused by criterion 6
  SignedDiscreteMeasure standard_f0(1), standard_zeta(1);
  {
    Timer timer;
    const auto cfg = load(configs, "constant_kernel_d1.json");
    GridSolver solver(*cfg.grid, cfg.kernel, cfg.source);
    const auto traj = solver.simulate(cfg.init, 1);
    const auto& final_density = traj.snapshots.back().density;
    double worst = 0.0;
    for (int k = 1; k <= cfg.grid->extent; ++k)
      worst = std::max(worst, std::abs(final_density[k] - closed_form(k, 1.0)));
    const double elapsed = timer.seconds();
    standard_run = solver.to_measures(traj);
    standard_f0 = cfg.init;
    standard_zeta = cfg.source;
    record(worst < 1e-6 && elapsed < 30.0, "constant-kernel closed form",
           "max density error " + fmt(worst) + ", " + fmt(elapsed) + " s");
  }

  // 2. componentwise mass line with a source
  {
    const auto cfg = load(configs, "brownian_source_d2.json");
    GridSolver solver(*cfg.grid, cfg.kernel, cfg.source);
    const auto traj = solver.to_measures(solver.simulate(cfg.init, 1));
    const auto report = mass_conservation_residual(traj, cfg.init, cfg.source, 1e-6);
    record(report.pass, "mass line with source",
           "worst relative residual " + fmt(report.worst_violation));
  }

  // 3. weight property suites at full sample counts
  {
    Timer timer;
    const long long n = 100000;
    const CheckReport suites[6] = {
        suite_weight_subadditivity(n, 101),      suite_truncated_weight(n, 102),
        suite_sublinear_regularization(n, 103),  suite_weight_doubling(n, 104),
        suite_convex_moment_weight(n, 105),      suite_power_weight_defect(n, 106)};
    bool pass = true;
    double worst = 0.0;
    for (const auto& s : suites) {
      pass = pass && s.pass;
      worst = std::max(worst, s.worst_violation);
    }
    const double elapsed = timer.seconds();
    record(pass && elapsed < 10.0, "weight inequality suites",
           "6 suites x 1e5 samples, worst relative violation " + fmt(worst) + ", " +
               fmt(elapsed) + " s");
  }

  // 4. weak/strong operator equivalence and mass neutrality
  {
    const auto report = suite_operator_consistency(1000, 107);
    record(report.pass, "operator weak/strong equivalence",
           "worst relative discrepancy " + fmt(report.worst_violation));
  }

  // 5. bilinear-form norm bounds with explicit constants
  {
    const auto report = suite_operator_norm_bounds(1000, 108);
    record(report.pass, "operator norm bounds",
           "worst relative excess " + fmt(report.worst_violation));
  }

  // 6. moment monotonicity along the criterion-1 trajectory
  {
    bool pass = true;
    double worst = -HUGE_VAL;
    for (const WeightParams p : {WeightParams{1.0, 1.0}, WeightParams{0.5, 0.9},
                                 WeightParams{0.0, 0.0}}) {
      const auto report = sublinear_moment_check(standard_run, standard_f0, standard_zeta, p, 1e-8);
      pass = pass && report.pass;
      worst = std::max(worst, report.worst_violation);
    }
    record(pass, "moment monotonicity", "worst relative violation " + fmt(worst));
  }

  // 7. fourth-order convergence (Richardson) on the criterion-1 problem
  {
    auto error_at = [&](double dt) {
      GridSpec spec{1, 256, Truncation::closed, dt, 1.0, 1 << 28};
      GridSolver solver(spec, Kernel::constant(2.0), SignedDiscreteMeasure(1));
      const auto traj = solver.simulate(
          SignedDiscreteMeasure::from_atoms(1, {Atom{CompositionVector{1.0}, 1.0}}), 1);
      double worst = 0.0;
      for (int k = 1; k <= 256; ++k)
        worst = std::max(worst, std::abs(traj.snapshots.back().density[k] - closed_form(k, 1.0)));
      return worst;
    };
    const double coarse = error_at(0.05);
    const double fine = error_at(0.025);
    const double ratio = coarse / fine;
    record(ratio >= 8.0 && ratio <= 32.0, "fourth-order step convergence",
           "error ratio " + fmt(ratio) + " for dt 0.05 vs 0.025");
  }

  // 8. deterministic vs stochastic agreement on first and second moments
  {
    Timer timer;
    const auto cfg = load(configs, "compare_grid_ssa.json");
    GridSolver solver(*cfg.grid, cfg.kernel, cfg.source);
    const auto grid = solver.to_measures(solver.simulate(cfg.init, 8));
    const auto ssa = run_ssa(*cfg.ssa, cfg.kernel, cfg.init, cfg.source, 8);
    bool pass = grid.snapshots.size() == ssa.times.size();
    double worst = 0.0;
    if (pass) {
      for (std::size_t j = 0; j < ssa.times.size(); ++j) {
        const double m1 = grid.snapshots[j].f.moment(1.0);
        const double m2 = grid.snapshots[j].f.moment(2.0);
        const double guard1 = 1e-9 * std::max(1.0, m1);
        const double guard2 = 1e-9 * std::max(1.0, m2);
        const double v1 = std::abs(m1 - ssa.moment1.mean[j]) / (3.0 * ssa.moment1.se[j] + guard1);
        const double v2 = std::abs(m2 - ssa.moment2.mean[j]) / (3.0 * ssa.moment2.se[j] + guard2);
        worst = std::max({worst, v1, v2});
      }
      pass = worst <= 1.0;
    }
    const double elapsed = timer.seconds();
    pass = pass && elapsed < 300.0;
    record(pass, "deterministic vs stochastic moments",
           "32 replicas at volume 1e5, worst |diff|/3se " + fmt(worst) + ", " + fmt(elapsed) +
               " s on 8 workers");
  }

  // 9. directional localisation trend in two components
  {
    const auto cfg = load(configs, "localisation_d2.json");
    GridSolver solver(*cfg.grid, cfg.kernel, cfg.source);
    const auto traj = solver.to_measures(solver.simulate(cfg.init, 1));
    const auto dir0 = theta0(cfg.init);
    bool pass = std::abs(dir0[0] - 0.5) < 1e-15 && std::abs(dir0[1] - 0.5) < 1e-15;
    double worst_dev = 0.0;
    double var_at_1 = -1.0, var_at_end = -1.0;
    for (const auto& snap : traj.snapshots) {
      if (snap.f.empty()) continue;
      const auto stats = direction_stats(snap.f, dir0);
      for (std::size_t j = 0; j < 2; ++j)
        worst_dev = std::max(worst_dev, std::abs(stats.mean_direction[j] - dir0[j]));
      if (std::abs(snap.t - 1.0) < 1e-9) var_at_1 = stats.directional_variance;
      if (std::abs(snap.t - cfg.grid->t_end) < 1e-9) var_at_end = stats.directional_variance;
    }
    pass = pass && worst_dev <= 1e-10 && var_at_1 > 0.0 && var_at_end >= 0.0 &&
           var_at_end < var_at_1;
    record(pass, "directional localisation trend",
           "max direction deviation " + fmt(worst_dev) + ", variance " + fmt(var_at_1) +
               " at t=1 vs " + fmt(var_at_end) + " at t=20");
  }

  // 10. bit-identical reruns through the CLI, across thread counts
  {
    const fs::path run_a = scratch / "det_a";
    const fs::path run_b = scratch / "det_b";
    const fs::path run_c = scratch / "det_c";
    fs::remove_all(run_a);
    fs::remove_all(run_b);
    fs::remove_all(run_c);
    const std::string config = (configs / "determinism_smoke.json").string();
    auto invoke = [&](const fs::path& out, int threads) {
      std::ostringstream cmd;
      cmd << cli << " simulate --config " << config << " --out " << out.string()
          << " --threads " << threads << " > " << (out.string() + ".log") << " 2>&1";
      return std::system(cmd.str().c_str());
    };
    const int rc_a = invoke(run_a, 1);
    const int rc_b = invoke(run_b, 1);
    const int rc_c = invoke(run_c, 4);
    bool pass = rc_a == 0 && rc_b == 0 && rc_c == 0;
    std::string detail;
    if (!pass) {
      detail = "CLI exit codes " + std::to_string(rc_a) + "/" + std::to_string(rc_b) + "/" +
               std::to_string(rc_c);
    } else {
      for (const char* file : {"grid_trajectory.csv", "ssa_trajectory.csv"}) {
        const auto a = read_file(run_a / file);
        const auto b = read_file(run_b / file);
        const auto c = read_file(run_c / file);
        if (a.empty() || a != b || a != c) {
          pass = false;
          detail = std::string(file) + " differs across runs or thread counts";
          break;
        }
      }
      if (pass) detail = "grid and particle CSVs byte-identical across reruns and threads 1/4";
    }
    record(pass, "seeded determinism through the CLI", detail);
  }

  std::cout << (g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
            << (10 - g_failures) << "/10)" << std::endl;
  return g_failures;
}
