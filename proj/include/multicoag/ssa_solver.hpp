#pragma once

// Exact stochastic particle simulation (Gillespie direct method) of the
// coagulation equation with Poisson source injection in a finite volume V:
// pairs (i, j) merge at rate K(x_i, x_j)/V, source atoms inject particles at
// rate V * zeta_w. The empirical measure (1/V) sum delta_{x_i} approximates
// the deterministic solution as V grows.
//
// The particle multiset is stored as (composition -> count); particles of
// equal composition are exchangeable, so the lumped chain has the identical
// law while pair-rate bookkeeping shrinks from per-particle to per-species.
// Cached per-species rate sums are updated in O(#species) per event and
// fully recomputed every `recompute_interval` events; the worst relative
// drift seen at a recompute is logged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "multicoag/kernels.hpp"
#include "multicoag/measures.hpp"
#include "multicoag/rng.hpp"
#include "multicoag/trajectory.hpp"

namespace multicoag {

struct SsaCounters {
  long long coagulation_events = 0;
  long long source_events = 0;
  long long rate_recomputes = 0;
  double max_rate_drift = 0.0;  // worst relative cached-sum error at a recompute
};

class ParticleSystem {
 public:
  /// Spawns Poisson(w * V) particles at each atom of f0, independently.
  ParticleSystem(const SignedDiscreteMeasure& f0, double volume, std::uint64_t seed,
                 int recompute_interval = 10000)
      : volume_(volume), seed_(seed), rng_(seed), recompute_interval_(recompute_interval) {
    if (!(volume > 0.0)) throw std::invalid_argument("simulation volume must be > 0");
    if (!f0.nonnegative()) throw std::invalid_argument("initial datum must be nonnegative");
    for (const auto& a : f0.atoms()) {
      const long long n = rng_.poisson(a.weight * volume_);
      if (n > 0) insert_species(a.point.coords(), n);
    }
  }

  double t() const { return t_; }
  double volume() const { return volume_; }
  std::uint64_t seed() const { return seed_; }
  const SsaCounters& counters() const { return counters_; }
  std::size_t species_count() const { return species_.size(); }

  long long particle_count() const {
    long long n = 0;
    for (const auto& sp : species_) n += sp.count;
    return n;
  }

  /// Exact componentwise sum of all particle compositions.
  std::vector<double> total_composition(std::size_t dim) const {
    std::vector<double> total(dim, 0.0);
    for (const auto& sp : species_)
      for (std::size_t j = 0; j < dim; ++j) total[j] += sp.comp[j] * static_cast<double>(sp.count);
    return total;
  }

  SignedDiscreteMeasure empirical_measure(std::size_t dim) const {
    std::vector<Atom> atoms;
    atoms.reserve(species_.size());
    for (const auto& sp : species_)
      atoms.push_back(Atom{CompositionVector(sp.comp), static_cast<double>(sp.count) / volume_});
    return SignedDiscreteMeasure::from_atoms(dim, std::move(atoms));
  }

  double total_event_rate(const Kernel& k, const SignedDiscreteMeasure& source) {
    refresh_rate_sums_if_due(k);
    return coagulation_rate(k) + source_rate(source);
  }

  enum class StepOutcome { event, quiescent };

  /// Samples the exponential waiting time to the next event without applying
  /// it. Returns quiescent (and leaves the state untouched) when the total
  /// rate is zero, so the caller can jump to the next output time.
  StepOutcome draw_waiting_time(const Kernel& k, const SignedDiscreteMeasure& source,
                                double& dt_out) {
    refresh_rate_sums_if_due(k);
    const double rate_c = coagulation_rate(k);
    const double rate_s = source_rate(source);
    const double total = rate_c + rate_s;
    if (!(total > 0.0)) {
      dt_out = 0.0;
      return StepOutcome::quiescent;
    }
    pending_dt_ = rng_.exponential(total);
    pending_source_fraction_ = rate_s / total;
    has_pending_ = true;
    dt_out = pending_dt_;
    return StepOutcome::event;
  }

  /// Applies the event whose waiting time was drawn last: advances the clock
  /// and performs either a merge or a source insertion.
  void commit_event(const Kernel& k, const SignedDiscreteMeasure& source) {
    if (!has_pending_) throw std::logic_error("commit_event without a drawn waiting time");
    has_pending_ = false;
    t_ += pending_dt_;
    if (rng_.uniform() < pending_source_fraction_) {
      apply_source_event(k, source);
    } else {
      apply_coagulation_event(k);
    }
  }

  /// One waiting time + one event (merge or injection).
  StepOutcome step(const Kernel& k, const SignedDiscreteMeasure& source, double& dt_out) {
    if (draw_waiting_time(k, source, dt_out) == StepOutcome::quiescent)
      return StepOutcome::quiescent;
    commit_event(k, source);
    return StepOutcome::event;
  }

 private:
  struct Species {
    std::vector<double> comp;
    double l1 = 0.0;
    long long count = 0;
    double rate_sum = 0.0;  // sum_b K(this, b) * n_b over all species
  };

  double rate(const Kernel& k, const Species& a, const Species& b) const {
    return k.norm_based() ? k.norm_rate(a.l1, b.l1) : k.evaluate_span(a.comp, b.comp);
  }

  double self_rate(const Kernel& k, const Species& a) const {
    return k.norm_based() ? k.norm_rate(a.l1, a.l1) : k.evaluate_span(a.comp, a.comp);
  }

  // sum over unordered particle pairs of K/V, via the cached per-species sums
  double coagulation_rate(const Kernel& k) const {
    double s = 0.0;
    for (const auto& sp : species_)
      s += static_cast<double>(sp.count) * std::max(0.0, sp.rate_sum - self_rate(k, sp));
    return 0.5 * s / volume_;
  }

  static double source_rate_total(const SignedDiscreteMeasure& source) {
    double s = 0.0;
    for (const auto& a : source.atoms()) s += a.weight;
    return s;
  }

  double source_rate(const SignedDiscreteMeasure& source) const {
    return volume_ * source_rate_total(source);
  }

  void apply_source_event(const Kernel& k, const SignedDiscreteMeasure& source) {
    const double target = rng_.uniform() * source_rate_total(source);
    double acc = 0.0;
    const Atom* chosen = &source.atoms().back();
    for (const auto& a : source.atoms()) {
      acc += a.weight;
      if (target < acc) {
        chosen = &a;
        break;
      }
    }
    const auto [idx, created] = insert_species(chosen->point.coords(), 1, &k);
    if (created) {
      // fresh sum already reflects the final counts; update only the others
      for (std::size_t i = 0; i < species_.size(); ++i)
        if (i != idx) species_[i].rate_sum += rate(k, species_[i], species_[idx]);
    } else {
      for (std::size_t i = 0; i < species_.size(); ++i)
        species_[i].rate_sum += rate(k, species_[i], species_[idx]);
    }
    ++counters_.source_events;
    ++events_since_recompute_;
  }

  void apply_coagulation_event(const Kernel& k) {
    // ordered-pair sampling: first endpoint a with weight n_a (A_a - K(a,a)),
    // then partner b with weight K(a,b) (n_b - delta_ab)
    double total = 0.0;
    for (const auto& sp : species_)
      total += static_cast<double>(sp.count) * std::max(0.0, sp.rate_sum - self_rate(k, sp));
    double target = rng_.uniform() * total;
    std::size_t ia = species_.size() - 1;
    for (std::size_t i = 0; i < species_.size(); ++i) {
      const double w = static_cast<double>(species_[i].count) *
                       std::max(0.0, species_[i].rate_sum - self_rate(k, species_[i]));
      if (target < w) {
        ia = i;
        break;
      }
      target -= w;
    }

    double partner_total = 0.0;
    for (std::size_t i = 0; i < species_.size(); ++i) {
      const long long avail = species_[i].count - (i == ia ? 1 : 0);
      partner_total += rate(k, species_[ia], species_[i]) * static_cast<double>(avail);
    }
    if (!(partner_total > 0.0)) {
      // cached-sum drift can propose a pair event whose true rate is zero
      // (e.g. a single surviving particle); rebuild the sums and drop it
      events_since_recompute_ = recompute_interval_;
      refresh_rate_sums_if_due(k);
      return;
    }
    double ptarget = rng_.uniform() * partner_total;
    std::size_t ib = species_.size() - 1;
    for (std::size_t i = 0; i < species_.size(); ++i) {
      const long long avail = species_[i].count - (i == ia ? 1 : 0);
      const double w = rate(k, species_[ia], species_[i]) * static_cast<double>(avail);
      if (ptarget < w) {
        ib = i;
        break;
      }
      ptarget -= w;
    }

    merge(k, ia, ib);
    ++counters_.coagulation_events;
    ++events_since_recompute_;
  }

  void merge(const Kernel& k, std::size_t ia, std::size_t ib) {
    std::vector<double> merged(species_[ia].comp.size());
    for (std::size_t j = 0; j < merged.size(); ++j)
      merged[j] = species_[ia].comp[j] + species_[ib].comp[j];

    // counts change by -1, -1, +1; every cached sum shifts by the rate deltas
    species_[ia].count -= 1;
    species_[ib].count -= 1;
    const auto [ic, created] = insert_species(merged, 1, &k);
    for (std::size_t i = 0; i < species_.size(); ++i) {
      if (created && i == ic) continue;  // fresh sum already final
      species_[i].rate_sum += rate(k, species_[i], species_[ic]) -
                              rate(k, species_[i], species_[ia]) -
                              rate(k, species_[i], species_[ib]);
    }
    drop_empty_species();
  }

  /// Returns (index, created). A fresh species gets its rate sum built from
  /// the current counts when a kernel is supplied.
  std::pair<std::size_t, bool> insert_species(std::span<const double> comp, long long count,
                                              const Kernel* k = nullptr) {
    std::vector<double> key(comp.begin(), comp.end());
    auto it = index_.find(key);
    if (it != index_.end()) {
      species_[it->second].count += count;
      return {it->second, false};
    }
    Species sp;
    sp.comp = key;
    sp.l1 = 0.0;
    for (double c : sp.comp) sp.l1 += c;
    sp.count = count;
    species_.push_back(std::move(sp));
    const std::size_t idx = species_.size() - 1;
    index_.emplace(std::move(key), idx);
    if (k != nullptr) {
      double a = 0.0;
      for (std::size_t i = 0; i < species_.size(); ++i)
        a += rate(*k, species_[idx], species_[i]) * static_cast<double>(species_[i].count);
      species_[idx].rate_sum = a;
    }
    return {idx, true};
  }

  void drop_empty_species() {
    for (std::size_t i = species_.size(); i-- > 0;) {
      if (species_[i].count != 0) continue;
      index_.erase(species_[i].comp);
      species_.erase(species_.begin() + static_cast<std::ptrdiff_t>(i));
      for (auto& kv : index_)
        if (kv.second > i) --kv.second;
    }
  }

  void refresh_rate_sums_if_due(const Kernel& k) {
    if (events_since_recompute_ < recompute_interval_ && rate_sums_ready_) return;
    double worst = 0.0;
    for (std::size_t i = 0; i < species_.size(); ++i) {
      double a = 0.0;
      for (std::size_t j = 0; j < species_.size(); ++j)
        a += rate(k, species_[i], species_[j]) * static_cast<double>(species_[j].count);
      if (rate_sums_ready_ && a != 0.0)
        worst = std::max(worst, std::abs(species_[i].rate_sum - a) / std::abs(a));
      species_[i].rate_sum = a;
    }
    if (rate_sums_ready_) {
      counters_.max_rate_drift = std::max(counters_.max_rate_drift, worst);
      ++counters_.rate_recomputes;
    }
    rate_sums_ready_ = true;
    events_since_recompute_ = 0;
  }

  double volume_ = 1.0;
  double t_ = 0.0;
  std::uint64_t seed_ = 0;
  Philox4x32 rng_;
  int recompute_interval_ = 10000;
  long long events_since_recompute_ = 0;
  bool rate_sums_ready_ = false;
  bool has_pending_ = false;
  double pending_dt_ = 0.0;
  double pending_source_fraction_ = 0.0;
  std::vector<Species> species_;
  std::map<std::vector<double>, std::size_t> index_;
  SsaCounters counters_;
};

// ---------------------------------------------------------------------------
// Replica runner: R independent systems with seeds seed + 0 .. seed + R-1,
// binned to the reference lattice at shared snapshot times, aggregated in
// replica order (mean and standard error per lattice cell and per moment).

struct SsaSpec {
  double volume = 1.0;
  int replicas = 1;
  double t_end = 1.0;
  double snapshot_dt = 0.1;
  int lattice_extent = 1;  // binning lattice for comparisons
  std::uint64_t seed = 0;
  int recompute_interval = 10000;

  void validate() const {
    if (!(volume > 0.0)) throw std::invalid_argument("ssa volume must be > 0");
    if (replicas < 1) throw std::invalid_argument("ssa replicas must be >= 1");
    if (!(t_end >= 0.0)) throw std::invalid_argument("ssa t_end must be >= 0");
    if (!(snapshot_dt > 0.0)) throw std::invalid_argument("ssa snapshot_dt must be > 0");
    if (lattice_extent < 1) throw std::invalid_argument("ssa lattice_extent must be >= 1");
    const double steps = t_end / snapshot_dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      throw std::invalid_argument("ssa t_end must be an integer multiple of snapshot_dt");
  }

  std::vector<double> snapshot_times() const {
    const long long n = static_cast<long long>(std::llround(t_end / snapshot_dt));
    std::vector<double> times(n + 1);
    for (long long i = 0; i <= n; ++i) times[i] = static_cast<double>(i) * snapshot_dt;
    times.back() = t_end;
    return times;
  }
};

struct SsaReplicaResult {
  MeasureTrajectory binned;
  std::vector<double> number_density;  // per snapshot, n / V
  std::vector<double> moment1;         // per snapshot, unbinned l1 moment
  std::vector<double> moment2;         // per snapshot, unbinned |x|^2 moment
  SsaCounters counters;
};

struct MomentSeries {
  std::vector<double> mean;
  std::vector<double> se;
};

struct SsaRunResult {
  std::vector<double> times;
  std::vector<SsaReplicaResult> replicas;
  MeasureTrajectory mean_binned;  // per-cell replica mean
  MeasureTrajectory se_binned;    // per-cell standard error of the mean
  MomentSeries number_density;
  MomentSeries moment1;
  MomentSeries moment2;
};

inline SsaReplicaResult run_ssa_replica(const SsaSpec& spec, const Kernel& kernel,
                                        const SignedDiscreteMeasure& f0,
                                        const SignedDiscreteMeasure& source, int replica) {
  const std::size_t dim = f0.dim();
  ParticleSystem ps(f0, spec.volume, spec.seed + static_cast<std::uint64_t>(replica),
                    spec.recompute_interval);
  const auto times = spec.snapshot_times();

  SsaReplicaResult result;
  result.binned.dim = dim;

  auto record = [&](double at) {
    const auto emp = ps.empirical_measure(dim);
    auto binned = bin_to_lattice(emp, 1.0, spec.lattice_extent);
    result.binned.snapshots.push_back(
        MeasureSnapshot{at, std::move(binned.on_lattice), std::move(binned.overflow_mass)});
    result.number_density.push_back(emp.total_weight());
    result.moment1.push_back(emp.l1_moment());
    result.moment2.push_back(emp.moment(2.0));
  };

  std::size_t next_snap = 0;
  record(times[next_snap++]);
  while (next_snap < times.size()) {
    double dt = 0.0;
    if (ps.draw_waiting_time(kernel, source, dt) == ParticleSystem::StepOutcome::quiescent) {
      while (next_snap < times.size()) record(times[next_snap++]);
      break;
    }
    const double event_time = ps.t() + dt;
    // the state is constant until the event fires; emit any snapshots passed
    while (next_snap < times.size() && times[next_snap] <= event_time) record(times[next_snap++]);
    if (next_snap == times.size() && event_time > times.back()) break;
    ps.commit_event(kernel, source);
  }
  result.counters = ps.counters();
  return result;
}

namespace detail {

inline void mean_se(const std::vector<double>& values, double& mean, double& se) {
  const std::size_t n = values.size();
  double s = 0.0;
  for (double v : values) s += v;
  mean = s / static_cast<double>(n);
  if (n < 2) {
    se = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace detail

inline void aggregate_ssa(const SsaSpec& spec, SsaRunResult& out) {
  const std::size_t dim = out.replicas.front().binned.dim;
  const int r_count = spec.replicas;
  const std::size_t s_count = out.times.size();

  out.mean_binned.dim = dim;
  out.se_binned.dim = dim;
  auto series = [&](auto&& getter, MomentSeries& dst) {
    dst.mean.resize(s_count);
    dst.se.resize(s_count);
    std::vector<double> values(r_count);
    for (std::size_t s = 0; s < s_count; ++s) {
      for (int r = 0; r < r_count; ++r) values[r] = getter(out.replicas[r], s);
      detail::mean_se(values, dst.mean[s], dst.se[s]);
    }
  };
  series([](const SsaReplicaResult& r, std::size_t s) { return r.number_density[s]; },
         out.number_density);
  series([](const SsaReplicaResult& r, std::size_t s) { return r.moment1[s]; }, out.moment1);
  series([](const SsaReplicaResult& r, std::size_t s) { return r.moment2[s]; }, out.moment2);

  // per-cell aggregation over the union of supports, in canonical atom order
  for (std::size_t s = 0; s < s_count; ++s) {
    std::map<std::vector<double>, std::vector<double>> cells;  // point -> per-replica weight
    for (int r = 0; r < r_count; ++r) {
      for (const auto& a : out.replicas[r].binned.snapshots[s].f.atoms()) {
        std::vector<double> key(a.point.coords().begin(), a.point.coords().end());
        auto [it, inserted] = cells.try_emplace(std::move(key), std::vector<double>(r_count, 0.0));
        it->second[static_cast<std::size_t>(r)] = a.weight;
      }
    }
    std::vector<Atom> mean_atoms, se_atoms;
    for (const auto& [point, values] : cells) {
      double mean = 0.0, se = 0.0;
      detail::mean_se(values, mean, se);
      if (mean != 0.0) mean_atoms.push_back(Atom{CompositionVector(point), mean});
      if (se != 0.0) se_atoms.push_back(Atom{CompositionVector(point), se});
    }
    std::vector<double> lost(dim, 0.0);
    for (int r = 0; r < r_count; ++r)
      for (std::size_t j = 0; j < dim; ++j)
        lost[j] += out.replicas[r].binned.snapshots[s].lost_mass[j] / r_count;
    out.mean_binned.snapshots.push_back(MeasureSnapshot{
        out.times[s], SignedDiscreteMeasure::from_atoms(dim, std::move(mean_atoms)), lost});
    out.se_binned.snapshots.push_back(
        MeasureSnapshot{out.times[s], SignedDiscreteMeasure::from_atoms(dim, std::move(se_atoms)),
                        std::vector<double>(dim, 0.0)});
  }
}

inline SsaRunResult run_ssa(const SsaSpec& spec, const Kernel& kernel,
                            const SignedDiscreteMeasure& f0, const SignedDiscreteMeasure& source,
                            int threads = 1) {
  spec.validate();
  if (!f0.nonnegative() || !source.nonnegative())
    throw std::invalid_argument("ssa requires nonnegative initial datum and source");

  SsaRunResult out;
  out.times = spec.snapshot_times();
  out.replicas.resize(spec.replicas);

  auto work = [&](int begin, int stride) {
    for (int r = begin; r < spec.replicas; r += stride)
      out.replicas[r] = run_ssa_replica(spec, kernel, f0, source, r);
  };
  if (threads <= 1 || spec.replicas == 1) {
    work(0, 1);
  } else {
    const int n = std::min(threads, spec.replicas);
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(work, i, n);
    for (auto& th : pool) th.join();
  }

  aggregate_ssa(spec, out);
  return out;
}

}  // namespace multicoag
