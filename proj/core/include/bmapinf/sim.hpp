#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "bmapinf/model.hpp"

namespace bmapinf {

struct SimOptions {
  // Above this many customers departures are no longer drawn one at a time:
  // the system jumps between non-departure events with binomial thinning.
  // The level path is then still exact at every event epoch and at every
  // return to zero, but the time spent at individual levels is not resolved.
  std::uint64_t exact_level_limit = 10'000;
  std::uint64_t max_batch = kDefaultMaxBatch;
  // Phase at time 0; drawn from the background stationary law when unset.
  std::optional<Eigen::Index> initial_phase;
};

struct TracePoint {
  double time = 0.0;
  std::uint64_t level = 0;
  Eigen::Index phase = 0;
  // False when the segment up to the next point was crossed in aggregate.
  bool resolved = true;
};

// Piecewise-constant path of |L(t)| on [0, horizon]. The level right after
// each event epoch is stored; the path holds it until the next point.
struct SimulationTrace {
  double horizon = 0.0;
  std::vector<TracePoint> path;
  std::uint64_t events = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t clamped_batches = 0;  // draws clamped to max_batch
  std::uint64_t aggregated_steps = 0;
};

struct StabilityDiagnostics {
  std::uint64_t visits_to_empty = 0;
  // Mean time between successive returns to 0 after burn-in; empty when
  // fewer than two returns were seen.
  std::optional<double> mean_recurrence;
  // The excursion in progress at the horizon never returned.
  bool censored = false;
  // Age of that open excursion (time since the last return or burn-in).
  double open_excursion = 0.0;
  std::uint64_t max_level_seen = 0;
  double horizon = 0.0;
};

// Exact competing-clock simulation of the MBMAP/M/inf queue started empty.
// Bit-reproducible for a fixed (model, horizon, seed, options).
// Throws HorizonNonpositive.
SimulationTrace simulate(const ValidatedModel& model, double horizon, std::uint64_t seed,
                         const SimOptions& options = {});

// Throws InvalidInput unless 0 <= burn_in < horizon.
StabilityDiagnostics diagnostics(const SimulationTrace& trace, double burn_in);

struct EmpiricalPmf {
  Vector pmf;  // time fraction per level over resolved time after burn-in
  double resolved_time = 0.0;
  double unresolved_time = 0.0;
};

EmpiricalPmf empirical_pmf(const SimulationTrace& trace, double burn_in);

// ------------------------------------------------------------ coupling

// Arrival skeleton shared by the original queue and both bounding queues.
struct EventSkeleton {
  double horizon = 0.0;
  std::vector<double> arrival_times;
  std::vector<std::uint32_t> classes;
  std::vector<std::uint64_t> batch_sizes;
  std::vector<std::uint64_t> cumulative;  // A_n; cumulative[0] = A_0 = 0
  std::vector<double> uniforms;           // U_m, one per customer
  std::vector<double> phase_times;        // background path: phase_values[i]
  std::vector<Eigen::Index> phase_values; // holds on [phase_times[i], next)
  std::uint64_t clamped_batches = 0;

  std::uint64_t customers() const noexcept { return cumulative.back(); }
  Eigen::Index phase_at(double t) const;
};

struct CoupleOptions {
  std::uint64_t max_batch = kDefaultMaxBatch;
  std::uint64_t customer_budget = 50'000'000;
  bool record_epochs = true;
  std::optional<Eigen::Index> initial_phase;
};

// Throws HorizonNonpositive or CustomerBudgetExceeded.
EventSkeleton generate_skeleton(const ValidatedModel& model, double horizon, std::uint64_t seed,
                                const CoupleOptions& options = {});

enum class ServiceFamily { Original, Upper, Lower };

// S_m = -log(U_m)/mu_{c_n} (Original), with mu_min (Upper) or mu_max (Lower).
std::vector<double> coupled_service_times(const ValidatedModel& model, const EventSkeleton& skeleton,
                                          ServiceFamily family);

struct CoupledPoint {
  double time = 0.0;
  std::uint64_t original = 0;  // |L(t)|
  std::uint64_t queue1 = 0;    // served at mu_min
  std::uint64_t queue2 = 0;    // served at mu_max
  std::vector<std::uint64_t> per_class;
  Eigen::Index phase = 0;
};

struct CoupledTrace {
  double horizon = 0.0;
  std::vector<CoupledPoint> epochs;  // empty unless record_epochs
  std::uint64_t epochs_checked = 0;
  std::uint64_t customers = 0;
  std::uint64_t clamped_batches = 0;
};

// Evaluates the three indicator-sum paths at every arrival and departure
// epoch in [0, horizon] and asserts L2 <= |L| <= L1 at each one.
// Throws OrderingViolated on the first failure.
CoupledTrace couple(const ValidatedModel& model, double horizon, std::uint64_t seed,
                    const CoupleOptions& options = {});
CoupledTrace couple(const ValidatedModel& model, const EventSkeleton& skeleton, const CoupleOptions& options = {});

// The original queue's path as a SimulationTrace (needs record_epochs).
SimulationTrace original_path(const CoupledTrace& trace);

// ------------------------------------------------------- replications

unsigned default_parallelism() noexcept;

// Runs fn(seed) for seed = base_seed .. base_seed + count - 1 on up to
// `threads` workers and returns the results indexed by replication. The
// first exception thrown by any replication is rethrown.
template <class F>
auto replicate(std::uint64_t count, std::uint64_t base_seed, F&& fn, unsigned threads = 0)
    -> std::vector<decltype(fn(base_seed))> {
  using R = decltype(fn(base_seed));
  std::vector<std::optional<R>> slots(count);
  if (threads == 0) threads = default_parallelism();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(count, 1)));
  std::mutex m;
  std::uint64_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::uint64_t i;
      {
        std::lock_guard lock(m);
        if (failure || next >= count) return;
        i = next++;
      }
      try {
        slots[i].emplace(fn(base_seed + i));
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace bmapinf
