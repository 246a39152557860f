#include "bmapinf/sim.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include "bmapinf/error.hpp"
#include "bmapinf/rng.hpp"

namespace bmapinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Move {
  int stream;  // -1 for a pure phase change
  Eigen::Index to;
};

// Non-departure transitions out of one phase, as a cumulative table.
struct PhaseTable {
  std::vector<Move> moves;
  std::vector<double> cumulative;
  double total = 0.0;

  const Move& pick(double u) const {
    const double x = u * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    if (it == cumulative.end()) --it;
    return moves[static_cast<std::size_t>(it - cumulative.begin())];
  }
};

std::vector<PhaseTable> phase_tables(const ValidatedModel& model) {
  const Eigen::Index d = model.phases();
  std::vector<PhaseTable> tables(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    auto& t = tables[static_cast<std::size_t>(j)];
    auto add = [&t](double rate, int stream, Eigen::Index to) {
      if (!(rate > 0.0)) return;
      t.total += rate;
      t.moves.push_back({stream, to});
      t.cumulative.push_back(t.total);
    };
    for (Eigen::Index k = 0; k < d; ++k)
      if (k != j) add(model.d0()(j, k), -1, k);
    for (std::size_t nu = 0; nu < model.classes(); ++nu)
      for (Eigen::Index k = 0; k < d; ++k) add(model.streams()[nu].rate_matrix(j, k), static_cast<int>(nu), k);
  }
  return tables;
}

Eigen::Index initial_phase(const ValidatedModel& model, const std::optional<Eigen::Index>& fixed, Rng& rng) {
  if (fixed) {
    if (*fixed < 0 || *fixed >= model.phases()) throw Error(ErrorCode::InvalidInput, "initial phase out of range");
    return *fixed;
  }
  const Vector theta = background_stationary(model);
  double x = rng.uniform();
  for (Eigen::Index i = 0; i + 1 < theta.size(); ++i) {
    if (x < theta(i)) return i;
    x -= theta(i);
  }
  return theta.size() - 1;
}

void check_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorCode::HorizonNonpositive, "horizon must be positive and finite");
}

std::uint64_t add_checked(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a)
    throw Error(ErrorCode::NumericalFailure, "queue length overflowed 64 bits");
  return a + b;
}

// Time for n customers with Exp(mu) services to all leave, given that they
// all leave within span.
double conditional_emptying_time(std::uint64_t n, double mu, double span, double u) {
  const double stay = std::exp(-mu * span);
  const double leave = -std::expm1(-mu * span);
  const double root = std::expm1(std::log(u) / static_cast<double>(n));  // u^(1/n) - 1
  return -std::log(stay - leave * root) / mu;
}

}  // namespace

// ------------------------------------------------------------ simulate

SimulationTrace simulate(const ValidatedModel& model, double horizon, std::uint64_t seed,
                         const SimOptions& options) {
  check_horizon(horizon);
  const auto tables = phase_tables(model);
  const auto& streams = model.streams();
  const std::size_t classes = streams.size();

  Rng rng(seed, StreamRole::Dynamics);
  SimulationTrace trace;
  trace.horizon = horizon;

  Eigen::Index phase = initial_phase(model, options.initial_phase, rng);
  std::vector<std::uint64_t> count(classes, 0);
  std::uint64_t level = 0;
  double t = 0.0;
  trace.path.push_back({0.0, 0, phase, true});

  auto background_event = [&](double u) {
    const Move& mv = tables[static_cast<std::size_t>(phase)].pick(u);
    if (mv.stream >= 0) {
      const auto nu = static_cast<std::size_t>(mv.stream);
      const std::uint64_t b = streams[nu].batch.sample(rng.uniform(), options.max_batch);
      if (b >= options.max_batch) ++trace.clamped_batches;
      count[nu] = add_checked(count[nu], b);
      level = add_checked(level, b);
      ++trace.arrivals;
    }
    phase = mv.to;
  };

  for (;;) {
    const double rb = tables[static_cast<std::size_t>(phase)].total;
    if (level <= options.exact_level_limit) {
      double dep = 0.0;
      for (std::size_t nu = 0; nu < classes; ++nu) dep += static_cast<double>(count[nu]) * streams[nu].service_rate;
      const double rate = rb + dep;
      const double dt = rng.exponential(rate);
      if (t + dt >= horizon) break;
      t += dt;
      const double x = rng.uniform() * rate;
      if (x < dep) {
        double acc = 0.0;
        std::size_t who = classes;
        for (std::size_t nu = 0; nu < classes; ++nu) {
          if (count[nu] == 0) continue;
          who = nu;
          acc += static_cast<double>(count[nu]) * streams[nu].service_rate;
          if (x < acc) break;
        }
        --count[who];
        --level;
      } else {
        background_event((x - dep) / rb);
      }
      ++trace.events;
      trace.path.push_back({t, level, phase, true});
      continue;
    }

    // Aggregated step: jump to the next non-departure event, thinning the
    // customers in service binomially over the gap.
    const double end = std::min(t + rng.exponential(rb), horizon);
    const double span = end - t;
    ++trace.aggregated_steps;
    trace.path.back().resolved = false;
    std::vector<std::uint64_t> survivors(classes, 0);
    std::uint64_t left = 0;
    for (std::size_t nu = 0; nu < classes; ++nu) {
      if (count[nu] == 0) continue;
      std::binomial_distribution<std::uint64_t> thin(count[nu], std::exp(-streams[nu].service_rate * span));
      survivors[nu] = thin(rng.engine());
      left += survivors[nu];
    }
    if (left == 0) {
      double empty_at = 0.0;
      for (std::size_t nu = 0; nu < classes; ++nu)
        if (count[nu] > 0)
          empty_at = std::max(empty_at,
                              conditional_emptying_time(count[nu], streams[nu].service_rate, span, rng.uniform()));
      std::fill(count.begin(), count.end(), 0);
      level = 0;
      t = std::min(t + empty_at, end);
      if (t >= horizon) break;
      ++trace.events;
      trace.path.push_back({t, 0, phase, true});
      continue;
    }
    count = survivors;
    level = left;
    t = end;
    if (t >= horizon) break;
    background_event(rng.uniform());
    ++trace.events;
    trace.path.push_back({t, level, phase, true});
  }
  return trace;
}

StabilityDiagnostics diagnostics(const SimulationTrace& trace, double burn_in) {
  if (!(burn_in >= 0.0 && burn_in < trace.horizon))
    throw Error(ErrorCode::InvalidInput, "burn-in must lie in [0, horizon)");
  StabilityDiagnostics d;
  d.horizon = trace.horizon;
  const auto& p = trace.path;
  std::vector<double> returns;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool after = p[i].time > burn_in;
    const bool covers_burn_in = !after && (i + 1 == p.size() || p[i + 1].time > burn_in);
    if (after || covers_burn_in) d.max_level_seen = std::max(d.max_level_seen, p[i].level);
    if (after && i > 0 && p[i].level == 0 && p[i - 1].level > 0) returns.push_back(p[i].time);
  }
  d.visits_to_empty = returns.size();
  if (returns.size() >= 2) d.mean_recurrence = (returns.back() - returns.front()) / static_cast<double>(returns.size() - 1);
  d.censored = !p.empty() && p.back().level > 0;
  if (d.censored) d.open_excursion = trace.horizon - (returns.empty() ? burn_in : returns.back());
  return d;
}

EmpiricalPmf empirical_pmf(const SimulationTrace& trace, double burn_in) {
  if (!(burn_in >= 0.0 && burn_in < trace.horizon))
    throw Error(ErrorCode::InvalidInput, "burn-in must lie in [0, horizon)");
  EmpiricalPmf out;
  std::vector<double> occ;
  const auto& p = trace.path;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = std::max(p[i].time, burn_in);
    const double b = i + 1 < p.size() ? p[i + 1].time : trace.horizon;
    if (!(b > a)) continue;
    if (!p[i].resolved) {
      out.unresolved_time += b - a;
      continue;
    }
    if (p[i].level >= occ.size()) occ.resize(p[i].level + 1, 0.0);
    occ[p[i].level] += b - a;
    out.resolved_time += b - a;
  }
  out.pmf = Vector::Zero(static_cast<Eigen::Index>(occ.size()));
  if (out.resolved_time > 0.0)
    for (std::size_t k = 0; k < occ.size(); ++k) out.pmf(static_cast<Eigen::Index>(k)) = occ[k] / out.resolved_time;
  return out;
}

// ------------------------------------------------------------ coupling

Eigen::Index EventSkeleton::phase_at(double t) const {
  auto it = std::upper_bound(phase_times.begin(), phase_times.end(), t);
  return it == phase_times.begin() ? phase_values.front() : phase_values[static_cast<std::size_t>(it - phase_times.begin() - 1)];
}

EventSkeleton generate_skeleton(const ValidatedModel& model, double horizon, std::uint64_t seed,
                                const CoupleOptions& options) {
  check_horizon(horizon);
  const auto tables = phase_tables(model);
  Rng rng(seed, StreamRole::Skeleton);
  EventSkeleton sk;
  sk.horizon = horizon;
  sk.cumulative.push_back(0);
  Eigen::Index phase = initial_phase(model, options.initial_phase, rng);
  sk.phase_times.push_back(0.0);
  sk.phase_values.push_back(phase);
  double t = 0.0;
  for (;;) {
    const PhaseTable& tab = tables[static_cast<std::size_t>(phase)];
    t += rng.exponential(tab.total);
    if (t >= horizon) break;
    const Move& mv = tab.pick(rng.uniform());
    if (mv.stream >= 0) {
      const auto nu = static_cast<std::size_t>(mv.stream);
      const std::uint64_t b = model.streams()[nu].batch.sample(rng.uniform(), options.max_batch);
      if (b >= options.max_batch) ++sk.clamped_batches;
      const std::uint64_t total = add_checked(sk.cumulative.back(), b);
      if (total > options.customer_budget) {
        std::ostringstream os;
        os << "skeleton needs more than " << options.customer_budget << " customers before the horizon";
        throw Error(ErrorCode::CustomerBudgetExceeded, os.str());
      }
      sk.arrival_times.push_back(t);
      sk.classes.push_back(static_cast<std::uint32_t>(nu));
      sk.batch_sizes.push_back(b);
      sk.cumulative.push_back(total);
    }
    if (mv.to != phase) {
      phase = mv.to;
      sk.phase_times.push_back(t);
      sk.phase_values.push_back(phase);
    }
  }
  Rng service(seed, StreamRole::Service);
  sk.uniforms.resize(sk.customers());
  for (double& u : sk.uniforms) u = service.uniform();
  return sk;
}

std::vector<double> coupled_service_times(const ValidatedModel& model, const EventSkeleton& sk, ServiceFamily family) {
  double lo = kInf, hi = 0.0;
  for (const auto& s : model.streams()) {
    lo = std::min(lo, s.service_rate);
    hi = std::max(hi, s.service_rate);
  }
  std::vector<double> out(sk.customers());
  for (std::size_t n = 0; n < sk.arrival_times.size(); ++n) {
    double mu = family == ServiceFamily::Upper ? lo : hi;
    if (family == ServiceFamily::Original) mu = model.streams()[sk.classes[n]].service_rate;
    for (std::uint64_t m = sk.cumulative[n]; m < sk.cumulative[n + 1]; ++m) out[m] = -std::log(sk.uniforms[m]) / mu;
  }
  return out;
}

CoupledTrace couple(const ValidatedModel& model, double horizon, std::uint64_t seed, const CoupleOptions& options) {
  return couple(model, generate_skeleton(model, horizon, seed, options), options);
}

CoupledTrace couple(const ValidatedModel& model, const EventSkeleton& sk, const CoupleOptions& options) {
  const auto s_orig = coupled_service_times(model, sk, ServiceFamily::Original);
  const auto s_up = coupled_service_times(model, sk, ServiceFamily::Upper);
  const auto s_low = coupled_service_times(model, sk, ServiceFamily::Lower);

  using Dep = std::pair<double, std::uint32_t>;
  std::priority_queue<Dep, std::vector<Dep>, std::greater<>> q_orig;
  std::priority_queue<double, std::vector<double>, std::greater<>> q_up, q_low;

  CoupledTrace tr;
  tr.horizon = sk.horizon;
  tr.customers = sk.customers();
  tr.clamped_batches = sk.clamped_batches;
  std::vector<std::uint64_t> per_class(model.classes(), 0);
  std::uint64_t orig = 0, up = 0, low = 0;

  auto check = [&](double t) {
    ++tr.epochs_checked;
    if (!(low <= orig && orig <= up)) {
      std::ostringstream os;
      os << "coupling order broken at t = " << t << ": L2 = " << low << ", |L| = " << orig << ", L1 = " << up;
      throw Error(ErrorCode::OrderingViolated, os.str());
    }
    if (options.record_epochs) tr.epochs.push_back({t, orig, up, low, per_class, sk.phase_at(t)});
  };
  check(0.0);

  std::size_t n = 0;
  for (;;) {
    const double next_arrival = n < sk.arrival_times.size() ? sk.arrival_times[n] : kInf;
    double t = next_arrival;
    if (!q_orig.empty()) t = std::min(t, q_orig.top().first);
    if (!q_up.empty()) t = std::min(t, q_up.top());
    if (!q_low.empty()) t = std::min(t, q_low.top());
    if (!(t <= sk.horizon)) break;

    if (next_arrival == t) {
      const std::uint32_t c = sk.classes[n];
      for (std::uint64_t m = sk.cumulative[n]; m < sk.cumulative[n + 1]; ++m) {
        q_orig.emplace(t + s_orig[m], c);
        q_up.push(t + s_up[m]);
        q_low.push(t + s_low[m]);
      }
      const std::uint64_t b = sk.batch_sizes[n];
      per_class[c] += b;
      orig += b;
      up += b;
      low += b;
      ++n;
    }
    // I(T_n <= t < T_n + S): anyone whose departure time is <= t has left.
    while (!q_orig.empty() && q_orig.top().first <= t) {
      --per_class[q_orig.top().second];
      --orig;
      q_orig.pop();
    }
    while (!q_up.empty() && q_up.top() <= t) {
      --up;
      q_up.pop();
    }
    while (!q_low.empty() && q_low.top() <= t) {
      --low;
      q_low.pop();
    }
    check(t);
  }
  return tr;
}

SimulationTrace original_path(const CoupledTrace& trace) {
  if (trace.epochs.empty()) throw Error(ErrorCode::InvalidInput, "coupled trace was run without recorded epochs");
  SimulationTrace out;
  out.horizon = trace.horizon;
  for (const auto& e : trace.epochs) {
    if (!out.path.empty() && out.path.back().time == e.time) {
      out.path.back().level = e.original;
      out.path.back().phase = e.phase;
      continue;
    }
    out.path.push_back({e.time, e.original, e.phase, true});
  }
  out.events = out.path.size() - 1;
  return out;
}

unsigned default_parallelism() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace bmapinf
