#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "bmapinf/ctmc.hpp"
#include "bmapinf/error.hpp"
#include "bmapinf/lyapunov.hpp"
#include "bmapinf/model_io.hpp"
#include "bmapinf/sim.hpp"

#ifndef BMAPINF_VERSION
#define BMAPINF_VERSION "unknown"
#endif
#ifndef BMAPINF_BUILD_TYPE
#define BMAPINF_BUILD_TYPE "unknown"
#endif

namespace bmapinf::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct RunConfig {
  std::string model_path;
  std::string out_path;
  std::string csv_path;
  std::string trace_path;
  std::string queue = "original";
  bool echo = false;
  bool strict = false;
  std::int64_t cap = 200;
  std::optional<std::uint64_t> range;
  double horizon = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t replications = 1;
  std::optional<double> burn_in;
  std::uint64_t exact_limit = SimOptions{}.exact_level_limit;
  std::optional<double> generator_tol;
  std::optional<double> solve_tol;
};

std::optional<double> env_double(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const double x = std::strtod(v, &end);
  if (*end != '\0' || !(x > 0.0))
    throw Error(ErrorCode::InvalidInput, std::string(name) + " must be a positive number");
  return x;
}

double generator_tolerance(const RunConfig& c) {
  if (c.generator_tol) return *c.generator_tol;
  return env_double("BMAPINF_GENERATOR_TOL").value_or(ValidateOptions{}.generator_tolerance);
}

double solve_tolerance(const RunConfig& c) {
  if (c.solve_tol) return *c.solve_tol;
  return env_double("BMAPINF_SOLVE_TOL").value_or(SolveOptions{}.residual_tolerance);
}

struct Loaded {
  std::string name;
  ValidatedModel model;
};

Loaded load(const RunConfig& c) {
  ModelDocument doc = load_model_file(c.model_path);
  ValidateOptions opts;
  opts.generator_tolerance = generator_tolerance(c);
  return {doc.name, validate(std::move(doc.model), opts)};
}

ojson number_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

ojson vector_json(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

std::ofstream open_file(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidInput, "cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  return f;
}

void check_horizon(const RunConfig& c) {
  if (!(c.horizon > 0.0 && std::isfinite(c.horizon)))
    throw Error(ErrorCode::HorizonNonpositive, "horizon must be positive and finite");
}

double burn_in_for(const RunConfig& c) {
  check_horizon(c);
  const double b = c.burn_in.value_or(0.0);
  if (!(b >= 0.0 && b < c.horizon)) throw Error(ErrorCode::InvalidInput, "burn-in must satisfy 0 <= burn-in < horizon");
  return b;
}

ojson verdict_json(const ValidatedModel& m, const StabilityVerdict& v) {
  ojson j;
  j["stable"] = v.stable;
  j["bound"] = number_or_null(v.bound);
  j["log_moment_vector"] = vector_json(v.log_moment_vector);
  j["divergent_streams"] = v.divergent_streams;
  ojson per = ojson::array();
  for (const auto& s : m.streams())
    per.push_back({{"label", s.label},
                   {"batch", s.batch.describe()},
                   {"service_rate", s.service_rate},
                   {"log_moment", number_or_null(s.batch.log_moment())}});
  j["streams"] = per;
  return j;
}

ojson certificate_json(const DriftCertificate& cert) {
  ojson j;
  j["delta"] = cert.delta;
  j["K"] = cert.K;
  j["C"] = cert.C;
  j["verified_range"] = cert.verified_range;
  ojson viol = ojson::array();
  for (const auto& v : cert.violations) viol.push_back({{"k", v.k}, {"inequality", v.inequality}, {"excess", v.excess}});
  j["violations"] = viol;
  return j;
}

ojson diagnostics_json(const StabilityDiagnostics& d) {
  return {{"visits_to_empty", d.visits_to_empty},
          {"mean_recurrence", d.mean_recurrence ? ojson(*d.mean_recurrence) : ojson(nullptr)},
          {"censored", d.censored},
          {"open_excursion", d.open_excursion},
          {"max_level_seen", d.max_level_seen},
          {"horizon", d.horizon}};
}

ojson header(const char* command, const Loaded& m) {
  ojson j;
  j["command"] = command;
  j["model"] = m.name;
  return j;
}

// ------------------------------------------------------------ commands

int cmd_validate(const RunConfig& c, ojson& report) {
  Loaded m = load(c);
  if (c.echo) {
    report = model_to_json(m.model.model(), m.name);
    return kOk;
  }
  report = header("validate", m);
  report["valid"] = true;
  report["phases"] = m.model.phases();
  report["classes"] = m.model.classes();
  report["generator_residual"] = m.model.generator_residual();
  return kOk;
}

int cmd_stability(const RunConfig& c, ojson& report) {
  Loaded m = load(c);
  const StabilityVerdict v = stability_verdict(m.model);
  report = header("stability", m);
  report.update(verdict_json(m.model, v));
  return c.strict && !v.stable ? kUnstable : kOk;
}

int cmd_drift(const RunConfig& c, ojson& report) {
  Loaded m = load(c);
  const BmapView view = make_view(m.model, parse_queue(c.queue));
  CertificateOptions opts;
  opts.range = c.range;
  const DriftCertificate cert = check_certificate(view, opts);
  report = header("drift", m);
  report["queue"] = c.queue;
  report.update(certificate_json(cert));
  ojson table = ojson::array();
  for (const auto& [k, y] : cert.drift_vectors) table.push_back({{"k", k}, {"y", vector_json(y)}});
  report["drift_table"] = table;
  if (!c.csv_path.empty()) {
    auto f = open_file(c.csv_path);
    f << "k,min_component,max_component\n";
    for (std::uint64_t k = 0; k <= cert.verified_range; ++k) {
      const Vector y = drift_vector(view, k);
      f << k << ',' << y.minCoeff() << ',' << y.maxCoeff() << '\n';
    }
  }
  return cert.violations.empty() ? kOk : kInternalError;
}

ojson solve_json(const StationarySolution& sol, const BmapView& view, const StabilityVerdict& v, bool with_pi) {
  ojson j;
  j["cap"] = sol.cap();
  j["solver"] = sol.used_profile_solver ? "profile" : "dense";
  j["residual"] = sol.residual;
  j["tail_mass"] = sol.tail_mass;
  const Vector marg = sol.level_marginals();
  double mean = 0.0;
  for (Eigen::Index k = 0; k < marg.size(); ++k) mean += static_cast<double>(k) * marg(k);
  j["mean_level"] = mean;
  if (with_pi) {
    ojson pi = ojson::array();
    for (const auto& p : sol.pi) pi.push_back(vector_json(p));
    j["pi"] = pi;
    j["level_marginals"] = vector_json(marg);
  }
  ojson pgf = ojson::array();
  for (const auto& r : pgf_check(sol, view))
    pgf.push_back({{"z", r.z}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual},
                   {"truncation_bound", r.truncation_bound}});
  j["pgf"] = pgf;
  if (v.stable) {
    const NecessityReport n = necessity_check(sol, v, view.service_rate());
    j["necessity"] = {{"lhs", n.lhs}, {"rhs", n.rhs}, {"holds", n.holds},
                      {"harmonic_checked_up_to", n.harmonic_checked_up_to},
                      {"harmonic_chain_holds", n.harmonic_chain_holds}};
  } else {
    j["necessity"] = nullptr;
  }
  return j;
}

int cmd_solve(const RunConfig& c, ojson& report) {
  Loaded m = load(c);
  const BmapView view = make_view(m.model, parse_queue(c.queue));
  SolveOptions opts;
  opts.residual_tolerance = solve_tolerance(c);
  const StationarySolution sol = solve_stationary(build_truncated(view, c.cap), opts);
  report = header("solve", m);
  report["queue"] = c.queue;
  report.update(solve_json(sol, view, stability_verdict(view), true));
  report["truncation_tv"] = truncation_tv(view, c.cap, opts);
  if (!c.csv_path.empty()) {
    auto f = open_file(c.csv_path);
    f << "level,probability\n";
    const Vector marg = sol.level_marginals();
    for (Eigen::Index k = 0; k < marg.size(); ++k) f << k << ',' << marg(k) << '\n';
  }
  return kOk;
}

int cmd_simulate(const RunConfig& c, ojson& report) {
  Loaded m = load(c);
  const double burn_in = burn_in_for(c);
  SimOptions opts;
  opts.exact_level_limit = c.exact_limit;
  const auto runs = replicate(c.replications, c.seed, [&](std::uint64_t seed) {
    SimulationTrace tr = simulate(m.model, c.horizon, seed, opts);
    const StabilityDiagnostics d = diagnostics(tr, burn_in);
    const EmpiricalPmf pmf = empirical_pmf(tr, burn_in);
    ojson j = {{"seed", seed},
               {"events", tr.events},
               {"arrivals", tr.arrivals},
               {"clamped_batches", tr.clamped_batches},
               {"aggregated_steps", tr.aggregated_steps},
               {"unresolved_time", pmf.unresolved_time},
               {"diagnostics", diagnostics_json(d)}};
    if (seed == c.seed && !c.trace_path.empty()) {
      auto f = open_file(c.trace_path);
      f << "time,level,phase\n";
      for (const auto& p : tr.path) f << p.time << ',' << p.level << ',' << p.phase << '\n';
    }
    return j;
  });
  report = header("simulate", m);
  report["horizon"] = c.horizon;
  report["burn_in"] = burn_in;
  report["replications"] = runs;
  return kOk;
}

int cmd_couple(const RunConfig& c, ojson& report) {
  Loaded m = load(c);
  const auto runs = replicate(c.replications, c.seed, [&](std::uint64_t seed) {
    CoupleOptions o;
    o.record_epochs = seed == c.seed && !c.trace_path.empty();
    const CoupledTrace tr = couple(m.model, c.horizon, seed, o);
    if (o.record_epochs) {
      auto f = open_file(c.trace_path);
      f << "time,original,q1,q2,phase";
      for (const auto& s : m.model.streams()) f << ",class_" << s.label;
      f << '\n';
      for (const auto& e : tr.epochs) {
        f << e.time << ',' << e.original << ',' << e.queue1 << ',' << e.queue2 << ',' << e.phase;
        for (auto n : e.per_class) f << ',' << n;
        f << '\n';
      }
    }
    return ojson{{"seed", seed},
                 {"customers", tr.customers},
                 {"epochs_checked", tr.epochs_checked},
                 {"clamped_batches", tr.clamped_batches},
                 {"violations", 0}};
  });
  report = header("couple", m);
  report["horizon"] = c.horizon;
  report["ordering_holds"] = true;
  report["replications"] = runs;
  return kOk;
}

int cmd_report(const RunConfig& c, ojson& report) {
  Loaded m = load(c);
  check_horizon(c);
  const double burn_in = c.burn_in.value_or(0.01 * c.horizon);
  if (!(burn_in >= 0.0 && burn_in < c.horizon))
    throw Error(ErrorCode::InvalidInput, "burn-in must satisfy 0 <= burn-in < horizon");
  const BmapView view = make_view(m.model, parse_queue(c.queue));
  const StabilityVerdict verdict = stability_verdict(m.model);

  report = header("report", m);
  report["queue"] = c.queue;
  report["verdict"] = verdict_json(m.model, verdict);

  std::optional<StationarySolution> sol;
  if (verdict.stable) {
    report["certificate"] = certificate_json(check_certificate(view));
    SolveOptions opts;
    opts.residual_tolerance = solve_tolerance(c);
    sol = solve_stationary(build_truncated(view, c.cap), opts);
    report["solution"] = solve_json(*sol, view, stability_verdict(view), false);
  } else {
    report["certificate"] = nullptr;
    report["solution"] = nullptr;
  }

  SimOptions sopts;
  sopts.exact_level_limit = c.exact_limit;
  const SimulationTrace tr = simulate(m.model, c.horizon, c.seed, sopts);
  const EmpiricalPmf pmf = empirical_pmf(tr, burn_in);
  ojson simj = {{"seed", c.seed},
                {"horizon", c.horizon},
                {"burn_in", burn_in},
                {"events", tr.events},
                {"clamped_batches", tr.clamped_batches},
                {"unresolved_time", pmf.unresolved_time},
                {"diagnostics", diagnostics_json(diagnostics(tr, burn_in))}};
  // The simulation runs the original queue; the distance is only
  // meaningful when the solved view has the same law.
  if (sol && make_view(m.model, QueueSelector::Original).single_rate())
    simj["tv_distance"] = level_total_variation(pmf.pmf, sol->level_marginals());
  else
    simj["tv_distance"] = nullptr;
  report["simulation"] = simj;
  return kOk;
}

int exit_code(ErrorCode code) {
  switch (category(code)) {
    case ErrorCategory::Verdict: return kUnstable;
    case ErrorCategory::Internal: return kInternalError;
    case ErrorCategory::Input: break;
  }
  return kInputError;
}

void print_error(std::ostream& err, std::string_view code, std::string_view cat, const std::string& msg) {
  ojson j;
  j["error"] = {{"code", code}, {"category", cat}, {"message", msg}};
  err << j.dump() << '\n';
}

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Verdict: return "verdict";
    case ErrorCategory::Internal: return "internal";
    case ErrorCategory::Input: break;
  }
  return "input";
}

}  // namespace

std::string version_string() {
  std::ostringstream os;
  os << "bmapinf " << BMAPINF_VERSION << " (" << BMAPINF_BUILD_TYPE << ", " << __VERSION__ << ", C++"
     << __cplusplus / 100 % 100 << ")";
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Stability, drift certificates, truncated solutions and coupled simulation for BMAP/M/inf queues",
               "bmapinf"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto common = [&c](CLI::App* s) {
    s->add_option("--model", c.model_path, "model JSON file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", c.out_path, "write the JSON report here instead of stdout");
    s->add_option("--generator-tol", c.generator_tol, "row-sum tolerance for D (env BMAPINF_GENERATOR_TOL)");
  };
  auto queue = [&c](CLI::App* s) {
    s->add_option("--queue", c.queue, "original, q1 (mu_min) or q2 (mu_max)")
        ->check(CLI::IsMember({"original", "q1", "q2"}));
  };
  auto sim_flags = [&c](CLI::App* s, bool trace) {
    s->add_option("--horizon", c.horizon, "simulated time")->required();
    s->add_option("--seed", c.seed, "base seed");
    s->add_option("--burn-in", c.burn_in, "time discarded before statistics");
    if (trace) {
      s->add_option("--replications", c.replications, "independent runs with seeds seed, seed+1, ...")
          ->check(CLI::PositiveNumber);
      s->add_option("--trace", c.trace_path, "CSV path for the first replication's path");
    }
  };

  auto* validate_cmd = app.add_subcommand("validate", "check a model file");
  common(validate_cmd);
  validate_cmd->add_flag("--echo", c.echo, "print the normalized model instead of a report");

  auto* stability_cmd = app.add_subcommand("stability", "log-moment stability verdict");
  common(stability_cmd);
  stability_cmd->add_flag("--strict", c.strict, "exit 1 when the model is unstable");

  auto* drift_cmd = app.add_subcommand("drift", "Foster-Lyapunov drift certificate");
  common(drift_cmd);
  queue(drift_cmd);
  drift_cmd->add_option("--range", c.range, "check drift inequalities up to this level (default 10K+100)");
  drift_cmd->add_option("--csv", c.csv_path, "CSV of k, min and max component of y(k)");

  auto* solve_cmd = app.add_subcommand("solve", "truncated stationary distribution");
  common(solve_cmd);
  queue(solve_cmd);
  solve_cmd->add_option("--cap", c.cap, "truncation level N");
  solve_cmd->add_option("--csv", c.csv_path, "CSV of level probabilities");
  solve_cmd->add_option("--solve-tol", c.solve_tol, "residual tolerance (env BMAPINF_SOLVE_TOL)");

  auto* simulate_cmd = app.add_subcommand("simulate", "event-driven simulation with recurrence diagnostics");
  common(simulate_cmd);
  sim_flags(simulate_cmd, true);
  simulate_cmd->add_option("--exact-limit", c.exact_limit, "level above which departures are aggregated");

  auto* couple_cmd = app.add_subcommand("couple", "three-way coupled simulation with ordering check");
  common(couple_cmd);
  sim_flags(couple_cmd, true);

  auto* report_cmd = app.add_subcommand("report", "verdict, certificate, solution and simulation in one report");
  common(report_cmd);
  queue(report_cmd);
  sim_flags(report_cmd, false);
  report_cmd->add_option("--cap", c.cap, "truncation level N");
  report_cmd->add_option("--exact-limit", c.exact_limit, "level above which departures are aggregated");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version_string() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, code_name(ErrorCode::InvalidInput), "input", e.what());
    return kInputError;
  }

  ojson report;
  int status = kOk;
  try {
    if (*validate_cmd) status = cmd_validate(c, report);
    else if (*stability_cmd) status = cmd_stability(c, report);
    else if (*drift_cmd) status = cmd_drift(c, report);
    else if (*solve_cmd) status = cmd_solve(c, report);
    else if (*simulate_cmd) status = cmd_simulate(c, report);
    else if (*couple_cmd) status = cmd_couple(c, report);
    else status = cmd_report(c, report);
  } catch (const Error& e) {
    print_error(err, code_name(e.code()), category_name(category(e.code())), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    print_error(err, "InternalError", "internal", e.what());
    return kInternalError;
  }

  const std::string text = report.dump(2);
  if (c.out_path.empty()) {
    out << text << '\n';
  } else {
    std::ofstream f(c.out_path);
    if (!f) {
      print_error(err, code_name(ErrorCode::InvalidInput), "input", "cannot open '" + c.out_path + "' for writing");
      return kInputError;
    }
    f << text << '\n';
  }
  return status;
}

}  // namespace bmapinf::cli
