#include "multitrack/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "multitrack/admission.hpp"
#include "multitrack/oracle.hpp"
#include "multitrack/trajectory_io.hpp"

namespace multitrack {

namespace fs = std::filesystem;

std::optional<ExtinctOption> parse_extinct(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) return std::nullopt;
  if (text.find(':', colon + 1) != std::string::npos) return std::nullopt;
  return ExtinctOption{text.substr(0, colon), text.substr(colon + 1)};
}

Scenario scenario_with_overrides(const RunOverrides& o) {
  Scenario s = resolve_scenario(o.scenario);
  if (o.dynamics) s.dynamics.kind = *o.dynamics;
  if (o.dt) s.dynamics.dt = *o.dt;
  if (o.horizon) {
    s.dynamics.horizon = *o.horizon;
    s.swarm.horizon = *o.horizon;
  }
  if (o.tolerance) s.dynamics.eq_tolerance = *o.tolerance;
  if (o.mode) s.swarm.mode = *o.mode;
  if (o.seed) s.swarm.seed = *o.seed;
  s.dynamics.validate();
  s.admission.inner = s.dynamics;
  return s;
}

SplitState extinct_split(const Topology& topology, std::span<const double> arrivals,
                         const ExtinctOption& extinct) {
  const auto from = topology.index_of(extinct.from);
  const auto to = topology.index_of(extinct.to);
  if (!from || !to)
    throw std::invalid_argument("extinct option " + extinct.from + ":" + extinct.to +
                                " names an unknown tracker");
  if (*from == *to) throw std::invalid_argument("extinct option must be a cross edge");
  (void)topology.price(*from, *to);  // NoSuchEdge

  std::vector<EdgeSpec> kept;
  for (const auto& e : topology.edges())
    if (!(e.from == *from && e.to == *to)) kept.push_back(e);
  const Topology reduced(topology.trackers(), kept, topology.delay_weight());
  const SplitState start = initial_split(reduced, arrivals);

  std::vector<std::vector<double>> rows(topology.size());
  for (std::size_t j = 0; j < topology.size(); ++j) {
    rows[j].assign(topology.options(j).size(), 0.0);
    auto opts = reduced.options(j);
    for (std::size_t k = 0; k < opts.size(); ++k)
      rows[j][*topology.option_index(j, opts[k].dest)] = start.rate(j, k);
  }
  return SplitState(topology, std::move(rows));
}

fs::path output_directory(const fs::path& flag) {
  if (const char* env = std::getenv("MULTITRACK_OUT"); env && *env) return fs::path(env);
  return flag;
}

namespace {

// Keeps roughly this many samples in a dynamics trajectory.
constexpr double kTargetSamples = 5000.0;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw fs::filesystem_error("cannot write", path, std::make_error_code(std::errc::io_error));
  return out;
}

void print_report(std::ostream& out, const Topology& topology, const EquilibriumReport& r) {
  out << "equilibrium: stationary=" << (r.stationary ? "yes" : "no")
      << " converged=" << (r.converged ? "yes" : "no") << " steps=" << r.steps
      << " time=" << r.time << " cost=" << format_number(r.final_cost) << '\n';
  for (std::size_t j = 0; j < topology.size(); ++j) {
    out << "  " << topology.tracker(j).id << ": average=" << r.averages[j]
        << " spread=" << r.spread[j] << " wardrop_violation=" << r.wardrop_violation[j]
        << " split=[";
    auto row = r.final_state.row(j);
    auto opts = topology.options(j);
    for (std::size_t k = 0; k < row.size(); ++k)
      out << (k ? " " : "") << topology.tracker(opts[k].dest).id << ':' << row[k];
    out << "]\n";
  }
}

bool nonincreasing(const DynamicsLog& log, double slack) {
  for (std::size_t k = 1; k < log.size(); ++k)
    if (log[k].cost > log[k - 1].cost + slack) return false;
  return true;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: invalid scenario\n";
    for (const auto& p : e.problems()) err << "  " << p << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NoSuchEdge& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitGateFailed;
  }
}

SplitState starting_split(const Scenario& s, const Topology& topology,
                          const std::optional<ExtinctOption>& extinct) {
  const auto x = s.arrivals();
  return extinct ? extinct_split(topology, x, *extinct) : initial_split(topology, x);
}

// Runs the fluid dynamics, switching capacities at scheduled times.
EquilibriumReport simulate_dynamics(const Scenario& s, const std::optional<ExtinctOption>& extinct,
                                    std::ostream& csv, bool& cost_nonincreasing) {
  Topology topology = s.topology();
  const auto events = s.events();
  DynamicsConfig config = s.dynamics;
  config.log_stride = static_cast<std::size_t>(
      std::max(1.0, std::floor(config.horizon / config.dt / kTargetSamples)));

  SplitState state = starting_split(s, topology, extinct);
  double now = 0.0;
  std::size_t next = 0;
  EquilibriumReport report;
  cost_nonincreasing = true;
  while (true) {
    const double until = next < events.size() ? std::min(events[next].time, s.dynamics.horizon)
                                              : s.dynamics.horizon;
    if (until > now) {
      config.horizon = until - now;
      DynamicsRun run = run_to_equilibrium(topology, state, config);
      write_dynamics_rows(csv, topology, run.log, now);
      cost_nonincreasing = cost_nonincreasing && nonincreasing(run.log, 1e-9);
      state = run.report.final_state;
      report = std::move(run.report);
      report.time += now;
    } else if (next == 0 && now == 0.0) {
      report = assess_equilibrium(topology, state, config);
    }
    if (next >= events.size() || events[next].time >= s.dynamics.horizon) break;
    now = events[next].time;
    topology = topology.with_capacity(events[next].tracker, events[next].capacity);
    state = rescale_split(topology, state, state.row_sums());
    ++next;
  }
  return report;
}

}  // namespace

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = scenario_with_overrides(o.run);
    const Topology topology = s.topology();
    const fs::path dir = output_directory(o.out);
    fs::create_directories(dir);

    RunInfo info{s.name, std::string(to_string(s.dynamics.kind)), 0};
    {
      const fs::path path = dir / "dynamics.csv";
      auto csv = open_output(path);
      write_dynamics_header(csv, info);
      bool monotone = true;
      const EquilibriumReport report = simulate_dynamics(s, o.run.extinct, csv, monotone);
      out << "dynamics: " << to_string(s.dynamics.kind) << " -> " << path.string()
          << " cost_nonincreasing=" << (monotone ? "yes" : "no") << '\n';
      print_report(out, topology, report);
    }

    if (o.admission) {
      const fs::path path = dir / "admission.csv";
      auto csv = open_output(path);
      write_admission_header(csv, {s.name, "admission", 0});
      const AdmissionRun run = run_admission(topology, s.arrivals(), s.admission, s.events());
      write_admission_rows(csv, topology, run.log);
      bool monotone = true;
      for (std::size_t k = 1; k < run.log.size(); ++k)
        monotone = monotone && run.log[k].net_utility >= run.log[k - 1].net_utility - 1e-6;
      out << "admission -> " << path.string() << '\n'
          << "  steps=" << run.steps << " converged=" << (run.converged ? "yes" : "no")
          << " residual=" << run.residual << " net_utility=" << run.final_state.net_utility
          << " nondecreasing=" << (monotone ? "yes" : "no") << "\n  arrivals=[";
      for (std::size_t j = 0; j < topology.size(); ++j)
        out << (j ? " " : "") << topology.tracker(j).id << ':' << run.final_state.arrivals[j];
      out << "]\n";
    }

    if (o.swarm) {
      SwarmConfig config = s.swarm;
      config.admission = o.admission;
      const std::string mode(to_string(config.mode));
      const fs::path path = dir / ("swarm-" + mode + ".csv");
      auto csv = open_output(path);
      write_swarm_header(csv, topology, {s.name, mode, config.seed});
      const auto events = s.events();
      const SwarmRun run = run_swarm(topology, s.arrivals(), config, events);
      write_swarm_rows(csv, config.mode, run);
      out << "swarm: " << mode << " -> " << path.string() << '\n'
          << "  slots=" << run.log.size() << " mean_cost_final_half="
          << average_slot_cost(run, config.horizon / 2.0, config.horizon) << '\n';
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = scenario_with_overrides(o.run);
    const Topology topology = s.topology();
    const auto x = s.arrivals();

    SplitState start;
    try {
      start = starting_split(s, topology, o.run.extinct);
    } catch (const Infeasible& e) {
      err << "error: no feasible starting split: " << e.what() << '\n';
      out << "verify: FAIL (infeasible start)\n";
      return static_cast<int>(kExitGateFailed);
    }

    DynamicsConfig config = s.dynamics;
    config.log_stride = std::size_t{1} << 30;
    const DynamicsRun run = run_to_equilibrium(topology, start, config);
    const MinCostResult oracle = min_cost_split(topology, x, 1e-10);
    const double gap =
        std::abs(run.report.final_cost - oracle.cost) / std::max(std::abs(oracle.cost), 1e-300);
    const KKTReport kkt = verify_wardrop(topology, run.report.final_state, o.kkt_tolerance);
    const bool pass = gap < o.gap_tolerance && kkt.pass;

    print_report(out, topology, run.report);
    out << "dynamics_cost=" << format_number(run.report.final_cost)
        << " oracle_cost=" << format_number(oracle.cost) << " relative_gap=" << gap << '\n';
    out << "kkt: pass=" << (kkt.pass ? "yes" : "no") << " max_stationarity=" << kkt.max_stationarity
        << " min_slackness=" << kkt.min_slackness << '\n';
    for (std::size_t j = 0; j < topology.size(); ++j)
      out << "  " << topology.tracker(j).id << ": lambda=" << kkt.multipliers[j] << '\n';
    out << "verify: " << (pass ? "PASS" : "FAIL") << '\n';
    return static_cast<int>(pass ? kExitOk : kExitGateFailed);
  });
}

int cmd_plot(const PlotOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.inputs.empty()) throw std::invalid_argument("plot: at least one CSV is required");
    std::vector<CsvTable> tables;
    for (const auto& p : o.inputs) tables.push_back(read_csv_file(p));
    const Chart chart = chart_from_tables(tables, o.kind, o.population);
    fs::path target;
    if (o.output) {
      target = *o.output;
    } else {
      target = output_directory(o.out) /
               (o.inputs.front().stem().string() + "-" + std::string(to_string(o.kind)) + ".svg");
    }
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    auto svg = open_output(target);
    svg << render_svg(chart);
    out << "plot: " << chart.series.size() << " series -> " << target.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_dump_scenario(const std::string& scenario, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    out << dump_scenario(resolve_scenario(scenario));
    return static_cast<int>(kExitOk);
  });
}

}  // namespace multitrack
