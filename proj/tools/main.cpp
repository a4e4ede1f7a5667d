#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "multitrack/commands.hpp"
#include "multitrack/trajectory_io.hpp"

using namespace multitrack;

namespace {

void add_run_flags(CLI::App* cmd, RunOverrides& run, std::string& extinct, std::string& dynamics) {
  cmd->add_option("--scenario", run.scenario, "built-in name (scenario-A, scenario-B) or JSON path")
      ->capture_default_str();
  cmd->add_option("--dynamics", dynamics, "replicator | bnn")
      ->check(CLI::IsMember({"replicator", "bnn"}));
  cmd->add_option("--dt", run.dt, "Euler step of the split dynamics")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", run.horizon, "time horizon")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", run.tolerance, "equilibrium tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--extinct", extinct, "start with option FROM:TO at zero rate");
}

bool finish_run_flags(RunOverrides& run, const std::string& extinct, const std::string& dynamics) {
  if (!dynamics.empty()) run.dynamics = parse_dynamics_kind(dynamics);
  if (!extinct.empty()) {
    run.extinct = parse_extinct(extinct);
    if (!run.extinct) {
      std::cerr << "error: --extinct expects FROM:TO, got '" << extinct << "'\n";
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multitrack: multi-tracker traffic splitting and admission simulator"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  SimulateOptions sim;
  std::string sim_extinct, sim_dynamics, sim_mode;
  auto* simulate = app.add_subcommand("simulate", "run dynamics (and admission / swarm) to CSV");
  add_run_flags(simulate, sim.run, sim_extinct, sim_dynamics);
  simulate->add_flag("--admission", sim.admission, "also run the admission controller");
  simulate->add_flag("--swarm", sim.swarm, "also run the stochastic swarm simulation");
  simulate->add_option("--mode", sim_mode, "multitrack | price-blind | no-split")
      ->check(CLI::IsMember({"multitrack", "price-blind", "no-split"}));
  simulate->add_option("--seed", sim.run.seed, "swarm RNG seed");
  simulate->add_option("--out", sim.out, "output directory (MULTITRACK_OUT overrides)");

  VerifyOptions ver;
  std::string ver_extinct, ver_dynamics;
  auto* verify = app.add_subcommand("verify", "compare the dynamics equilibrium with the oracle");
  add_run_flags(verify, ver.run, ver_extinct, ver_dynamics);

  PlotOptions plot;
  std::string plot_kind = "payoffs";
  std::string plot_output, plot_population;
  auto* plotter = app.add_subcommand("plot", "render trajectory CSVs as an SVG line chart");
  plotter->add_option("csv", plot.inputs, "trajectory CSV files")->required();
  plotter->add_option("--kind", plot_kind, "payoffs | cost | utility | arrivals")
      ->check(CLI::IsMember({"payoffs", "cost", "utility", "arrivals"}))
      ->capture_default_str();
  plotter->add_option("--population", plot_population, "only this tracker's series");
  plotter->add_option("-o,--output", plot_output, "SVG file to write");
  plotter->add_option("--out", plot.out, "output directory (MULTITRACK_OUT overrides)");

  std::string dump_name = "scenario-A";
  auto* dump = app.add_subcommand("dump-scenario", "print a scenario as canonical JSON");
  dump->add_option("scenario", dump_name, "built-in name or JSON path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (simulate->parsed()) {
    if (!finish_run_flags(sim.run, sim_extinct, sim_dynamics)) return kExitUsage;
    if (!sim_mode.empty()) sim.run.mode = parse_swarm_mode(sim_mode);
    return cmd_simulate(sim, std::cout, std::cerr);
  }
  if (verify->parsed()) {
    if (!finish_run_flags(ver.run, ver_extinct, ver_dynamics)) return kExitUsage;
    return cmd_verify(ver, std::cout, std::cerr);
  }
  if (plotter->parsed()) {
    plot.kind = *parse_plot_kind(plot_kind);
    if (!plot_output.empty()) plot.output = plot_output;
    if (!plot_population.empty()) plot.population = plot_population;
    return cmd_plot(plot, std::cout, std::cerr);
  }
  return cmd_dump_scenario(dump_name, std::cout, std::cerr);
}
