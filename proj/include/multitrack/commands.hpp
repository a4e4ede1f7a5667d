#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "multitrack/dynamics.hpp"
#include "multitrack/plot.hpp"
#include "multitrack/scenario.hpp"
#include "multitrack/swarm_sim.hpp"

namespace multitrack {

enum ExitCode : int { kExitOk = 0, kExitGateFailed = 1, kExitUsage = 2 };

/// A forwarding option (from -> to) forced to zero in the initial split.
struct ExtinctOption {
  std::string from;
  std::string to;
};

/// Parses "FROM:TO". Returns nullopt when malformed.
std::optional<ExtinctOption> parse_extinct(const std::string& text);

struct RunOverrides {
  std::string scenario = "scenario-A";
  std::optional<DynamicsKind> dynamics;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<double> tolerance;
  std::optional<SwarmMode> mode;
  std::optional<std::uint64_t> seed;
  std::optional<ExtinctOption> extinct;
};

/// Loads the scenario and applies command-line overrides.
Scenario scenario_with_overrides(const RunOverrides& overrides);

/// Initial split with `extinct` held at zero: the other options absorb its
/// share. Throws Infeasible when that cannot respect capacities.
SplitState extinct_split(const Topology& topology, std::span<const double> arrivals,
                         const ExtinctOption& extinct);

/// MULTITRACK_OUT when set, otherwise `flag`.
std::filesystem::path output_directory(const std::filesystem::path& flag);

struct SimulateOptions {
  RunOverrides run;
  bool admission = false;
  bool swarm = false;
  std::filesystem::path out = ".";
};

struct VerifyOptions {
  RunOverrides run;
  double gap_tolerance = 1e-4;
  double kkt_tolerance = 1e-4;
};

struct PlotOptions {
  std::vector<std::filesystem::path> inputs;
  PlotKind kind = PlotKind::payoffs;
  std::optional<std::string> population;
  std::optional<std::filesystem::path> output;  // default: <out>/<first stem>-<kind>.svg
  std::filesystem::path out = ".";
};

// Each returns an ExitCode: 0 ok, 1 numeric failure, 2 usage or I/O error.
int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err);
int cmd_plot(const PlotOptions& options, std::ostream& out, std::ostream& err);
int cmd_dump_scenario(const std::string& scenario, std::ostream& out, std::ostream& err);

}  // namespace multitrack
