#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "multitrack/admission.hpp"
#include "multitrack/dynamics.hpp"
#include "multitrack/game_core.hpp"
#include "multitrack/swarm_sim.hpp"

namespace multitrack {

struct ScenarioTracker {
  std::string id;
  double capacity = 0.0;
  Role role = Role::transient;
  double weight = 1.0;
  double arrival_rate = 0.0;
};

struct ScenarioEdge {
  std::string from;
  std::string to;
  double price = 0.0;
};

struct CapacityChange {
  double time = 0.0;
  std::string tracker;
  double new_capacity = 0.0;
};

/// A validated experiment description: overlay, initial arrivals and the
/// settings of every time scale.
struct Scenario {
  std::string name;
  std::vector<ScenarioTracker> trackers;
  std::vector<ScenarioEdge> edges;
  double delay_weight = 0.5;
  DynamicsConfig dynamics;
  bool admission_enabled = false;
  AdmissionConfig admission;
  bool swarm_enabled = false;
  SwarmConfig swarm;
  std::vector<CapacityChange> capacity_schedule;

  Topology topology() const;
  std::vector<double> arrivals() const;
  /// Schedule with tracker ids resolved to indices.
  std::vector<CapacityEvent> events() const;
};

/// Throws ParseError on malformed JSON and ValidationError listing every problem.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON text: fixed key order, every field written out.
std::string dump_scenario(const Scenario& scenario);

std::vector<std::string> builtin_scenario_names();
std::optional<Scenario> builtin_scenario(std::string_view name);

/// A built-in name or a path to a JSON file.
Scenario resolve_scenario(std::string_view name_or_path);

}  // namespace multitrack
