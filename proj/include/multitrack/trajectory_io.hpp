#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "multitrack/admission.hpp"
#include "multitrack/dynamics.hpp"
#include "multitrack/swarm_sim.hpp"

namespace multitrack {

/// Identifies a run in the first line of every CSV it produces.
struct RunInfo {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
};

std::string_view tool_version();

/// "# scenario=... mode=... seed=... version=..."
std::string header_line(const RunInfo& info);

/// Shortest text that reads back to the same double.
std::string format_number(double value);

// Long format, one row per (time, population, option).
std::vector<std::string> dynamics_columns();
void write_dynamics_header(std::ostream& out, const RunInfo& info);
void write_dynamics_rows(std::ostream& out, const Topology& topology, const DynamicsLog& log,
                         double time_offset = 0.0);

// Long format, one row per (time, population).
std::vector<std::string> admission_columns();
void write_admission_header(std::ostream& out, const RunInfo& info);
void write_admission_rows(std::ostream& out, const Topology& topology, const AdmissionLog& log,
                          double time_offset = 0.0);

// Wide format, one row per slot.
std::vector<std::string> swarm_columns(const Topology& topology);
void write_swarm_header(std::ostream& out, const Topology& topology, const RunInfo& info);
void write_swarm_rows(std::ostream& out, SwarmMode mode, const SwarmRun& run);

struct CsvTable {
  std::map<std::string, std::string> meta;  // from the '#' header line
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  bool has(std::string_view column) const;
  /// Throws SchemaError when the column is missing.
  std::size_t index(std::string_view column) const;
  /// Throws SchemaError when the cell is not a number.
  double number(std::size_t row, std::size_t column) const;
};

/// Throws SchemaError on empty input or ragged rows.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

}  // namespace multitrack
