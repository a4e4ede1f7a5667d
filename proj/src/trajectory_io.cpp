#include "multitrack/trajectory_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace multitrack {

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string_view tool_version() { return MULTITRACK_VERSION; }

std::string header_line(const RunInfo& info) {
  return "# scenario=" + info.scenario + " mode=" + info.mode +
         " seed=" + std::to_string(info.seed) + " version=" + std::string(tool_version());
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::vector<std::string> dynamics_columns() { return {"t", "j", "i", "x", "F", "Fbar", "C"}; }

void write_dynamics_header(std::ostream& out, const RunInfo& info) {
  out << header_line(info) << '\n';
  write_row(out, dynamics_columns());
}

void write_dynamics_rows(std::ostream& out, const Topology& topology, const DynamicsLog& log,
                         double time_offset) {
  for (const auto& s : log)
    for (std::size_t j = 0; j < topology.size(); ++j) {
      auto opts = topology.options(j);
      for (std::size_t k = 0; k < opts.size(); ++k)
        write_row(out, {format_number(s.t + time_offset), topology.tracker(j).id,
                        topology.tracker(opts[k].dest).id, format_number(s.state.rate(j, k)),
                        format_number(s.payoffs.payoffs[j][k]),
                        format_number(s.payoffs.averages[j]), format_number(s.cost)});
    }
}

std::vector<std::string> admission_columns() {
  return {"T", "j", "x", "F_star", "C_star", "net_utility"};
}

void write_admission_header(std::ostream& out, const RunInfo& info) {
  out << header_line(info) << '\n';
  write_row(out, admission_columns());
}

void write_admission_rows(std::ostream& out, const Topology& topology, const AdmissionLog& log,
                          double time_offset) {
  for (const auto& s : log)
    for (std::size_t j = 0; j < topology.size(); ++j)
      write_row(out, {format_number(s.time + time_offset), topology.tracker(j).id,
                      format_number(s.arrivals[j]), format_number(s.fstar[j]),
                      format_number(s.min_cost), format_number(s.net_utility)});
}

std::vector<std::string> swarm_columns(const Topology& topology) {
  std::vector<std::string> c{"t", "mode"};
  const std::size_t q = topology.size();
  for (std::size_t j = 0; j < q; ++j) c.push_back("x_" + topology.tracker(j).id);
  for (std::size_t j = 0; j < q; ++j)
    for (const auto& o : topology.options(j))
      c.push_back("y_" + topology.tracker(j).id + "_" + topology.tracker(o.dest).id);
  for (std::size_t j = 0; j < q; ++j)
    for (const auto& o : topology.options(j))
      c.push_back("F_" + topology.tracker(j).id + "_" + topology.tracker(o.dest).id);
  for (std::size_t i = 0; i < q; ++i) c.push_back("D_" + topology.tracker(i).id);
  for (std::size_t i = 0; i < q; ++i) c.push_back("c_" + topology.tracker(i).id);
  for (const char* name : {"delay_cost", "transit_cost", "slot_cost", "cumulative_cost"})
    c.emplace_back(name);
  return c;
}

void write_swarm_header(std::ostream& out, const Topology& topology, const RunInfo& info) {
  out << header_line(info) << '\n';
  write_row(out, swarm_columns(topology));
}

void write_swarm_rows(std::ostream& out, SwarmMode mode, const SwarmRun& run) {
  const std::string mode_name(to_string(mode));
  for (const auto& s : run.log) {
    std::vector<std::string> c{format_number(s.time), mode_name};
    for (double x : s.arrivals) c.push_back(format_number(x));
    for (const auto& row : s.probabilities)
      for (double y : row) c.push_back(format_number(y));
    for (const auto& row : s.payoffs)
      for (double f : row) c.push_back(format_number(f));
    for (double d : s.delay_estimate) c.push_back(format_number(d));
    for (double p : s.price_estimate) c.push_back(format_number(p));
    for (double v : {s.delay_cost, s.transit_cost, s.slot_cost, s.cumulative_cost})
      c.push_back(format_number(v));
    write_row(out, c);
  }
}

bool CsvTable::has(std::string_view column) const {
  return std::find(columns.begin(), columns.end(), column) != columns.end();
}

std::size_t CsvTable::index(std::string_view column) const {
  auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw SchemaError("csv: missing column '" + std::string(column) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double CsvTable::number(std::size_t row, std::size_t column) const {
  const std::string& cell = rows.at(row).at(column);
  double v = 0.0;
  auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size())
    throw SchemaError("csv: '" + cell + "' in column '" + columns.at(column) +
                      "' is not a number");
  return v;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream words(line.substr(1));
      std::string word;
      while (words >> word)
        if (auto eq = word.find('='); eq != std::string::npos)
          t.meta[word.substr(0, eq)] = word.substr(eq + 1);
      continue;
    }
    auto cells = split(line);
    if (!have_columns) {
      t.columns = std::move(cells);
      have_columns = true;
    } else {
      if (cells.size() != t.columns.size())
        throw SchemaError("csv: row " + std::to_string(t.rows.size() + 1) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(t.columns.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (!have_columns) throw SchemaError("csv: no header row");
  if (t.rows.empty()) throw SchemaError("csv: no data rows");
  return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("csv: cannot open '" + path.string() + "'");
  return read_csv(in);
}

}  // namespace multitrack
