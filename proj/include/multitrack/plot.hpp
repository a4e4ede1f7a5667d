#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "multitrack/trajectory_io.hpp"

namespace multitrack {

enum class PlotKind { payoffs, cost, utility, arrivals };

std::string_view to_string(PlotKind kind);
std::optional<PlotKind> parse_plot_kind(std::string_view text);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Builds a chart from dynamics, admission or swarm CSVs. With several
/// tables each series is prefixed by its run's mode. `population` keeps
/// only that tracker's series. Throws SchemaError.
Chart chart_from_tables(const std::vector<CsvTable>& tables, PlotKind kind,
                        const std::optional<std::string>& population = std::nullopt);

std::string render_svg(const Chart& chart);

}  // namespace multitrack
