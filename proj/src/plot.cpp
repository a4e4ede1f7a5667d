#include "multitrack/plot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace multitrack {

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::payoffs: return "payoffs";
    case PlotKind::cost: return "cost";
    case PlotKind::utility: return "utility";
    case PlotKind::arrivals: return "arrivals";
  }
  return "payoffs";
}

std::optional<PlotKind> parse_plot_kind(std::string_view text) {
  for (PlotKind k : {PlotKind::payoffs, PlotKind::cost, PlotKind::utility, PlotKind::arrivals})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

namespace {

enum class Source { dynamics, admission, swarm };

Source detect(const CsvTable& t) {
  if (t.has("Fbar")) return Source::dynamics;
  if (t.has("F_star")) return Source::admission;
  if (t.has("slot_cost")) return Source::swarm;
  throw SchemaError("csv: not a dynamics, admission or swarm trajectory");
}

// Long tables: one series per key, one point per distinct time.
std::vector<Series> long_series(const CsvTable& t, const std::string& time_col,
                                const std::vector<std::string>& key_cols,
                                const std::string& value_col,
                                const std::optional<std::string>& population) {
  const std::size_t tc = t.index(time_col);
  const std::size_t vc = t.index(value_col);
  std::vector<std::size_t> kc;
  for (const auto& k : key_cols) kc.push_back(t.index(k));
  std::map<std::string, Series> by_key;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (population && !kc.empty() && t.rows[r][kc[0]] != *population) continue;
    std::string key;
    for (std::size_t c : kc) key += (key.empty() ? "" : "->") + t.rows[r][c];
    if (key.empty()) key = value_col;
    auto [it, fresh] = by_key.try_emplace(key);
    if (fresh) {
      it->second.label = key;
      order.push_back(key);
    }
    const double x = t.number(r, tc);
    if (!it->second.x.empty() && it->second.x.back() == x) continue;
    it->second.x.push_back(x);
    it->second.y.push_back(t.number(r, vc));
  }
  std::vector<Series> out;
  for (const auto& k : order) out.push_back(std::move(by_key[k]));
  return out;
}

std::vector<Series> wide_series(const CsvTable& t, const std::string& prefix,
                                const std::optional<std::string>& population) {
  const std::size_t tc = t.index("t");
  std::vector<Series> out;
  const std::string filter = population ? prefix + *population + "_" : prefix;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    const std::string& name = t.columns[c];
    if (name.rfind(prefix, 0) != 0) continue;
    if (population && name.rfind(filter, 0) != 0 && name != prefix + *population) continue;
    Series s;
    s.label = name.substr(prefix.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      s.x.push_back(t.number(r, tc));
      s.y.push_back(t.number(r, c));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Running mean of the per-slot cost, which is too noisy to read raw.
Series running_cost(const CsvTable& t) {
  const std::size_t tc = t.index("t");
  const std::size_t cc = t.index("slot_cost");
  Series s;
  s.label = "cost";
  double sum = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    sum += t.number(r, cc);
    s.x.push_back(t.number(r, tc));
    s.y.push_back(sum / static_cast<double>(r + 1));
  }
  return s;
}

std::vector<Series> table_series(const CsvTable& t, PlotKind kind,
                                 const std::optional<std::string>& population) {
  switch (detect(t)) {
    case Source::dynamics:
      if (kind == PlotKind::payoffs) return long_series(t, "t", {"j", "i"}, "F", population);
      if (kind == PlotKind::cost) return long_series(t, "t", {}, "C", std::nullopt);
      if (kind == PlotKind::arrivals) return long_series(t, "t", {"j", "i"}, "x", population);
      break;
    case Source::admission:
      if (kind == PlotKind::utility) return long_series(t, "T", {}, "net_utility", std::nullopt);
      if (kind == PlotKind::cost) return long_series(t, "T", {}, "C_star", std::nullopt);
      if (kind == PlotKind::arrivals) return long_series(t, "T", {"j"}, "x", population);
      if (kind == PlotKind::payoffs) return long_series(t, "T", {"j"}, "F_star", population);
      break;
    case Source::swarm:
      if (kind == PlotKind::payoffs) return wide_series(t, "F_", population);
      if (kind == PlotKind::cost) return {running_cost(t)};
      if (kind == PlotKind::arrivals) return wide_series(t, "x_", population);
      break;
  }
  throw SchemaError("csv: no '" + std::string(to_string(kind)) + "' data in this trajectory");
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

}  // namespace

Chart chart_from_tables(const std::vector<CsvTable>& tables, PlotKind kind,
                        const std::optional<std::string>& population) {
  if (tables.empty()) throw SchemaError("plot: no input tables");
  Chart chart;
  chart.title = std::string(to_string(kind));
  const Source first = detect(tables.front());
  chart.x_label = first == Source::admission ? "T" : "t";
  static const std::map<PlotKind, std::string> y_labels{{PlotKind::payoffs, "payoff"},
                                                        {PlotKind::cost, "cost"},
                                                        {PlotKind::utility, "net utility"},
                                                        {PlotKind::arrivals, "rate"}};
  chart.y_label = y_labels.at(kind);
  for (std::size_t n = 0; n < tables.size(); ++n) {
    const auto& t = tables[n];
    auto series = table_series(t, kind, population);
    if (tables.size() > 1) {
      std::string tag = t.meta.contains("mode") ? t.meta.at("mode") : "run" + std::to_string(n + 1);
      for (auto& s : series) s.label = series.size() == 1 ? tag : tag + " " + s.label;
    }
    for (auto& s : series) chart.series.push_back(std::move(s));
  }
  if (chart.series.empty()) throw SchemaError("plot: no series matched");
  if (tables.front().meta.contains("scenario"))
    chart.title = tables.front().meta.at("scenario") + ": " + chart.title;
  return chart;
}

std::string render_svg(const Chart& chart) {
  constexpr double width = 800, height = 480;
  constexpr double left = 80, right = 180, top = 40, bottom = 60;
  constexpr double pw = width - left - right, ph = height - top - bottom;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : chart.series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x1 = x0 + 1;
  if (y1 - y0 <= 1e-12 * std::max(1.0, std::abs(y0))) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(chart.title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    svg << "<line x1=\"" << px(xv) << "\" y1=\"" << top + ph << "\" x2=\"" << px(xv) << "\" y2=\""
        << top + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << tick_label(xv) << "</text>\n";
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << left << "\" y2=\""
        << py(yv) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << tick_label(yv) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\">" << escape(chart.x_label) << "</text>\n";
  svg << "<text x=\"20\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << top + ph / 2 << ")\">" << escape(chart.y_label) << "</text>\n";

  for (std::size_t n = 0; n < chart.series.size(); ++n) {
    const auto& s = chart.series[n];
    const char* color = palette[n % std::size(palette)];
    const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 2000);
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); k += stride)
      if (std::isfinite(s.y[k])) svg << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
    if (!s.x.empty() && std::isfinite(s.y.back())) svg << px(s.x.back()) << ',' << py(s.y.back());
    svg << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(n);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape(s.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace multitrack
