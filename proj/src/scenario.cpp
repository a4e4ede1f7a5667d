#include "multitrack/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace multitrack {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads typed fields from one JSON object, recording problems instead of
// throwing so that validation reports all of them.
class FieldReader {
 public:
  FieldReader(const json& object, std::string where, std::vector<std::string>& problems)
      : object_(object), where_(std::move(where)), problems_(problems) {
    if (!object_.is_object()) problems_.push_back(where_ + ": expected an object");
  }

  ~FieldReader() {
    if (!object_.is_object()) return;
    for (const auto& [key, value] : object_.items())
      if (!seen_.contains(key)) problems_.push_back(where_ + ": unknown field '" + key + "'");
  }

  FieldReader(const FieldReader&) = delete;
  FieldReader& operator=(const FieldReader&) = delete;

  const json* find(const std::string& key) {
    seen_.insert(key);
    if (!object_.is_object()) return nullptr;
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback, bool required = false) {
    const json* v = find(key);
    if (!v) {
      if (required) problems_.push_back(where_ + ": missing '" + key + "'");
      return fallback;
    }
    if (!v->is_number()) {
      problems_.push_back(where_ + ": '" + key + "' must be a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      problems_.push_back(where_ + ": '" + key + "' must be a nonnegative integer");
      return fallback;
    }
    return v->get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      problems_.push_back(where_ + ": '" + key + "' must be true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::string fallback, bool required = false) {
    const json* v = find(key);
    if (!v) {
      if (required) problems_.push_back(where_ + ": missing '" + key + "'");
      return fallback;
    }
    if (!v->is_string()) {
      problems_.push_back(where_ + ": '" + key + "' must be a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  void require(bool ok, const std::string& message) {
    if (!ok) problems_.push_back(where_ + ": " + message);
  }

  const std::string& where() const { return where_; }

 private:
  const json& object_;
  std::string where_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

const json kEmptyObject = json::object();

const json& section(FieldReader& top, const std::string& key) {
  const json* v = top.find(key);
  return v ? *v : kEmptyObject;
}

void read_trackers(const json* list, Scenario& s, std::vector<std::string>& problems) {
  if (!list || !list->is_array() || list->empty()) {
    problems.push_back("trackers: expected a nonempty array");
    return;
  }
  std::set<std::string> ids;
  for (std::size_t n = 0; n < list->size(); ++n) {
    FieldReader r((*list)[n], "trackers[" + std::to_string(n) + "]", problems);
    ScenarioTracker t;
    t.id = r.text("id", "", true);
    t.capacity = r.number("capacity", 0.0, true);
    const std::string role = r.text("role", "transient");
    if (auto parsed = parse_role(role)) t.role = *parsed;
    else r.require(false, "role must be 'steady' or 'transient', got '" + role + "'");
    t.weight = r.number("weight", 1.0);
    t.arrival_rate = r.number("arrival_rate", 0.0, true);
    r.require(!t.id.empty(), "id must be nonempty");
    r.require(ids.insert(t.id).second || t.id.empty(), "duplicate id '" + t.id + "'");
    r.require(t.capacity > 0.0, "capacity must be positive");
    r.require(t.weight > 0.0, "weight must be positive");
    r.require(t.arrival_rate >= 0.0, "arrival_rate must be nonnegative");
    s.trackers.push_back(std::move(t));
  }
}

void read_edges(const json* list, Scenario& s, std::vector<std::string>& problems) {
  if (!list) return;
  if (!list->is_array()) {
    problems.push_back("edges: expected an array");
    return;
  }
  std::set<std::string> ids;
  for (const auto& t : s.trackers) ids.insert(t.id);
  for (std::size_t n = 0; n < list->size(); ++n) {
    FieldReader r((*list)[n], "edges[" + std::to_string(n) + "]", problems);
    ScenarioEdge e;
    e.from = r.text("from", "", true);
    e.to = r.text("to", "", true);
    e.price = r.number("price", 0.0, true);
    const std::string name = r.where() + " (" + e.from + " -> " + e.to + ")";
    if (!ids.contains(e.from)) problems.push_back(name + ": unknown tracker '" + e.from + "'");
    if (!ids.contains(e.to)) problems.push_back(name + ": unknown tracker '" + e.to + "'");
    s.edges.push_back(std::move(e));
  }
}

void read_dynamics(const json& j, Scenario& s, std::vector<std::string>& problems) {
  FieldReader r(j, "dynamics", problems);
  const std::string kind = r.text("kind", std::string(to_string(s.dynamics.kind)));
  if (auto parsed = parse_dynamics_kind(kind)) s.dynamics.kind = *parsed;
  else r.require(false, "kind must be 'replicator' or 'bnn', got '" + kind + "'");
  s.dynamics.dt = r.number("dt", s.dynamics.dt);
  s.dynamics.horizon = r.number("horizon", s.dynamics.horizon);
  s.dynamics.eq_tolerance = r.number("eq_tolerance", s.dynamics.eq_tolerance);
  r.require(s.dynamics.dt > 0.0, "dt must be positive");
  r.require(s.dynamics.horizon > 0.0, "horizon must be positive");
  r.require(s.dynamics.eq_tolerance > 0.0, "eq_tolerance must be positive");
  s.admission.inner = s.dynamics;
}

void read_admission(const json& j, Scenario& s, std::vector<std::string>& problems) {
  FieldReader r(j, "admission", problems);
  s.admission_enabled = r.flag("enabled", s.admission_enabled);
  s.admission.dt_medium = r.number("dt_medium", s.admission.dt_medium);
  s.admission.steps = r.count("steps", s.admission.steps);
  s.admission.x_min = r.number("x_min", s.admission.x_min);
  s.admission.outer_tolerance = r.number("outer_tolerance", s.admission.outer_tolerance);
  r.require(s.admission.dt_medium > 0.0, "dt_medium must be positive");
  r.require(s.admission.x_min > 0.0, "x_min must be positive");
  r.require(s.admission.outer_tolerance > 0.0 && s.admission.outer_tolerance < 1.0,
            "outer_tolerance must lie in (0, 1)");
}

void read_swarm(const json& j, Scenario& s, std::vector<std::string>& problems) {
  FieldReader r(j, "swarm", problems);
  SwarmConfig& c = s.swarm;
  s.swarm_enabled = r.flag("enabled", s.swarm_enabled);
  c.slot = r.number("slot", c.slot);
  c.admission_interval = r.number("admission_interval", c.admission_interval);
  c.ema_weight = r.number("ema_weight", c.ema_weight);
  c.seed = r.count("seed", c.seed);
  c.horizon = r.number("horizon", c.horizon);
  const std::string mode = r.text("mode", std::string(to_string(c.mode)));
  if (auto parsed = parse_swarm_mode(mode)) c.mode = *parsed;
  else r.require(false, "mode must be multitrack, price-blind or no-split, got '" + mode + "'");
  const std::string estimator = r.text("price_estimator", std::string(to_string(c.price_estimator)));
  if (auto parsed = parse_price_estimator(estimator)) c.price_estimator = *parsed;
  else r.require(false, "price_estimator must be finite-difference or elasticity");
  c.split_gain = r.number("split_gain", c.split_gain);
  c.probability_floor = r.number("probability_floor", c.probability_floor);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
}

void read_schedule(const json* list, Scenario& s, std::vector<std::string>& problems) {
  if (!list) return;
  if (!list->is_array()) {
    problems.push_back("capacity_schedule: expected an array");
    return;
  }
  std::set<std::string> ids;
  for (const auto& t : s.trackers) ids.insert(t.id);
  double last = -INFINITY;
  for (std::size_t n = 0; n < list->size(); ++n) {
    FieldReader r((*list)[n], "capacity_schedule[" + std::to_string(n) + "]", problems);
    CapacityChange c;
    c.time = r.number("time", 0.0, true);
    c.tracker = r.text("tracker", "", true);
    c.new_capacity = r.number("new_capacity", 0.0, true);
    r.require(c.time >= 0.0, "time must be nonnegative");
    r.require(c.time > last, "times must be strictly increasing");
    r.require(ids.contains(c.tracker), "unknown tracker '" + c.tracker + "'");
    r.require(c.new_capacity > 0.0, "new_capacity must be positive");
    last = c.time;
    s.capacity_schedule.push_back(std::move(c));
  }
}

}  // namespace

Topology Scenario::topology() const {
  std::vector<TrackerSpec> specs;
  for (const auto& t : trackers) specs.push_back({t.id, t.capacity, t.role, t.weight});
  auto index = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < trackers.size(); ++i)
      if (trackers[i].id == id) return i;
    throw ValidationError({"unknown tracker '" + id + "'"});
  };
  std::vector<EdgeSpec> links;
  for (const auto& e : edges) links.push_back({index(e.from), index(e.to), e.price});
  return Topology(std::move(specs), std::move(links), delay_weight);
}

std::vector<double> Scenario::arrivals() const {
  std::vector<double> x;
  for (const auto& t : trackers) x.push_back(t.arrival_rate);
  return x;
}

std::vector<CapacityEvent> Scenario::events() const {
  const Topology topo = topology();
  std::vector<CapacityEvent> out;
  for (const auto& c : capacity_schedule)
    out.push_back({c.time, *topo.index_of(c.tracker), c.new_capacity});
  return out;
}

Scenario parse_scenario(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  std::vector<std::string> problems;
  Scenario s;
  {
    FieldReader top(doc, "scenario", problems);
    s.name = top.text("name", "unnamed");
    s.delay_weight = top.number("delay_weight", 0.5);
    top.require(s.delay_weight > 0.0 && s.delay_weight < 1.0, "delay_weight must lie in (0, 1)");
    read_trackers(top.find("trackers"), s, problems);
    read_edges(top.find("edges"), s, problems);
    read_dynamics(section(top, "dynamics"), s, problems);
    read_admission(section(top, "admission"), s, problems);
    read_swarm(section(top, "swarm"), s, problems);
    read_schedule(top.find("capacity_schedule"), s, problems);
  }
  if (problems.empty()) {
    try {
      (void)s.topology();
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::string dump_scenario(const Scenario& s) {
  ordered_json doc;
  doc["name"] = s.name;
  doc["delay_weight"] = s.delay_weight;
  doc["trackers"] = ordered_json::array();
  for (const auto& t : s.trackers)
    doc["trackers"].push_back({{"id", t.id},
                               {"capacity", t.capacity},
                               {"role", std::string(to_string(t.role))},
                               {"weight", t.weight},
                               {"arrival_rate", t.arrival_rate}});
  doc["edges"] = ordered_json::array();
  for (const auto& e : s.edges)
    doc["edges"].push_back({{"from", e.from}, {"to", e.to}, {"price", e.price}});
  doc["dynamics"] = {{"kind", std::string(to_string(s.dynamics.kind))},
                     {"dt", s.dynamics.dt},
                     {"horizon", s.dynamics.horizon},
                     {"eq_tolerance", s.dynamics.eq_tolerance}};
  doc["admission"] = {{"enabled", s.admission_enabled},
                      {"dt_medium", s.admission.dt_medium},
                      {"steps", s.admission.steps},
                      {"x_min", s.admission.x_min},
                      {"outer_tolerance", s.admission.outer_tolerance}};
  doc["swarm"] = {{"enabled", s.swarm_enabled},
                  {"slot", s.swarm.slot},
                  {"admission_interval", s.swarm.admission_interval},
                  {"ema_weight", s.swarm.ema_weight},
                  {"seed", s.swarm.seed},
                  {"horizon", s.swarm.horizon},
                  {"mode", std::string(to_string(s.swarm.mode))},
                  {"price_estimator", std::string(to_string(s.swarm.price_estimator))},
                  {"split_gain", s.swarm.split_gain},
                  {"probability_floor", s.swarm.probability_floor}};
  doc["capacity_schedule"] = ordered_json::array();
  for (const auto& c : s.capacity_schedule)
    doc["capacity_schedule"].push_back(
        {{"time", c.time}, {"tracker", c.tracker}, {"new_capacity", c.new_capacity}});
  return doc.dump(2) + "\n";
}

std::vector<std::string> builtin_scenario_names() { return {"scenario-A", "scenario-B"}; }

std::optional<Scenario> builtin_scenario(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  if (name == "scenario-A") {
    s.trackers = {{"T1", 30.0, Role::steady, 10.0, 10.0},
                  {"T2", 20.0, Role::transient, 10.0, 20.0},
                  {"T3", 20.0, Role::transient, 10.0, 20.0}};
    s.edges = {{"T2", "T1", 2.0}, {"T3", "T1", 1.0}};
    s.admission_enabled = true;
  } else if (name == "scenario-B") {
    // Capacities make T1's swarm resource rich and T2, T3 overloaded on their own.
    s.trackers = {{"T1", 20.0, Role::steady, 10.0, 3.0},
                  {"T2", 4.0, Role::transient, 10.0, 5.0},
                  {"T3", 6.0, Role::transient, 10.0, 7.0}};
    s.edges = {{"T2", "T1", 20.0}, {"T3", "T1", 10.0}};
    s.admission_enabled = true;
    // T2's x F*(x) has slope about 22 near its fixed point; Euler needs dt < 2 / 22.
    s.admission.dt_medium = 0.02;
    s.admission.steps = 5000;
    s.swarm_enabled = true;
    s.swarm.horizon = 8000.0;
    s.swarm.price_estimator = PriceEstimator::elasticity;
  } else {
    return std::nullopt;
  }
  s.admission.inner = s.dynamics;
  return s;
}

Scenario resolve_scenario(std::string_view name_or_path) {
  if (auto s = builtin_scenario(name_or_path)) return *s;
  return load_scenario(std::filesystem::path(std::string(name_or_path)));
}

}  // namespace multitrack
