#include "multitrack/game_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace multitrack {

namespace {

std::string describe_capacity(std::size_t tracker, double load, double capacity) {
  std::ostringstream out;
  out << "capacity violation at tracker " << tracker << ": load " << load
      << " >= guard of capacity " << capacity;
  return out.str();
}

std::string describe_edge(std::size_t from, std::size_t to) {
  std::ostringstream out;
  out << "no edge " << from << " -> " << to;
  return out.str();
}

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream out;
  out << "validation failed (" << problems.size() << " problem"
      << (problems.size() == 1 ? "" : "s") << ")";
  for (const auto& p : problems) out << "\n  - " << p;
  return out.str();
}

}  // namespace

CapacityViolation::CapacityViolation(std::size_t tracker, double load, double capacity)
    : Error(describe_capacity(tracker, load, capacity)),
      tracker_(tracker),
      load_(load),
      capacity_(capacity) {}

NoSuchEdge::NoSuchEdge(std::size_t from, std::size_t to) : Error(describe_edge(from, to)) {}

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

std::string_view to_string(Role role) {
  return role == Role::steady ? "steady" : "transient";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "steady") return Role::steady;
  if (text == "transient") return Role::transient;
  return std::nullopt;
}

Topology::Topology(std::vector<TrackerSpec> trackers, std::vector<EdgeSpec> edges,
                   double delay_weight)
    : trackers_(std::move(trackers)), edges_(std::move(edges)), delay_weight_(delay_weight) {
  std::vector<std::string> problems;
  if (trackers_.empty()) problems.emplace_back("topology has no trackers");
  if (!(delay_weight_ > 0.0 && delay_weight_ <= 1.0))
    problems.emplace_back("delay_weight must lie in (0, 1]");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < trackers_.size(); ++i) {
    const auto& t = trackers_[i];
    if (!ids.insert(t.id).second) problems.push_back("duplicate tracker id '" + t.id + "'");
    if (!(t.capacity > 0.0) || !std::isfinite(t.capacity))
      problems.push_back("tracker '" + t.id + "': capacity must be positive");
    if (!(t.weight > 0.0) || !std::isfinite(t.weight))
      problems.push_back("tracker '" + t.id + "': weight must be positive");
  }

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : edges_) {
    std::ostringstream name;
    name << "edge " << e.from << " -> " << e.to;
    if (e.from >= trackers_.size() || e.to >= trackers_.size()) {
      problems.push_back(name.str() + ": endpoint out of range");
      continue;
    }
    if (e.from == e.to) {
      problems.push_back(name.str() + ": self-loops are implicit");
      continue;
    }
    if (!seen.insert({e.from, e.to}).second) problems.push_back(name.str() + ": duplicate");
    if (!(e.price >= 0.0) || !std::isfinite(e.price))
      problems.push_back(name.str() + ": price must be nonnegative");
    if (trackers_[e.to].role != Role::steady)
      problems.push_back(name.str() + ": destination '" + trackers_[e.to].id +
                         "' is not steady");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));

  options_.resize(trackers_.size());
  for (std::size_t j = 0; j < trackers_.size(); ++j) options_[j].push_back({j, 0.0});
  for (const auto& e : edges_) options_[e.from].push_back({e.to, e.price});
}

std::optional<std::size_t> Topology::option_index(std::size_t j, std::size_t i) const {
  const auto& opts = options_.at(j);
  for (std::size_t k = 0; k < opts.size(); ++k)
    if (opts[k].dest == i) return k;
  return std::nullopt;
}

std::optional<std::size_t> Topology::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < trackers_.size(); ++i)
    if (trackers_[i].id == id) return i;
  return std::nullopt;
}

double Topology::price(std::size_t j, std::size_t i) const {
  if (j >= size() || i >= size()) throw NoSuchEdge(j, i);
  auto k = option_index(j, i);
  if (!k) throw NoSuchEdge(j, i);
  return options_[j][*k].price;
}

Topology Topology::with_capacity(std::size_t i, double capacity) const {
  auto trackers = trackers_;
  trackers.at(i).capacity = capacity;
  return Topology(std::move(trackers), edges_, delay_weight_);
}

Topology Topology::with_weights(std::span<const double> weights) const {
  if (weights.size() != trackers_.size())
    throw std::invalid_argument("weight vector size mismatch");
  auto trackers = trackers_;
  for (std::size_t i = 0; i < trackers.size(); ++i) trackers[i].weight = weights[i];
  return Topology(std::move(trackers), edges_, delay_weight_);
}

SplitState::SplitState(const Topology& topology, std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {
  if (rows_.size() != topology.size()) throw std::invalid_argument("split state: wrong row count");
  for (std::size_t j = 0; j < rows_.size(); ++j) {
    if (rows_[j].size() != topology.options(j).size())
      throw std::invalid_argument("split state: row " + std::to_string(j) +
                                  " does not match the option set");
    for (double v : rows_[j])
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("split state: negative or non-finite rate in row " +
                                    std::to_string(j));
  }
}

SplitState SplitState::zeros(const Topology& topology) {
  std::vector<std::vector<double>> rows(topology.size());
  for (std::size_t j = 0; j < topology.size(); ++j) rows[j].assign(topology.options(j).size(), 0.0);
  return SplitState(topology, std::move(rows));
}

double SplitState::rate_to(const Topology& topology, std::size_t j, std::size_t i) const {
  auto k = topology.option_index(j, i);
  return k ? rows_.at(j)[*k] : 0.0;
}

double SplitState::row_sum(std::size_t j) const {
  const auto& r = rows_.at(j);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

std::vector<double> SplitState::row_sums() const {
  std::vector<double> sums(rows_.size());
  for (std::size_t j = 0; j < rows_.size(); ++j) sums[j] = row_sum(j);
  return sums;
}

std::vector<double> SplitState::loads(const Topology& topology) const {
  std::vector<double> z(topology.size(), 0.0);
  for (std::size_t j = 0; j < rows_.size(); ++j) {
    auto opts = topology.options(j);
    for (std::size_t k = 0; k < opts.size(); ++k) z[opts[k].dest] += rows_[j][k];
  }
  return z;
}

void check_capacity(std::size_t tracker, double load, double capacity) {
  if (!(load < (1.0 - kCapacityGuard) * capacity)) throw CapacityViolation(tracker, load, capacity);
}

double delay_at_load(double load, double capacity) { return 1.0 / (capacity - load); }

double congestion_price_at_load(double load, double capacity) {
  const double slack = capacity - load;
  return load / (slack * slack);
}

namespace {

double checked_load(const Topology& topology, const SplitState& state, std::size_t i) {
  if (i >= topology.size()) throw std::out_of_range("tracker index out of range");
  const double z = state.loads(topology)[i];
  check_capacity(i, z, topology.tracker(i).capacity);
  return z;
}

}  // namespace

double delay(const Topology& topology, const SplitState& state, std::size_t i) {
  return delay_at_load(checked_load(topology, state, i), topology.tracker(i).capacity);
}

double congestion_price(const Topology& topology, const SplitState& state, std::size_t i) {
  return congestion_price_at_load(checked_load(topology, state, i), topology.tracker(i).capacity);
}

double payoff(const Topology& topology, const SplitState& state, std::size_t j, std::size_t i) {
  const double p = topology.price(j, i);
  const double z = checked_load(topology, state, i);
  const double c = topology.tracker(i).capacity;
  return topology.delay_scale() * (delay_at_load(z, c) + congestion_price_at_load(z, c)) +
         topology.transit_scale() * p;
}

double system_cost(const Topology& topology, const SplitState& state) {
  const auto z = state.loads(topology);
  double delay_total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double c = topology.tracker(i).capacity;
    check_capacity(i, z[i], c);
    delay_total += z[i] / (c - z[i]);
  }
  double transit_total = 0.0;
  for (std::size_t j = 0; j < topology.size(); ++j) {
    auto opts = topology.options(j);
    for (std::size_t k = 0; k < opts.size(); ++k) transit_total += opts[k].price * state.rate(j, k);
  }
  return topology.delay_scale() * delay_total + topology.transit_scale() * transit_total;
}

PayoffView payoff_view(const Topology& topology, const SplitState& state) {
  const auto z = state.loads(topology);
  std::vector<double> marginal(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double c = topology.tracker(i).capacity;
    check_capacity(i, z[i], c);
    marginal[i] = topology.delay_scale() * (delay_at_load(z[i], c) + congestion_price_at_load(z[i], c));
  }

  PayoffView view;
  view.payoffs.resize(topology.size());
  view.averages.resize(topology.size());
  for (std::size_t j = 0; j < topology.size(); ++j) {
    auto opts = topology.options(j);
    auto& f = view.payoffs[j];
    f.resize(opts.size());
    double mass = 0.0;
    double weighted = 0.0;
    for (std::size_t k = 0; k < opts.size(); ++k) {
      f[k] = marginal[opts[k].dest] + topology.transit_scale() * opts[k].price;
      mass += state.rate(j, k);
      weighted += state.rate(j, k) * f[k];
    }
    // An empty population has no mix; report the payoff a first entrant would see.
    view.averages[j] = mass > 0.0 ? weighted / mass : *std::min_element(f.begin(), f.end());
  }
  return view;
}

void rescale_row(std::span<double> row, double mass) {
  if (row.empty()) return;
  double sum = std::accumulate(row.begin(), row.end(), 0.0);
  if (sum <= 0.0) {
    for (double& v : row) v = mass / static_cast<double>(row.size());
  } else {
    const double f = mass / sum;
    for (double& v : row) v *= f;
  }
  auto total = [&] { return std::accumulate(row.begin(), row.end(), 0.0); };
  auto largest = std::max_element(row.begin(), row.end());
  for (int pass = 0; pass < 4 && total() != mass; ++pass)
    *largest = std::max(0.0, *largest + (mass - total()));
  if (total() == mass) return;

  // Rounding can leave the sum one ulp off with no single correction that
  // lands on it; walk entries a few ulps at a time, biggest first.
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return row[a] > row[b]; });
  for (std::size_t i : order) {
    const double base = row[i];
    for (double toward : {mass + 1.0, -1.0}) {
      row[i] = base;
      for (int step = 0; step < 16 && row[i] > 0.0; ++step) {
        row[i] = std::nextafter(row[i], toward);
        if (total() == mass) return;
      }
    }
    row[i] = base;
  }
}

}  // namespace multitrack
