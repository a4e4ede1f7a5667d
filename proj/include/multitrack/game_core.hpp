#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multitrack/errors.hpp"

namespace multitrack {

/// Loads at or above (1 - kCapacityGuard) * C are treated as saturated.
inline constexpr double kCapacityGuard = 1e-9;

enum class Role { steady, transient };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct TrackerSpec {
  std::string id;
  double capacity = 0.0;  // users per unit time
  Role role = Role::transient;
  double weight = 1.0;  // utility weight w_j
};

/// Cross-domain forwarding edge (from -> to). Self-loops are implicit.
struct EdgeSpec {
  std::size_t from = 0;
  std::size_t to = 0;
  double price = 0.0;
};

/// One forwarding option of a tracker: destination cloud and transit price.
struct Option {
  std::size_t dest = 0;
  double price = 0.0;
};

/// The mTracker overlay. Every tracker's first option is its own cloud at
/// zero price; the remaining options follow the order of the edge list.
class Topology {
 public:
  /// Throws ValidationError listing every broken invariant.
  /// `delay_weight` is the convex weight theta on delay versus transit cost;
  /// 0.5 weighs them equally and reproduces the unscaled objective.
  Topology(std::vector<TrackerSpec> trackers, std::vector<EdgeSpec> edges,
           double delay_weight = 0.5);

  std::size_t size() const { return trackers_.size(); }
  const TrackerSpec& tracker(std::size_t i) const { return trackers_.at(i); }
  const std::vector<TrackerSpec>& trackers() const { return trackers_; }
  const std::vector<EdgeSpec>& edges() const { return edges_; }
  double delay_weight() const { return delay_weight_; }

  std::span<const Option> options(std::size_t j) const { return options_.at(j); }
  std::optional<std::size_t> option_index(std::size_t j, std::size_t i) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  /// Transit price p_j^i. Throws NoSuchEdge.
  double price(std::size_t j, std::size_t i) const;

  /// Scale applied to the delay and congestion terms (2 * theta).
  double delay_scale() const { return 2.0 * delay_weight_; }
  /// Scale applied to transit prices (2 * (1 - theta)).
  double transit_scale() const { return 2.0 * (1.0 - delay_weight_); }

  Topology with_capacity(std::size_t i, double capacity) const;
  Topology with_weights(std::span<const double> weights) const;

 private:
  std::vector<TrackerSpec> trackers_;
  std::vector<EdgeSpec> edges_;
  double delay_weight_;
  std::vector<std::vector<Option>> options_;
};

/// Capacity change applied at the large time scale.
struct CapacityEvent {
  double time = 0.0;
  std::size_t tracker = 0;
  double capacity = 0.0;
};

/// Forwarding rates x_j^i, stored per tracker j in the order of
/// Topology::options(j). Off-edge entries have no slot at all.
class SplitState {
 public:
  SplitState() = default;
  /// Throws std::invalid_argument on shape mismatch or negative entries.
  SplitState(const Topology& topology, std::vector<std::vector<double>> rows);

  static SplitState zeros(const Topology& topology);

  std::size_t populations() const { return rows_.size(); }
  std::span<const double> row(std::size_t j) const { return rows_.at(j); }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  double rate(std::size_t j, std::size_t option) const { return rows_.at(j).at(option); }

  /// Rate x_j^i by destination tracker; zero when (j -> i) is not an edge.
  double rate_to(const Topology& topology, std::size_t j, std::size_t i) const;
  double row_sum(std::size_t j) const;
  std::vector<double> row_sums() const;
  /// Aggregate arrival rate at each destination cloud.
  std::vector<double> loads(const Topology& topology) const;

  friend bool operator==(const SplitState&, const SplitState&) = default;

 private:
  std::vector<std::vector<double>> rows_;
};

/// Per-option payoffs F_j^i and per-population averages.
struct PayoffView {
  std::vector<std::vector<double>> payoffs;  // aligned with Topology::options
  std::vector<double> averages;
};

/// Throws CapacityViolation if `load` is at or above the guard.
void check_capacity(std::size_t tracker, double load, double capacity);

double delay(const Topology& topology, const SplitState& state, std::size_t i);
double congestion_price(const Topology& topology, const SplitState& state, std::size_t i);
double payoff(const Topology& topology, const SplitState& state, std::size_t j, std::size_t i);
double system_cost(const Topology& topology, const SplitState& state);
PayoffView payoff_view(const Topology& topology, const SplitState& state);

// Closed forms in terms of a destination's aggregate load.
double delay_at_load(double load, double capacity);
double congestion_price_at_load(double load, double capacity);

/// Row-sum compensation so that sum(row) == mass after rounding.
void rescale_row(std::span<double> row, double mass);

}  // namespace multitrack
