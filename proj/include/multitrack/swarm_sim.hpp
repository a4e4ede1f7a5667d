#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "multitrack/game_core.hpp"

namespace multitrack {

enum class SwarmMode { multitrack, price_blind, no_split };

std::string_view to_string(SwarmMode mode);
std::optional<SwarmMode> parse_swarm_mode(std::string_view text);

// finite_difference: c = (d - d_prev) / (z - z_prev) * z from consecutive slots.
// elasticity: c = z * D^2, the M/M/1 elasticity evaluated at the EMA delay.
enum class PriceEstimator { finite_difference, elasticity };

std::string_view to_string(PriceEstimator estimator);
std::optional<PriceEstimator> parse_price_estimator(std::string_view text);

struct SwarmConfig {
  double slot = 8.0;                 // small time scale
  double admission_interval = 40.0;  // medium time scale, multiple of slot
  double ema_weight = 0.75;          // weight on the current slot's delay
  std::uint64_t seed = 1;
  double horizon = 320.0;
  SwarmMode mode = SwarmMode::multitrack;
  bool admission = false;
  double admission_dt = 0.1;  // Euler step of the admission controller per interval
  double x_min = 1e-6;
  // Replicator step per slot: y *= 1 + split_gain * (F_avg - F), factor kept in [0.5, 1.5].
  double split_gain = 0.002;
  double probability_floor = 1e-4;
  PriceEstimator price_estimator = PriceEstimator::finite_difference;
  double rate_epsilon = 1e-6;  // minimum |dz| for a finite-difference price update
  // Price cap: this factor times the analytic congestion price at the measured load.
  double price_cap_factor = 10.0;

  void validate() const;
  std::size_t slots_per_admission() const;
};

/// Exponential-service FCFS queue of one peer cloud.
struct CloudQueue {
  struct Job {
    double arrival = 0.0;
    double departure = 0.0;
  };
  double free_at = 0.0;
  std::deque<Job> in_system;
};

struct SwarmQueues {
  double now = 0.0;
  std::vector<CloudQueue> clouds;

  explicit SwarmQueues(std::size_t trackers) : clouds(trackers) {}
};

struct SlotMeasurement {
  double start = 0.0;
  double length = 0.0;
  std::vector<std::size_t> drawn;                // per origin tracker
  std::vector<std::vector<std::size_t>> routed;  // per origin, per option
  std::vector<std::size_t> arrivals;             // per destination
  std::vector<std::size_t> completions;          // per destination
  std::vector<double> total_sojourn;             // per destination
  std::vector<double> mean_delay;                // 0 where nothing completed
  std::vector<double> arrival_rate;              // per destination

  /// Total sojourn time accrued per unit time (completions-weighted delay).
  double delay_cost() const;
  /// Transit price paid per unit time for the forwarded arrivals.
  double transit_cost(const Topology& topology) const;
};

/// Draws one slot of Poisson arrivals at `rates`, routes them by
/// `probabilities` (rows aligned with Topology::options) and advances every
/// cloud's queue to the end of the slot.
SlotMeasurement simulate_slot(const Topology& topology,
                              const std::vector<std::vector<double>>& probabilities,
                              std::span<const double> rates, double slot, SwarmQueues& queues,
                              std::mt19937_64& rng);

struct EstimatorState {
  std::vector<double> delay;  // EMA of measured delay
  std::vector<bool> has_delay;
  std::vector<double> price;  // estimated congestion price
  std::vector<double> last_delay;  // last measured slot delay and arrival rate
  std::vector<double> last_rate;
  std::vector<bool> has_last;
};

EstimatorState make_estimators(const Topology& topology);

EstimatorState update_estimators(const Topology& topology, const EstimatorState& previous,
                                 const SlotMeasurement& slot, const SwarmConfig& config);

/// F_j^i from estimated delay and price; `include_prices` false drops p_j^i.
std::vector<std::vector<double>> estimated_payoffs(const Topology& topology,
                                                   const EstimatorState& estimators,
                                                   bool include_prices);

/// One multiplicative replicator step on a probability row, then floor and renormalize.
void replicator_update(std::vector<double>& probabilities, std::span<const double> payoffs,
                       double gain, double floor);

struct SwarmSample {
  double time = 0.0;  // end of slot
  std::vector<double> arrivals;
  std::vector<std::vector<double>> probabilities;
  std::vector<std::vector<double>> payoffs;
  std::vector<double> delay_estimate;
  std::vector<double> price_estimate;
  std::vector<std::size_t> completions;
  double delay_cost = 0.0;
  double transit_cost = 0.0;
  double slot_cost = 0.0;
  double cumulative_cost = 0.0;
};

struct SwarmRun {
  std::vector<SwarmSample> log;
  std::vector<std::size_t> total_completions;
};

SwarmRun run_swarm(const Topology& topology, std::span<const double> arrivals,
                   const SwarmConfig& config, std::span<const CapacityEvent> schedule = {});

/// Mean slot cost over samples with time in (from, to].
double average_slot_cost(const SwarmRun& run, double from, double to);

}  // namespace multitrack
