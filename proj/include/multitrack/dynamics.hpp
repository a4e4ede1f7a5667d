#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "multitrack/game_core.hpp"

namespace multitrack {

enum class DynamicsKind { replicator, bnn };

std::string_view to_string(DynamicsKind kind);
std::optional<DynamicsKind> parse_dynamics_kind(std::string_view text);

struct DynamicsConfig {
  DynamicsKind kind = DynamicsKind::replicator;
  double dt = 0.01;
  double horizon = 1e4;
  double eq_tolerance = 1e-6;
  // Options carrying less than this fraction of x_j count as unused.
  double used_threshold = 1e-9;
  // Record every n-th accepted step (the first and last are always kept).
  std::size_t log_stride = 1;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct EquilibriumReport {
  // The step rule stopped moving: used-option spreads are below tolerance
  // (and, for BNN, no unused option beats the average).
  bool stationary = false;
  // Stationary and Wardrop: no unused option is cheaper than the average.
  bool converged = false;
  std::vector<double> spread;             // (max - min) / average over used options
  std::vector<double> wardrop_violation;  // max over unused of (average - F)_+
  std::vector<double> averages;
  SplitState final_state;
  double final_cost = 0.0;
  double time = 0.0;
  std::size_t steps = 0;
};

struct DynamicsSample {
  double t = 0.0;
  SplitState state;
  PayoffView payoffs;
  double cost = 0.0;
};

using DynamicsLog = std::vector<DynamicsSample>;

struct DynamicsRun {
  EquilibriumReport report;
  DynamicsLog log;
};

struct StepResult {
  SplitState state;
  double dt_used = 0.0;
};

/// One explicit Euler step of the replicator equation. The step is halved
/// until the result is nonnegative and below every capacity guard.
StepResult replicator_step(const Topology& topology, const SplitState& state, double dt);

/// One explicit Euler step of Brown-von Neumann-Nash dynamics, with excess
/// payoff measured as (average - F)_+ since payoffs are costs.
StepResult bnn_step(const Topology& topology, const SplitState& state, double dt);

/// Evaluates spreads and Wardrop violations of `state` without stepping.
EquilibriumReport assess_equilibrium(const Topology& topology, const SplitState& state,
                                     const DynamicsConfig& config);

DynamicsRun run_to_equilibrium(const Topology& topology, const SplitState& initial,
                               const DynamicsConfig& config);

/// Uniform split of each tracker's arrivals over its options, with load
/// pushed off saturated destinations. Throws Infeasible.
SplitState initial_split(const Topology& topology, std::span<const double> arrivals);

/// Scales each row of `previous` to the new arrivals; falls back to
/// initial_split when the scaled state breaks a capacity guard.
SplitState rescale_split(const Topology& topology, const SplitState& previous,
                         std::span<const double> arrivals);

}  // namespace multitrack
