#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "multitrack/dynamics.hpp"
#include "multitrack/game_core.hpp"

namespace multitrack {

struct AdmissionConfig {
  double dt_medium = 0.1;
  std::size_t steps = 2000;
  DynamicsConfig inner{};
  double x_min = 1e-6;
  // Stop once max_j |w_j - x_j F_j*| / w_j falls below this.
  double outer_tolerance = 1e-4;
  // Hard bound kappa on the system cost. Only the relaxed (log-utility)
  // controller is implemented, so validate() rejects a value here.
  std::optional<double> cost_bound;

  void validate() const;
  /// Inner config with eq_tolerance at most outer_tolerance / 100.
  DynamicsConfig inner_config() const;
};

struct AdmissionState {
  double time = 0.0;
  std::vector<double> arrivals;
  SplitState split;             // inner equilibrium for `arrivals`
  std::vector<double> fstar;    // common payoff per population at `split`
  double min_cost = 0.0;        // C*(arrivals) from the oracle
  double net_utility = 0.0;
};

struct AdmissionSample {
  double time = 0.0;
  std::vector<double> arrivals;
  std::vector<double> fstar;
  double min_cost = 0.0;
  double net_utility = 0.0;
};

using AdmissionLog = std::vector<AdmissionSample>;

struct AdmissionRun {
  AdmissionLog log;
  AdmissionState final_state;
  bool converged = false;
  double residual = 0.0;
  std::size_t steps = 0;
};

/// sum_j w_j log x_j - C*(x), with C* from the projected-gradient oracle.
double net_utility(const Topology& topology, std::span<const double> arrivals);

/// max_j |w_j - x_j F_j*| / w_j.
double fixed_point_residual(const Topology& topology, const AdmissionState& state);

/// Runs inner dynamics to equilibrium for `arrivals` and fills the state.
/// Throws InnerNotConverged, Infeasible.
AdmissionState settle(const Topology& topology, std::span<const double> arrivals,
                      const AdmissionConfig& config,
                      const std::optional<SplitState>& warm_start = std::nullopt);

/// One Euler step of x_j' = w_j - x_j F_j* followed by a fresh inner
/// equilibrium. When the new arrivals cannot be split feasibly the step is
/// halved.
AdmissionState admission_step(const Topology& topology, const AdmissionState& state,
                              const AdmissionConfig& config);

/// Capacity events take effect before the first step at or after their
/// time; the inner equilibrium is then recomputed on the new overlay.
AdmissionRun run_admission(const Topology& topology, std::span<const double> initial_arrivals,
                           const AdmissionConfig& config,
                           std::span<const CapacityEvent> schedule = {});

}  // namespace multitrack
