#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "multitrack/game_core.hpp"

namespace multitrack {

/// KKT / Wardrop certificate for a split state.
struct KKTReport {
  std::vector<double> multipliers;             // lambda_j: min payoff over used options
  std::vector<std::vector<double>> slackness;  // h_j^i = F_j^i - lambda_j (unused options; 0 when used)
  std::vector<std::vector<bool>> used;
  double max_stationarity = 0.0;  // max relative gap among used options
  double min_slackness = 0.0;     // most negative relative h over unused options
  bool pass = false;
};

struct MinCostResult {
  SplitState state;
  double cost = 0.0;
  double projected_gradient_norm = 0.0;
  std::size_t iterations = 0;
};

struct NetUtilityResult {
  std::vector<double> arrivals;
  double value = 0.0;
  double residual = 0.0;  // max_j |w_j - x_j F_j*| / w_j
  std::size_t iterations = 0;
};

struct BruteForceResult {
  SplitState state;
  double cost = 0.0;
  std::size_t evaluated = 0;
};

/// Euclidean projection of `point` onto {y >= 0, sum(y) = mass}.
std::vector<double> project_to_simplex(std::span<const double> point, double mass);

/// Minimizes the system cost at fixed arrivals by projected gradient descent.
/// Stops once the unit-step projected gradient has sup-norm below `tolerance`.
/// Throws Infeasible, MaxIterations.
MinCostResult min_cost_split(const Topology& topology, std::span<const double> arrivals,
                             double tolerance = 1e-8,
                             const std::optional<SplitState>& warm_start = std::nullopt,
                             std::size_t max_iterations = 200000);

/// Relative-tolerance Wardrop/KKT check. Options carrying less than
/// `used_threshold * x_j` count as unused.
KKTReport verify_wardrop(const Topology& topology, const SplitState& state, double tolerance,
                         double used_threshold = 1e-9);

/// Common payoff F_j* of each population at a (near) equilibrium.
std::vector<double> equilibrium_payoffs(const Topology& topology, const SplitState& state,
                                        double used_threshold = 1e-9);

/// sum_j w_j log x_j - C*(x). Throws Infeasible.
double net_utility_value(const Topology& topology, std::span<const double> arrivals,
                         double cost_tolerance = 1e-10);

/// Maximizes net utility over arrival vectors by gradient ascent with the
/// envelope gradient w_j / x_j - F_j*. Throws MaxIterations.
NetUtilityResult max_net_utility(const Topology& topology, double tolerance = 1e-7,
                                 std::size_t max_iterations = 20000);

/// Exhaustive grid over forwarding fractions; at most two free scalars.
/// Throws TooLarge.
BruteForceResult brute_force_min_cost(const Topology& topology, std::span<const double> arrivals,
                                      double resolution);

}  // namespace multitrack
