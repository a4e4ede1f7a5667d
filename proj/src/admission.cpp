#include "multitrack/admission.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "multitrack/oracle.hpp"

namespace multitrack {

void AdmissionConfig::validate() const {
  if (!(dt_medium > 0.0)) throw std::invalid_argument("admission: dt_medium must be positive");
  if (!(x_min > 0.0)) throw std::invalid_argument("admission: x_min must be positive");
  if (!(outer_tolerance > 0.0 && outer_tolerance < 1.0))
    throw std::invalid_argument("admission: outer_tolerance must lie in (0, 1)");
  if (cost_bound)
    throw std::invalid_argument("admission: the hard cost-bound controller is not implemented");
  inner.validate();
}

DynamicsConfig AdmissionConfig::inner_config() const {
  DynamicsConfig c = inner;
  c.eq_tolerance = std::min(c.eq_tolerance, outer_tolerance / 100.0);
  c.log_stride = std::max<std::size_t>(c.log_stride, 1u << 30);
  return c;
}

double net_utility(const Topology& topology, std::span<const double> arrivals) {
  return net_utility_value(topology, arrivals);
}

double fixed_point_residual(const Topology& topology, const AdmissionState& state) {
  double r = 0.0;
  for (std::size_t j = 0; j < topology.size(); ++j) {
    const double w = topology.tracker(j).weight;
    r = std::max(r, std::abs(w - state.arrivals[j] * state.fstar[j]) / w);
  }
  return r;
}

AdmissionState settle(const Topology& topology, std::span<const double> arrivals,
                      const AdmissionConfig& config, const std::optional<SplitState>& warm_start) {
  const DynamicsConfig inner = config.inner_config();
  SplitState start = warm_start ? rescale_split(topology, *warm_start, arrivals)
                                : initial_split(topology, arrivals);
  DynamicsRun run = run_to_equilibrium(topology, start, inner);
  if (!run.report.stationary)
    throw InnerNotConverged("inner dynamics did not reach equilibrium within the horizon");

  AdmissionState s;
  s.arrivals.assign(arrivals.begin(), arrivals.end());
  s.fstar = run.report.averages;
  const MinCostResult oracle = min_cost_split(topology, arrivals, 1e-10, run.report.final_state);
  s.min_cost = oracle.cost;
  s.net_utility = -oracle.cost;
  for (std::size_t j = 0; j < arrivals.size(); ++j)
    s.net_utility += topology.tracker(j).weight * std::log(arrivals[j]);
  s.split = std::move(run.report.final_state);
  return s;
}

AdmissionState admission_step(const Topology& topology, const AdmissionState& state,
                              const AdmissionConfig& config) {
  double dt = config.dt_medium;
  for (int attempt = 0; attempt <= 20; ++attempt, dt *= 0.5) {
    std::vector<double> next(state.arrivals.size());
    for (std::size_t j = 0; j < next.size(); ++j) {
      const double w = topology.tracker(j).weight;
      next[j] = std::max(config.x_min,
                         state.arrivals[j] + dt * (w - state.arrivals[j] * state.fstar[j]));
    }
    try {
      AdmissionState settled = settle(topology, next, config, state.split);
      settled.time = state.time + dt;
      return settled;
    } catch (const Infeasible&) {
    }
  }
  throw Infeasible("admission step: no feasible arrival update down to dt_medium * 2^-20");
}

AdmissionRun run_admission(const Topology& base, std::span<const double> initial_arrivals,
                           const AdmissionConfig& config,
                           std::span<const CapacityEvent> schedule) {
  config.validate();
  std::vector<double> x0(initial_arrivals.begin(), initial_arrivals.end());
  for (double& v : x0) v = std::max(v, config.x_min);

  Topology topology = base;
  std::size_t next_event = 0;
  auto apply_events = [&](double now) {
    bool changed = false;
    while (next_event < schedule.size() && schedule[next_event].time <= now) {
      topology = topology.with_capacity(schedule[next_event].tracker,
                                        schedule[next_event].capacity);
      ++next_event;
      changed = true;
    }
    return changed;
  };

  AdmissionRun run;
  apply_events(0.0);
  AdmissionState state = settle(topology, x0, config);
  auto record = [&] {
    run.log.push_back({state.time, state.arrivals, state.fstar, state.min_cost, state.net_utility});
  };
  record();
  run.residual = fixed_point_residual(topology, state);
  std::size_t step = 0;
  while ((run.residual >= config.outer_tolerance || next_event < schedule.size()) &&
         step < config.steps) {
    if (apply_events(state.time)) {
      const double now = state.time;
      state = settle(topology, state.arrivals, config, state.split);
      state.time = now;
    }
    state = admission_step(topology, state, config);
    ++step;
    record();
    run.residual = fixed_point_residual(topology, state);
  }
  run.converged = run.residual < config.outer_tolerance;
  run.steps = step;
  run.final_state = std::move(state);
  return run;
}

}  // namespace multitrack
