#include "multitrack/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace multitrack {

std::string_view to_string(DynamicsKind kind) {
  return kind == DynamicsKind::replicator ? "replicator" : "bnn";
}

std::optional<DynamicsKind> parse_dynamics_kind(std::string_view text) {
  if (text == "replicator") return DynamicsKind::replicator;
  if (text == "bnn") return DynamicsKind::bnn;
  return std::nullopt;
}

void DynamicsConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dynamics: dt must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("dynamics: horizon must be positive");
  if (!(eq_tolerance > 0.0 && eq_tolerance < 1.0))
    throw std::invalid_argument("dynamics: eq_tolerance must lie in (0, 1)");
  if (!(used_threshold > 0.0 && used_threshold < 1e-3))
    throw std::invalid_argument("dynamics: used_threshold must lie in (0, 1e-3)");
  if (log_stride == 0) throw std::invalid_argument("dynamics: log_stride must be positive");
}

namespace {

constexpr int kMaxHalvings = 20;

bool within_guards(const Topology& topology, const SplitState& state) {
  const auto z = state.loads(topology);
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!(z[i] < (1.0 - kCapacityGuard) * topology.tracker(i).capacity)) return false;
  return true;
}

// Shared halving loop. `velocity` returns dx/dt for row j given the payoffs.
template <typename Velocity>
StepResult euler_step(const Topology& topology, const SplitState& state, double dt,
                      Velocity&& velocity) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const PayoffView view = payoff_view(topology, state);  // throws on infeasible input

  std::vector<std::vector<double>> rates(topology.size());
  for (std::size_t j = 0; j < topology.size(); ++j)
    rates[j] = velocity(j, state.row(j), view.payoffs[j], view.averages[j]);

  double h = dt;
  for (int attempt = 0; attempt <= kMaxHalvings; ++attempt, h *= 0.5) {
    std::vector<std::vector<double>> rows = state.rows();
    bool ok = true;
    for (std::size_t j = 0; j < rows.size() && ok; ++j) {
      const double mass = state.row_sum(j);
      if (mass <= 0.0 || rows[j].size() < 2) continue;
      for (std::size_t k = 0; k < rows[j].size(); ++k) {
        rows[j][k] += h * rates[j][k];
        if (rows[j][k] < 0.0) {
          ok = false;
          break;
        }
      }
      if (ok) rescale_row(rows[j], mass);
    }
    if (!ok) continue;
    SplitState next(topology, std::move(rows));
    if (within_guards(topology, next)) return {std::move(next), h};
  }
  throw StepCollapse("step size fell below dt * 2^-20 without a feasible update");
}

}  // namespace

StepResult replicator_step(const Topology& topology, const SplitState& state, double dt) {
  return euler_step(topology, state, dt,
                    [](std::size_t, std::span<const double> x, const std::vector<double>& f,
                       double avg) {
                      std::vector<double> v(x.size());
                      for (std::size_t k = 0; k < x.size(); ++k) v[k] = x[k] * (avg - f[k]);
                      return v;
                    });
}

StepResult bnn_step(const Topology& topology, const SplitState& state, double dt) {
  return euler_step(topology, state, dt,
                    [](std::size_t, std::span<const double> x, const std::vector<double>& f,
                       double avg) {
                      const double mass = std::accumulate(x.begin(), x.end(), 0.0);
                      std::vector<double> excess(x.size());
                      double total = 0.0;
                      for (std::size_t k = 0; k < x.size(); ++k) {
                        excess[k] = std::max(avg - f[k], 0.0);
                        total += excess[k];
                      }
                      std::vector<double> v(x.size());
                      for (std::size_t k = 0; k < x.size(); ++k)
                        v[k] = mass * excess[k] - x[k] * total;
                      return v;
                    });
}

EquilibriumReport assess_equilibrium(const Topology& topology, const SplitState& state,
                                     const DynamicsConfig& config) {
  const PayoffView view = payoff_view(topology, state);
  EquilibriumReport report;
  const std::size_t q = topology.size();
  report.spread.assign(q, 0.0);
  report.wardrop_violation.assign(q, 0.0);
  report.averages = view.averages;

  bool spreads_ok = true;
  bool wardrop_ok = true;
  for (std::size_t j = 0; j < q; ++j) {
    const double mass = state.row_sum(j);
    if (mass <= 0.0) continue;
    const double avg = view.averages[j];
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double violation = 0.0;
    for (std::size_t k = 0; k < view.payoffs[j].size(); ++k) {
      const double f = view.payoffs[j][k];
      if (state.rate(j, k) >= config.used_threshold * mass) {
        lo = std::min(lo, f);
        hi = std::max(hi, f);
      } else {
        violation = std::max(violation, avg - f);
      }
    }
    report.spread[j] = (hi - lo) / avg;
    report.wardrop_violation[j] = violation;
    if (!(report.spread[j] < config.eq_tolerance)) spreads_ok = false;
    if (violation > config.eq_tolerance * avg) wardrop_ok = false;
  }
  report.converged = spreads_ok && wardrop_ok;
  report.stationary =
      config.kind == DynamicsKind::replicator ? spreads_ok : report.converged;
  report.final_state = state;
  report.final_cost = system_cost(topology, state);
  return report;
}

DynamicsRun run_to_equilibrium(const Topology& topology, const SplitState& initial,
                               const DynamicsConfig& config) {
  config.validate();
  DynamicsRun run;
  SplitState state = initial;
  double t = 0.0;
  std::size_t steps = 0;

  auto record = [&](const SplitState& s, double cost) {
    run.log.push_back({t, s, payoff_view(topology, s), cost});
  };

  EquilibriumReport report = assess_equilibrium(topology, state, config);
  record(state, report.final_cost);
  while (!report.stationary && t < config.horizon) {
    const double dt = std::min(config.dt, config.horizon - t);
    StepResult next = config.kind == DynamicsKind::replicator
                          ? replicator_step(topology, state, dt)
                          : bnn_step(topology, state, dt);
    state = std::move(next.state);
    t += next.dt_used;
    ++steps;
    report = assess_equilibrium(topology, state, config);
    if (steps % config.log_stride == 0) record(state, report.final_cost);
  }
  if (run.log.back().t != t) record(state, report.final_cost);
  report.time = t;
  report.steps = steps;
  run.report = std::move(report);
  return run;
}

namespace {

// Max-flow over source -> trackers -> destinations -> sink, used only to
// decide feasibility when proportional shifting gets stuck.
std::optional<SplitState> max_flow_split(const Topology& topology, std::span<const double> arrivals,
                                         double utilisation) {
  const std::size_t q = topology.size();
  const std::size_t n = 2 * q + 2;
  const std::size_t src = 2 * q;
  const std::size_t snk = 2 * q + 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cap(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < q; ++j) {
    cap[src][j] = arrivals[j];
    cap[q + j][snk] = utilisation * topology.tracker(j).capacity;
    for (const auto& o : topology.options(j)) cap[j][q + o.dest] = inf;
  }
  auto residual = cap;
  double total = 0.0;
  for (;;) {
    std::vector<std::size_t> parent(n, n);
    parent[src] = src;
    std::deque<std::size_t> frontier{src};
    while (!frontier.empty() && parent[snk] == n) {
      const std::size_t u = frontier.front();
      frontier.pop_front();
      for (std::size_t v = 0; v < n; ++v)
        if (parent[v] == n && residual[u][v] > 1e-15) {
          parent[v] = u;
          frontier.push_back(v);
        }
    }
    if (parent[snk] == n) break;
    double push = inf;
    for (std::size_t v = snk; v != src; v = parent[v]) push = std::min(push, residual[parent[v]][v]);
    for (std::size_t v = snk; v != src; v = parent[v]) {
      residual[parent[v]][v] -= push;
      residual[v][parent[v]] += push;
    }
    total += push;
  }
  const double demand = std::accumulate(arrivals.begin(), arrivals.end(), 0.0);
  if (total < demand * (1.0 - 1e-12)) return std::nullopt;

  std::vector<std::vector<double>> rows(q);
  for (std::size_t j = 0; j < q; ++j) {
    auto opts = topology.options(j);
    rows[j].resize(opts.size());
    for (std::size_t k = 0; k < opts.size(); ++k)
      rows[j][k] = std::max(0.0, cap[j][q + opts[k].dest] == inf
                                     ? residual[q + opts[k].dest][j]
                                     : 0.0);
    rescale_row(rows[j], arrivals[j]);
  }
  return SplitState(topology, std::move(rows));
}

// Moves load off destinations above `target` utilisation toward options with
// slack, proportionally to each contributor's share and each option's slack.
bool shift_excess(const Topology& topology, std::vector<std::vector<double>>& rows,
                  double target) {
  const std::size_t q = topology.size();
  for (int pass = 0; pass < 500; ++pass) {
    std::vector<double> z(q, 0.0);
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t k = 0; k < rows[j].size(); ++k) z[topology.options(j)[k].dest] += rows[j][k];
    std::vector<double> limit(q);
    for (std::size_t i = 0; i < q; ++i) limit[i] = target * topology.tracker(i).capacity;

    std::size_t worst = q;
    double worst_excess = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      const double e = z[i] - limit[i];
      if (e > worst_excess * (1.0 + 1e-12) && e > 1e-12 * limit[i]) {
        worst = i;
        worst_excess = e;
      }
    }
    if (worst == q) return true;

    // Contributions to `worst` that have somewhere else to go.
    double movable = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      auto opts = topology.options(j);
      auto k = topology.option_index(j, worst);
      if (!k || rows[j][*k] <= 0.0) continue;
      for (std::size_t r = 0; r < opts.size(); ++r)
        if (r != *k && z[opts[r].dest] < limit[opts[r].dest]) {
          movable += rows[j][*k];
          break;
        }
    }
    if (movable <= 0.0) return false;
    const double fraction = std::min(1.0, worst_excess / movable);

    for (std::size_t j = 0; j < q; ++j) {
      auto opts = topology.options(j);
      auto k = topology.option_index(j, worst);
      if (!k || rows[j][*k] <= 0.0) continue;
      double slack_total = 0.0;
      for (std::size_t r = 0; r < opts.size(); ++r)
        if (r != *k) slack_total += std::max(0.0, limit[opts[r].dest] - z[opts[r].dest]);
      if (slack_total <= 0.0) continue;
      const double moved = fraction * rows[j][*k];
      rows[j][*k] -= moved;
      for (std::size_t r = 0; r < opts.size(); ++r) {
        if (r == *k) continue;
        const double slack = std::max(0.0, limit[opts[r].dest] - z[opts[r].dest]);
        rows[j][r] += moved * slack / slack_total;
      }
    }
  }
  return false;
}

}  // namespace

SplitState initial_split(const Topology& topology, std::span<const double> arrivals) {
  if (arrivals.size() != topology.size())
    throw std::invalid_argument("initial_split: arrival vector size mismatch");
  for (double x : arrivals)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw std::invalid_argument("initial_split: arrivals must be finite and nonnegative");

  std::vector<std::vector<double>> rows(topology.size());
  for (std::size_t j = 0; j < topology.size(); ++j) {
    const auto n = topology.options(j).size();
    rows[j].assign(n, arrivals[j] / static_cast<double>(n));
  }
  SplitState uniform(topology, rows);
  if (within_guards(topology, uniform)) return uniform;

  for (double target : {0.95, 0.99, 0.999, 0.99999}) {
    auto attempt = rows;
    if (!shift_excess(topology, attempt, target)) continue;
    for (std::size_t j = 0; j < attempt.size(); ++j) rescale_row(attempt[j], arrivals[j]);
    SplitState shifted(topology, std::move(attempt));
    if (within_guards(topology, shifted)) return shifted;
  }

  // Shifting stalled; settle feasibility exactly and move as close to uniform
  // as the capacity guards allow.
  auto flow = max_flow_split(topology, arrivals, 1.0 - 2.0 * kCapacityGuard);
  if (!flow) throw Infeasible("no split keeps every destination below its capacity guard");
  double lo = 0.0;
  double hi = 1.0;
  auto blend = [&](double beta) {
    std::vector<std::vector<double>> mixed = flow->rows();
    for (std::size_t j = 0; j < mixed.size(); ++j)
      for (std::size_t k = 0; k < mixed[j].size(); ++k)
        mixed[j][k] = (1.0 - beta) * mixed[j][k] + beta * rows[j][k];
    return SplitState(topology, std::move(mixed));
  };
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (within_guards(topology, blend(mid)) ? lo : hi) = mid;
  }
  return blend(0.5 * lo);
}

SplitState rescale_split(const Topology& topology, const SplitState& previous,
                         std::span<const double> arrivals) {
  if (arrivals.size() != topology.size())
    throw std::invalid_argument("rescale_split: arrival vector size mismatch");
  std::vector<std::vector<double>> rows = previous.rows();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (previous.row_sum(j) <= 0.0) {
      const auto n = rows[j].size();
      rows[j].assign(n, arrivals[j] / static_cast<double>(n));
    } else {
      rescale_row(rows[j], arrivals[j]);
    }
  }
  SplitState scaled(topology, std::move(rows));
  if (within_guards(topology, scaled)) return scaled;
  return initial_split(topology, arrivals);
}

}  // namespace multitrack
