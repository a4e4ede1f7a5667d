#include "multitrack/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "multitrack/dynamics.hpp"

namespace multitrack {

std::vector<double> project_to_simplex(std::span<const double> point, double mass) {
  if (point.empty()) return {};
  if (mass <= 0.0) return std::vector<double>(point.size(), 0.0);
  // Michelot's active-set iteration: drop coordinates at or below the
  // current threshold until the threshold stops moving.
  std::vector<bool> active(point.size(), true);
  std::size_t count = point.size();
  double threshold = (std::accumulate(point.begin(), point.end(), 0.0) - mass) / count;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < point.size(); ++k)
      if (active[k] && point[k] <= threshold) {
        active[k] = false;
        --count;
        changed = true;
      }
    if (!changed) break;
    double sum = 0.0;
    for (std::size_t k = 0; k < point.size(); ++k)
      if (active[k]) sum += point[k];
    threshold = (sum - mass) / count;
  }
  std::vector<double> out(point.size());
  for (std::size_t k = 0; k < point.size(); ++k)
    out[k] = active[k] ? point[k] - threshold : 0.0;
  rescale_row(out, mass);
  return out;
}

namespace {

bool feasible(const Topology& topology, const SplitState& state) {
  const auto z = state.loads(topology);
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!(z[i] < (1.0 - kCapacityGuard) * topology.tracker(i).capacity)) return false;
  return true;
}

SplitState project_step(const Topology& topology, const SplitState& state, const PayoffView& view,
                        double step) {
  std::vector<std::vector<double>> rows(topology.size());
  for (std::size_t j = 0; j < topology.size(); ++j) {
    auto x = state.row(j);
    std::vector<double> moved(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) moved[k] = x[k] - step * view.payoffs[j][k];
    rows[j] = project_to_simplex(moved, state.row_sum(j));
  }
  return SplitState(topology, std::move(rows));
}

double sup_distance(const SplitState& a, const SplitState& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.populations(); ++j)
    for (std::size_t k = 0; k < a.row(j).size(); ++k)
      d = std::max(d, std::abs(a.rate(j, k) - b.rate(j, k)));
  return d;
}

// <F, to - from>. Rows of both states carry the same mass, so payoffs are
// taken relative to the row's first option to keep rounding small.
double directional(const SplitState& from, const SplitState& to, const PayoffView& view) {
  double sum = 0.0;
  for (std::size_t j = 0; j < from.populations(); ++j) {
    const auto& f = view.payoffs[j];
    for (std::size_t k = 1; k < from.row(j).size(); ++k)
      sum += (f[k] - f[0]) * (to.rate(j, k) - from.rate(j, k));
  }
  return sum;
}

void check_arrivals(const Topology& topology, std::span<const double> arrivals) {
  if (arrivals.size() != topology.size())
    throw std::invalid_argument("arrival vector size mismatch");
  for (double x : arrivals)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw std::invalid_argument("arrivals must be finite and nonnegative");
}

}  // namespace

MinCostResult min_cost_split(const Topology& topology, std::span<const double> arrivals,
                             double tolerance, const std::optional<SplitState>& warm_start,
                             std::size_t max_iterations) {
  check_arrivals(topology, arrivals);
  SplitState x = warm_start ? rescale_split(topology, *warm_start, arrivals)
                            : initial_split(topology, arrivals);
  double cost = system_cost(topology, x);
  double step = 1.0;
  constexpr double kArmijo = 1e-4;

  const PayoffView first = payoff_view(topology, x);
  double pg = sup_distance(x, project_step(topology, x, first, 1.0));
  for (std::size_t it = 0; it < max_iterations; ++it) {
    if (pg < tolerance) return {std::move(x), cost, pg, it};
    const PayoffView view = payoff_view(topology, x);

    // Armijo backtracking. Near the optimum C(trial) - C(x) cancels to
    // rounding, so the change is then measured by the trapezoid rule on the
    // gradient, 0.5 <F(x) + F(trial), trial - x>, which does not cancel.
    const double resolution = 1e-6 * std::max(1.0, std::abs(cost));
    bool accepted = false;
    for (int tries = 0; tries < 200; ++tries, step *= 0.5) {
      SplitState trial = project_step(topology, x, view, step);
      if (!feasible(topology, trial)) continue;
      const double trial_cost = system_cost(topology, trial);
      const double slope = directional(x, trial, view);
      if (!(slope < 0.0)) break;
      double change = trial_cost - cost;
      PayoffView trial_view = payoff_view(topology, trial);
      if (std::abs(change) < resolution)
        change = 0.5 * (slope + directional(x, trial, trial_view));
      if (change <= kArmijo * slope) {
        pg = sup_distance(trial, project_step(topology, trial, trial_view, 1.0));
        x = std::move(trial);
        cost = trial_cost;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw MaxIterations("min_cost_split: line search failed to make progress");
    step = std::min(step * 2.0, 1e6);
  }
  throw MaxIterations("min_cost_split: iteration budget exhausted");
}

KKTReport verify_wardrop(const Topology& topology, const SplitState& state, double tolerance,
                         double used_threshold) {
  const PayoffView view = payoff_view(topology, state);
  const std::size_t q = topology.size();
  KKTReport report;
  report.multipliers.assign(q, 0.0);
  report.slackness.resize(q);
  report.used.resize(q);
  for (std::size_t j = 0; j < q; ++j) {
    const auto& f = view.payoffs[j];
    const double mass = state.row_sum(j);
    report.used[j].resize(f.size());
    report.slackness[j].assign(f.size(), 0.0);
    double lambda = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.size(); ++k) {
      report.used[j][k] = mass > 0.0 && state.rate(j, k) >= used_threshold * mass;
      if (report.used[j][k]) lambda = std::min(lambda, f[k]);
    }
    if (!std::isfinite(lambda)) lambda = *std::min_element(f.begin(), f.end());
    report.multipliers[j] = lambda;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double rel = (f[k] - lambda) / lambda;
      if (report.used[j][k]) {
        report.max_stationarity = std::max(report.max_stationarity, rel);
      } else {
        report.slackness[j][k] = f[k] - lambda;
        report.min_slackness = std::min(report.min_slackness, rel);
      }
    }
  }
  report.pass = report.max_stationarity < tolerance && report.min_slackness >= -tolerance;
  return report;
}

std::vector<double> equilibrium_payoffs(const Topology& topology, const SplitState& state,
                                        double used_threshold) {
  return verify_wardrop(topology, state, 1.0, used_threshold).multipliers;
}

namespace {

struct Evaluation {
  double value = 0.0;
  std::vector<double> fstar;
  SplitState split;
};

std::optional<Evaluation> evaluate_net_utility(const Topology& topology,
                                               std::span<const double> x,
                                               const std::optional<SplitState>& warm) {
  for (double v : x)
    if (!(v > 0.0)) return std::nullopt;
  try {
    MinCostResult inner = min_cost_split(topology, x, 1e-10, warm);
    Evaluation e;
    e.value = -inner.cost;
    for (std::size_t j = 0; j < x.size(); ++j) e.value += topology.tracker(j).weight * std::log(x[j]);
    e.fstar = equilibrium_payoffs(topology, inner.state);
    e.split = std::move(inner.state);
    return e;
  } catch (const Infeasible&) {
    return std::nullopt;
  } catch (const CapacityViolation&) {
    return std::nullopt;
  }
}

}  // namespace

double net_utility_value(const Topology& topology, std::span<const double> arrivals,
                         double cost_tolerance) {
  check_arrivals(topology, arrivals);
  double value = 0.0;
  for (std::size_t j = 0; j < arrivals.size(); ++j) {
    if (!(arrivals[j] > 0.0)) throw std::invalid_argument("net utility needs positive arrivals");
    value += topology.tracker(j).weight * std::log(arrivals[j]);
  }
  return value - min_cost_split(topology, arrivals, cost_tolerance).cost;
}

NetUtilityResult max_net_utility(const Topology& topology, double tolerance,
                                 std::size_t max_iterations) {
  const std::size_t q = topology.size();
  std::vector<double> x(q);
  for (std::size_t j = 0; j < q; ++j) x[j] = 0.25 * topology.tracker(j).capacity;
  auto current = evaluate_net_utility(topology, x, std::nullopt);
  if (!current) throw Infeasible("max_net_utility: starting point infeasible");

  auto residual_of = [&](std::span<const double> at, const std::vector<double>& fstar) {
    double r = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      const double w = topology.tracker(j).weight;
      r = std::max(r, std::abs(w - at[j] * fstar[j]) / w);
    }
    return r;
  };

  double step = 1.0;
  constexpr double kArmijo = 1e-4;
  double residual = residual_of(x, current->fstar);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    if (residual < tolerance) return {x, current->value, residual, it};
    std::vector<double> grad(q);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      grad[j] = topology.tracker(j).weight / x[j] - current->fstar[j];
      norm2 += grad[j] * grad[j];
    }

    // Same rule as min_cost_split: below resolution the value change is
    // measured by the trapezoid rule on the envelope gradient.
    const double resolution = 1e-6 * std::max(1.0, std::abs(current->value));
    bool accepted = false;
    for (int tries = 0; tries < 200; ++tries, step *= 0.5) {
      std::vector<double> trial(q);
      for (std::size_t j = 0; j < q; ++j) trial[j] = x[j] + step * grad[j];
      auto next = evaluate_net_utility(topology, trial, current->split);
      if (!next) continue;
      double change = next->value - current->value;
      if (std::abs(change) < resolution) {
        double along = 0.0;
        for (std::size_t j = 0; j < q; ++j)
          along += (topology.tracker(j).weight / trial[j] - next->fstar[j]) * grad[j];
        change = 0.5 * step * (norm2 + along);
      }
      if (change >= kArmijo * step * norm2) {
        x = std::move(trial);
        current = std::move(next);
        residual = residual_of(x, current->fstar);
        accepted = true;
        break;
      }
    }
    if (!accepted) throw MaxIterations("max_net_utility: line search failed to make progress");
    step = std::min(step * 2.0, 1e6);
  }
  throw MaxIterations("max_net_utility: iteration budget exhausted");
}

BruteForceResult brute_force_min_cost(const Topology& topology, std::span<const double> arrivals,
                                      double resolution) {
  check_arrivals(topology, arrivals);
  if (!(resolution > 0.0 && resolution <= 1.0))
    throw std::invalid_argument("brute force: resolution must lie in (0, 1]");
  if (topology.size() > 3) throw TooLarge("brute force supports at most 3 trackers");

  std::vector<std::size_t> free_rows;
  for (std::size_t j = 0; j < topology.size(); ++j) {
    const auto n = topology.options(j).size();
    if (n > 2) throw TooLarge("brute force supports at most 2 options per tracker");
    if (n == 2 && arrivals[j] > 0.0) free_rows.push_back(j);
  }
  if (free_rows.size() > 2) throw TooLarge("brute force supports at most 2 free scalars");

  const auto points = static_cast<std::size_t>(std::llround(1.0 / resolution)) + 1;
  std::vector<std::size_t> index(free_rows.size(), 0);
  BruteForceResult best;
  best.cost = std::numeric_limits<double>::infinity();

  for (;;) {
    std::vector<std::vector<double>> rows(topology.size());
    for (std::size_t j = 0; j < topology.size(); ++j) {
      rows[j].assign(topology.options(j).size(), 0.0);
      rows[j][0] = arrivals[j];
    }
    for (std::size_t f = 0; f < free_rows.size(); ++f) {
      const double share = std::min(1.0, static_cast<double>(index[f]) * resolution);
      const std::size_t j = free_rows[f];
      rows[j][1] = share * arrivals[j];
      rows[j][0] = arrivals[j] - rows[j][1];
    }
    SplitState candidate(topology, std::move(rows));
    ++best.evaluated;
    if (feasible(topology, candidate)) {
      const double c = system_cost(topology, candidate);
      if (c < best.cost) {
        best.cost = c;
        best.state = std::move(candidate);
      }
    }
    std::size_t d = 0;
    while (d < index.size() && ++index[d] == points) index[d++] = 0;
    if (d == index.size()) break;
  }
  if (!std::isfinite(best.cost)) throw Infeasible("brute force: no feasible grid point");
  return best;
}

}  // namespace multitrack
