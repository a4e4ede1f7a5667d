#include "multitrack/swarm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace multitrack {

std::string_view to_string(SwarmMode mode) {
  switch (mode) {
    case SwarmMode::multitrack: return "multitrack";
    case SwarmMode::price_blind: return "price-blind";
    case SwarmMode::no_split: return "no-split";
  }
  return "multitrack";
}

std::optional<SwarmMode> parse_swarm_mode(std::string_view text) {
  if (text == "multitrack") return SwarmMode::multitrack;
  if (text == "price-blind") return SwarmMode::price_blind;
  if (text == "no-split") return SwarmMode::no_split;
  return std::nullopt;
}

std::string_view to_string(PriceEstimator estimator) {
  return estimator == PriceEstimator::elasticity ? "elasticity" : "finite-difference";
}

std::optional<PriceEstimator> parse_price_estimator(std::string_view text) {
  if (text == "finite-difference") return PriceEstimator::finite_difference;
  if (text == "elasticity") return PriceEstimator::elasticity;
  return std::nullopt;
}

void SwarmConfig::validate() const {
  if (!(slot > 0.0)) throw std::invalid_argument("swarm: slot must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("swarm: horizon must be positive");
  if (!(ema_weight > 0.0 && ema_weight < 1.0))
    throw std::invalid_argument("swarm: ema_weight must lie in (0, 1)");
  const double ratio = admission_interval / slot;
  if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9)
    throw std::invalid_argument("swarm: admission_interval must be an integer multiple of slot");
  if (!(split_gain > 0.0)) throw std::invalid_argument("swarm: split_gain must be positive");
  if (!(probability_floor >= 0.0 && probability_floor < 0.5))
    throw std::invalid_argument("swarm: probability_floor must lie in [0, 0.5)");
  if (!(admission_dt > 0.0) || !(x_min > 0.0))
    throw std::invalid_argument("swarm: admission_dt and x_min must be positive");
}

std::size_t SwarmConfig::slots_per_admission() const {
  return static_cast<std::size_t>(std::llround(admission_interval / slot));
}

double SlotMeasurement::delay_cost() const {
  return std::accumulate(total_sojourn.begin(), total_sojourn.end(), 0.0) / length;
}

double SlotMeasurement::transit_cost(const Topology& topology) const {
  double paid = 0.0;
  for (std::size_t j = 0; j < routed.size(); ++j) {
    auto opts = topology.options(j);
    for (std::size_t k = 0; k < opts.size(); ++k) paid += opts[k].price * routed[j][k];
  }
  return paid / length;
}

SlotMeasurement simulate_slot(const Topology& topology,
                              const std::vector<std::vector<double>>& probabilities,
                              std::span<const double> rates, double slot, SwarmQueues& queues,
                              std::mt19937_64& rng) {
  const std::size_t q = topology.size();
  if (probabilities.size() != q || rates.size() != q || queues.clouds.size() != q)
    throw std::invalid_argument("simulate_slot: size mismatch");
  for (std::size_t j = 0; j < q; ++j) {
    if (probabilities[j].size() != topology.options(j).size())
      throw std::invalid_argument("simulate_slot: probability row does not match options");
    const double s = std::accumulate(probabilities[j].begin(), probabilities[j].end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("simulate_slot: row must sum to 1");
  }

  SlotMeasurement m;
  m.start = queues.now;
  m.length = slot;
  m.drawn.assign(q, 0);
  m.routed.resize(q);
  m.arrivals.assign(q, 0);
  m.completions.assign(q, 0);
  m.total_sojourn.assign(q, 0.0);
  m.mean_delay.assign(q, 0.0);
  m.arrival_rate.assign(q, 0.0);

  const double end = queues.now + slot;
  std::uniform_real_distribution<double> when(queues.now, end);
  std::vector<std::vector<double>> incoming(q);
  for (std::size_t j = 0; j < q; ++j) {
    m.routed[j].assign(probabilities[j].size(), 0);
    if (!(rates[j] > 0.0)) continue;
    std::poisson_distribution<std::size_t> count(rates[j] * slot);
    m.drawn[j] = count(rng);
    std::discrete_distribution<std::size_t> pick(probabilities[j].begin(), probabilities[j].end());
    for (std::size_t n = 0; n < m.drawn[j]; ++n) {
      const double t = when(rng);
      const std::size_t k = pick(rng);
      ++m.routed[j][k];
      incoming[topology.options(j)[k].dest].push_back(t);
    }
  }

  for (std::size_t i = 0; i < q; ++i) {
    auto& cloud = queues.clouds[i];
    auto& arrivals = incoming[i];
    std::sort(arrivals.begin(), arrivals.end());
    m.arrivals[i] = arrivals.size();
    std::exponential_distribution<double> service(topology.tracker(i).capacity);
    for (double a : arrivals) {
      const double begin = std::max(a, cloud.free_at);
      cloud.free_at = begin + service(rng);
      cloud.in_system.push_back({a, cloud.free_at});
    }
    while (!cloud.in_system.empty() && cloud.in_system.front().departure < end) {
      const auto job = cloud.in_system.front();
      cloud.in_system.pop_front();
      ++m.completions[i];
      m.total_sojourn[i] += job.departure - job.arrival;
    }
    if (m.completions[i] > 0) m.mean_delay[i] = m.total_sojourn[i] / m.completions[i];
    m.arrival_rate[i] = static_cast<double>(m.arrivals[i]) / slot;
  }
  queues.now = end;
  return m;
}

EstimatorState make_estimators(const Topology& topology) {
  const std::size_t q = topology.size();
  EstimatorState e;
  e.delay.resize(q);
  for (std::size_t i = 0; i < q; ++i) e.delay[i] = 1.0 / topology.tracker(i).capacity;
  e.has_delay.assign(q, false);
  e.price.assign(q, 0.0);
  e.last_delay.assign(q, 0.0);
  e.last_rate.assign(q, 0.0);
  e.has_last.assign(q, false);
  return e;
}

EstimatorState update_estimators(const Topology& topology, const EstimatorState& previous,
                                 const SlotMeasurement& slot, const SwarmConfig& config) {
  EstimatorState next = previous;
  for (std::size_t i = 0; i < topology.size(); ++i) {
    if (slot.completions[i] == 0) continue;
    const double d = slot.mean_delay[i];
    const double z = slot.arrival_rate[i];
    next.delay[i] = previous.has_delay[i]
                        ? config.ema_weight * d + (1.0 - config.ema_weight) * previous.delay[i]
                        : d;
    next.has_delay[i] = true;

    const double capacity = topology.tracker(i).capacity;
    const double cap =
        config.price_cap_factor *
        congestion_price_at_load(std::min(z, (1.0 - kCapacityGuard) * capacity), capacity);
    if (config.price_estimator == PriceEstimator::elasticity) {
      next.price[i] = std::min(z * next.delay[i] * next.delay[i], cap);
    } else if (previous.has_last[i]) {
      const double dz = z - previous.last_rate[i];
      if (std::abs(dz) >= config.rate_epsilon)
        next.price[i] = std::clamp((d - previous.last_delay[i]) / dz * z, 0.0, cap);
    }
    next.last_delay[i] = d;
    next.last_rate[i] = z;
    next.has_last[i] = true;
  }
  return next;
}

std::vector<std::vector<double>> estimated_payoffs(const Topology& topology,
                                                   const EstimatorState& estimators,
                                                   bool include_prices) {
  std::vector<std::vector<double>> f(topology.size());
  for (std::size_t j = 0; j < topology.size(); ++j) {
    auto opts = topology.options(j);
    f[j].resize(opts.size());
    for (std::size_t k = 0; k < opts.size(); ++k) {
      const std::size_t i = opts[k].dest;
      f[j][k] = topology.delay_scale() * (estimators.delay[i] + estimators.price[i]) +
                (include_prices ? topology.transit_scale() * opts[k].price : 0.0);
    }
  }
  return f;
}

void replicator_update(std::vector<double>& probabilities, std::span<const double> payoffs,
                       double gain, double floor) {
  if (probabilities.size() < 2) return;
  double avg = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) avg += probabilities[k] * payoffs[k];
  for (std::size_t k = 0; k < probabilities.size(); ++k)
    probabilities[k] = std::max(
        floor, probabilities[k] * std::clamp(1.0 + gain * (avg - payoffs[k]), 0.5, 1.5));
  const double s = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  for (double& v : probabilities) v /= s;
}

SwarmRun run_swarm(const Topology& base, std::span<const double> arrivals,
                   const SwarmConfig& config, std::span<const CapacityEvent> schedule) {
  config.validate();
  if (arrivals.size() != base.size()) throw std::invalid_argument("run_swarm: arrival size mismatch");

  Topology topology = base;
  const std::size_t q = topology.size();
  std::vector<double> rates(arrivals.begin(), arrivals.end());
  std::vector<std::vector<double>> probs(q);
  for (std::size_t j = 0; j < q; ++j) {
    const auto n = topology.options(j).size();
    if (config.mode == SwarmMode::no_split) {
      probs[j].assign(n, 0.0);
      probs[j][0] = 1.0;
    } else {
      probs[j].assign(n, 1.0 / static_cast<double>(n));
    }
  }

  std::mt19937_64 rng(config.seed);
  SwarmQueues queues(q);
  EstimatorState est = make_estimators(topology);
  SwarmRun run;
  run.total_completions.assign(q, 0);
  double cumulative = 0.0;
  std::size_t next_event = 0;
  const auto slots = static_cast<std::size_t>(std::floor(config.horizon / config.slot + 1e-9));
  const bool include_prices = config.mode != SwarmMode::price_blind;

  for (std::size_t s = 1; s <= slots; ++s) {
    while (next_event < schedule.size() && schedule[next_event].time <= queues.now) {
      topology = topology.with_capacity(schedule[next_event].tracker, schedule[next_event].capacity);
      ++next_event;
    }
    const SlotMeasurement m = simulate_slot(topology, probs, rates, config.slot, queues, rng);
    est = update_estimators(topology, est, m, config);
    for (std::size_t i = 0; i < q; ++i) run.total_completions[i] += m.completions[i];

    const auto f = estimated_payoffs(topology, est, include_prices);
    if (config.mode != SwarmMode::no_split)
      for (std::size_t j = 0; j < q; ++j)
        replicator_update(probs[j], f[j], config.split_gain, config.probability_floor);

    if (config.admission && s % config.slots_per_admission() == 0) {
      for (std::size_t j = 0; j < q; ++j) {
        double avg = 0.0;
        for (std::size_t k = 0; k < probs[j].size(); ++k) avg += probs[j][k] * f[j][k];
        const double w = topology.tracker(j).weight;
        rates[j] = std::max(config.x_min, rates[j] + config.admission_dt * (w - rates[j] * avg));
      }
    }

    SwarmSample sample;
    sample.time = queues.now;
    sample.arrivals = rates;
    sample.probabilities = probs;
    sample.payoffs = f;
    sample.delay_estimate = est.delay;
    sample.price_estimate = est.price;
    sample.completions = m.completions;
    sample.delay_cost = topology.delay_scale() * m.delay_cost();
    sample.transit_cost = topology.transit_scale() * m.transit_cost(topology);
    sample.slot_cost = sample.delay_cost + sample.transit_cost;
    cumulative += sample.slot_cost * config.slot;
    sample.cumulative_cost = cumulative;
    run.log.push_back(std::move(sample));
  }
  return run;
}

double average_slot_cost(const SwarmRun& run, double from, double to) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : run.log)
    if (s.time > from && s.time <= to) {
      sum += s.slot_cost;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace multitrack
