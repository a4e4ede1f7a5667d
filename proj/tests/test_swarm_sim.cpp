#include <doctest.h>

#include <algorithm>

#include "multitrack/swarm_sim.hpp"
#include "support.hpp"

using namespace multitrack;
using namespace testing_support;

namespace {

SlotMeasurement measured(double delay, double rate, std::size_t completions = 50) {
  SlotMeasurement m;
  m.length = 8.0;
  m.completions = {completions};
  m.mean_delay = {completions ? delay : 0.0};
  m.arrival_rate = {rate};
  m.total_sojourn = {delay * static_cast<double>(completions)};
  m.arrivals = {completions};
  return m;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("EMA delay converges geometrically to a constant measurement") {
  const Topology t = single();
  const SwarmConfig c;
  EstimatorState e = make_estimators(t);
  e = update_estimators(t, e, measured(0.2, 10.0), c);
  e.delay[0] = 1.0;  // start far from the measured value
  double gap = std::abs(e.delay[0] - 0.2);
  for (int n = 0; n < 20; ++n) {
    e = update_estimators(t, e, measured(0.2, 10.0), c);
    const double next = std::abs(e.delay[0] - 0.2);
    CHECK(next == doctest::Approx(0.25 * gap).epsilon(1e-9));
    gap = next;
  }
}

TEST_CASE("finite-difference price: update, hold on zero rate change, clamp") {
  const Topology t = single(30.0);
  const SwarmConfig c;
  EstimatorState e = make_estimators(t);
  e = update_estimators(t, e, measured(0.05, 10.0), c);
  e = update_estimators(t, e, measured(0.06, 12.0), c);
  CHECK(e.price[0] == doctest::Approx((0.06 - 0.05) / 2.0 * 12.0).epsilon(1e-12));
  const double held = e.price[0];
  e = update_estimators(t, e, measured(0.09, 12.0), c);
  CHECK(e.price[0] == held);
  // Delay falling while rate rises would give a negative price.
  e = update_estimators(t, e, measured(0.01, 14.0), c);
  CHECK(e.price[0] == 0.0);
  // Cap at ten times the analytic price at the measured load.
  e = update_estimators(t, e, measured(5.0, 14.5), c);
  CHECK(e.price[0] == doctest::Approx(10.0 * 14.5 / (15.5 * 15.5)).epsilon(1e-12));
}

TEST_CASE("slots without completions carry estimates forward") {
  const Topology t = single();
  const SwarmConfig c;
  EstimatorState e = update_estimators(t, make_estimators(t), measured(0.05, 10.0), c);
  e = update_estimators(t, e, measured(0.07, 11.0), c);
  const EstimatorState held = update_estimators(t, e, measured(0.0, 3.0, 0), c);
  CHECK(held.delay == e.delay);
  CHECK(held.price == e.price);
  CHECK(held.last_rate == e.last_rate);
}

TEST_CASE("elasticity price is z D^2") {
  const Topology t = single(30.0);
  SwarmConfig c;
  c.price_estimator = PriceEstimator::elasticity;
  const EstimatorState e = update_estimators(t, make_estimators(t), measured(0.05, 10.0), c);
  CHECK(e.price[0] == doctest::Approx(10.0 * 0.05 * 0.05).epsilon(1e-12));
}

TEST_CASE("stationary M/M/1: finite-difference price centres on z / (C - z)^2") {
  const Topology t = single(30.0);
  SwarmConfig c;
  c.horizon = 20000.0;
  c.seed = 1;
  const SwarmRun run = run_swarm(t, std::vector<double>{10.0}, c);
  std::vector<double> prices;
  for (const auto& s : run.log)
    if (s.time > 200.0) prices.push_back(s.price_estimate[0]);
  // The per-slot ratio of differences is heavy-tailed and clamped at zero,
  // so its centre is the median.
  CHECK(std::abs(median(prices) - 0.025) < 0.5 * 0.025);
}

TEST_CASE("routing conserves arrivals in every slot") {
  const Topology t = scenario_b();
  std::mt19937_64 rng(31);
  SwarmQueues q(t.size());
  const std::vector<std::vector<double>> probs{{1.0}, {0.7, 0.3}, {0.4, 0.6}};
  for (int n = 0; n < 200; ++n) {
    const SlotMeasurement m = simulate_slot(t, probs, kArrivalsB, 8.0, q, rng);
    std::size_t drawn = 0, delivered = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      std::size_t routed = 0;
      for (auto r : m.routed[j]) routed += r;
      CHECK(routed == m.drawn[j]);
      drawn += m.drawn[j];
    }
    for (auto a : m.arrivals) delivered += a;
    CHECK(delivered == drawn);
  }
}

TEST_CASE("estimator consistency under a frozen split") {
  const Topology t = scenario_b();
  const std::vector<std::vector<double>> probs{{1.0}, {0.6, 0.4}, {0.7, 0.3}};
  std::mt19937_64 rng(37);
  SwarmQueues q(t.size());
  SwarmConfig c;
  EstimatorState e = make_estimators(t);
  std::vector<double> sum(t.size(), 0.0);
  std::vector<std::size_t> completions(t.size(), 0);
  std::size_t slots = 0;
  while (*std::min_element(completions.begin(), completions.end()) < 10000 || slots < 100) {
    const SlotMeasurement m = simulate_slot(t, probs, kArrivalsB, 8.0, q, rng);
    e = update_estimators(t, e, m, c);
    if (++slots <= 25) continue;  // burn-in
    for (std::size_t i = 0; i < t.size(); ++i) {
      sum[i] += e.delay[i];
      completions[i] += m.completions[i];
    }
  }
  // Loads: T1 3 + 2 + 2.1, T2 3, T3 4.9.
  const std::vector<double> load{3.0 + 5.0 * 0.4 + 7.0 * 0.3, 5.0 * 0.6, 7.0 * 0.7};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double analytic = 1.0 / (t.tracker(i).capacity - load[i]);
    CHECK(relative(sum[i] / static_cast<double>(slots - 25), analytic) < 0.1);
  }
}

TEST_CASE("fixed seed reproduces the run bit-exactly; other seeds differ") {
  const Topology t = scenario_b();
  SwarmConfig c;
  c.horizon = 400.0;
  const SwarmRun a = run_swarm(t, kArrivalsB, c);
  const SwarmRun b = run_swarm(t, kArrivalsB, c);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    CHECK(a.log[k].slot_cost == b.log[k].slot_cost);
    CHECK(a.log[k].probabilities == b.log[k].probabilities);
    CHECK(a.log[k].delay_estimate == b.log[k].delay_estimate);
  }
  c.seed = 2;
  CHECK(run_swarm(t, kArrivalsB, c).log.back().cumulative_cost != a.log.back().cumulative_cost);
}

TEST_CASE("modes: no-split pays no transit, price-blind ignores prices when splitting") {
  const Topology t = scenario_b();
  SwarmConfig c;
  c.horizon = 800.0;
  c.mode = SwarmMode::no_split;
  for (const auto& s : run_swarm(t, kArrivalsB, c).log) {
    CHECK(s.transit_cost == 0.0);
    CHECK(s.probabilities[1][0] == 1.0);
  }
  c.mode = SwarmMode::price_blind;
  const SwarmRun blind = run_swarm(t, kArrivalsB, c);
  double transit = 0.0;
  for (const auto& s : blind.log) {
    transit += s.transit_cost;
    CHECK(s.payoffs[1][1] == doctest::Approx(s.delay_estimate[0] + s.price_estimate[0]));
  }
  CHECK(transit > 0.0);
  c.mode = SwarmMode::multitrack;
  const SwarmRun aware = run_swarm(t, kArrivalsB, c);
  const auto& s = aware.log.back();
  CHECK(s.payoffs[1][1] ==
        doctest::Approx(s.delay_estimate[0] + s.price_estimate[0] + 20.0));
}

TEST_CASE("replicator update keeps a floor and a unit sum") {
  std::vector<double> y{0.5, 0.5};
  const std::vector<double> f{1.0, 1000.0};
  for (int n = 0; n < 1000; ++n) replicator_update(y, f, 0.01, 1e-4);
  // Factors are clamped to 1.5, so renormalizing divides by at most 1.5 + floor.
  CHECK(y[1] >= 1e-4 / (1.5 + 1e-4));
  CHECK(y[1] <= 1e-4);
  CHECK(y[0] + y[1] == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<double> equal{0.3, 0.7};
  replicator_update(equal, std::vector<double>{2.0, 2.0}, 0.5, 1e-4);
  CHECK(equal[0] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("swarm admission adjusts rates every interval") {
  const Topology t = scenario_b();
  SwarmConfig c;
  c.horizon = 200.0;
  c.admission = true;
  const SwarmRun run = run_swarm(t, kArrivalsB, c);
  for (std::size_t k = 0; k < run.log.size(); ++k) {
    const bool boundary = (k + 1) % c.slots_per_admission() == 0;
    const auto& before = k ? run.log[k - 1].arrivals : kArrivalsB;
    if (!boundary) CHECK(run.log[k].arrivals == before);
  }
  CHECK(run.log.back().arrivals != kArrivalsB);
}

TEST_CASE("capacity events take effect at their time") {
  const Topology t = single(30.0);
  SwarmConfig c;
  c.horizon = 2000.0;
  const std::vector<CapacityEvent> events{{1000.0, 0, 12.0}};
  const SwarmRun run = run_swarm(t, std::vector<double>{10.0}, c, events);
  double early = 0.0, late = 0.0;
  int ne = 0, nl = 0;
  for (const auto& s : run.log) {
    if (s.time > 200.0 && s.time <= 1000.0) early += s.delay_estimate[0], ++ne;
    if (s.time > 1400.0) late += s.delay_estimate[0], ++nl;
  }
  CHECK(early / ne < 0.1);
  CHECK(late / nl > 0.25);  // 1 / (12 - 10) = 0.5
}

TEST_CASE("config validation") {
  SwarmConfig c;
  c.admission_interval = 12.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SwarmConfig{};
  c.ema_weight = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(SwarmConfig{}.slots_per_admission() == 5u);
  CHECK(parse_swarm_mode("price-blind") == SwarmMode::price_blind);
  CHECK(parse_price_estimator("elasticity") == PriceEstimator::elasticity);
}
