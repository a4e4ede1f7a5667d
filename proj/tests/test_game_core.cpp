#include <doctest.h>

#include "multitrack/dynamics.hpp"
#include "multitrack/game_core.hpp"
#include "multitrack/oracle.hpp"
#include "support.hpp"

using namespace multitrack;
using namespace testing_support;

namespace {

SplitState state_of(const Topology& t, std::vector<std::vector<double>> rows) {
  return SplitState(t, std::move(rows));
}

}  // namespace

TEST_CASE("delay follows the M/M/1 form") {
  const Topology t = single(30.0);
  CHECK(delay(t, state_of(t, {{10.0}}), 0) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(delay(t, state_of(t, {{0.0}}), 0) == doctest::Approx(1.0 / 30.0).epsilon(1e-15));
  CHECK_THROWS_AS(delay(t, state_of(t, {{30.0}}), 0), CapacityViolation);
  // The guard trips just below capacity too.
  CHECK_THROWS_AS(delay(t, state_of(t, {{30.0 * (1.0 - 1e-10)}}), 0), CapacityViolation);
}

TEST_CASE("congestion price is load over squared slack") {
  CHECK(congestion_price(single(30.0), state_of(single(30.0), {{10.0}}), 0) ==
        doctest::Approx(0.025).epsilon(1e-15));
  CHECK(congestion_price(single(30.0), state_of(single(30.0), {{0.0}}), 0) == 0.0);
  CHECK(congestion_price(single(20.0), state_of(single(20.0), {{10.0}}), 0) ==
        doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(congestion_price(single(20.0), state_of(single(20.0), {{20.0}}), 0),
                  CapacityViolation);
}

TEST_CASE("payoff adds delay, transit price and congestion price") {
  const Topology t = scenario_a();
  // Load 10 at T1: five local, five forwarded from T2.
  const SplitState s = state_of(t, {{5.0}, {5.0, 5.0}, {0.0, 0.0}});
  CHECK(payoff(t, s, 1, 0) == doctest::Approx(0.05 + 2.0 + 0.025).epsilon(1e-14));
  // Idle self-loop: 1 / C.
  CHECK(payoff(t, s, 2, 2) == doctest::Approx(1.0 / 20.0).epsilon(1e-15));
  CHECK_THROWS_AS(payoff(t, s, 1, 2), NoSuchEdge);
  CHECK_THROWS_AS(payoff(t, s, 0, 1), NoSuchEdge);
}

TEST_CASE("payoff view matches pointwise payoffs and weighted averages") {
  const Topology t = scenario_a();
  const SplitState s = initial_split(t, kArrivalsA);
  const PayoffView v = payoff_view(t, s);
  for (std::size_t j = 0; j < t.size(); ++j) {
    auto opts = t.options(j);
    double weighted = 0.0;
    for (std::size_t k = 0; k < opts.size(); ++k) {
      CHECK(v.payoffs[j][k] == payoff(t, s, j, opts[k].dest));
      CHECK(v.payoffs[j][k] > 0.0);
      weighted += s.rate(j, k) * v.payoffs[j][k];
    }
    CHECK(v.averages[j] == doctest::Approx(weighted / s.row_sum(j)).epsilon(1e-14));
    const auto [lo, hi] = std::minmax_element(v.payoffs[j].begin(), v.payoffs[j].end());
    CHECK(*lo <= v.averages[j] + 1e-12);
    CHECK(v.averages[j] <= *hi + 1e-12);
  }
}

TEST_CASE("symmetric uniform split gives equal payoffs") {
  const Topology t = symmetric_pair();
  const PayoffView v = payoff_view(t, state_of(t, {{0.0, 4.0, 4.0}, {0.0}, {0.0}}));
  CHECK(v.payoffs[0][1] == v.payoffs[0][2]);
}

TEST_CASE("system cost") {
  const Topology one = single(30.0);
  CHECK(system_cost(one, state_of(one, {{10.0}})) == doctest::Approx(0.5).epsilon(1e-15));
  const Topology t = scenario_a();
  CHECK(system_cost(t, SplitState::zeros(t)) == 0.0);

  std::mt19937_64 rng(7);
  for (int n = 0; n < 50; ++n) {
    const SplitState s = random_state(t, rng);
    CHECK(system_cost(t, s) == doctest::Approx(reference_cost(t, s.rows())).epsilon(1e-12));
  }
}

TEST_CASE("delay weight scales the two cost components") {
  const std::vector<TrackerSpec> specs{{"T1", 30.0, Role::steady, 1.0},
                                       {"T2", 20.0, Role::transient, 1.0}};
  const Topology equal(specs, {{1, 0, 2.0}});
  const Topology delay_heavy(specs, {{1, 0, 2.0}}, 0.8);
  const std::vector<std::vector<double>> rows{{5.0}, {5.0, 5.0}};
  const double d = 10.0 / 20.0 + 5.0 / 15.0;
  const double p = 2.0 * 5.0;
  CHECK(system_cost(equal, SplitState(equal, rows)) == doctest::Approx(d + p).epsilon(1e-14));
  CHECK(system_cost(delay_heavy, SplitState(delay_heavy, rows)) ==
        doctest::Approx(1.6 * d + 0.4 * p).epsilon(1e-14));
  CHECK_THROWS_AS(Topology(specs, {}, 0.0), ValidationError);
}

TEST_CASE("topology validation reports every problem") {
  try {
    Topology({{"A", -1.0, Role::steady, 1.0},
              {"B", 10.0, Role::transient, 0.0},
              {"C", 10.0, Role::transient, 1.0}},
             {{2, 1, 1.0}, {1, 0, -3.0}});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    // capacity, weight, transient destination, negative price
    CHECK(e.problems().size() == 4);
  }
  CHECK_THROWS_AS(Topology({{"A", 1.0, Role::steady, 1.0}, {"A", 1.0, Role::steady, 1.0}}, {}),
                  ValidationError);
  CHECK_THROWS_AS(Topology({{"A", 1.0, Role::steady, 1.0}}, {{0, 0, 0.0}}), ValidationError);
  CHECK_THROWS_AS(Topology({{"A", 1.0, Role::steady, 1.0}}, {{0, 3, 0.0}}), ValidationError);
}

TEST_CASE("options start with the free self-loop") {
  const Topology t = scenario_a();
  for (std::size_t j = 0; j < t.size(); ++j) {
    CHECK(t.options(j)[0].dest == j);
    CHECK(t.options(j)[0].price == 0.0);
  }
  CHECK(t.options(0).size() == 1);
  CHECK(t.price(1, 0) == 2.0);
  CHECK(t.price(2, 0) == 1.0);
  CHECK(t.option_index(1, 0) == 1u);
  CHECK_FALSE(t.option_index(1, 2).has_value());
}

TEST_CASE("split state rejects negative entries and wrong shapes") {
  const Topology t = scenario_a();
  CHECK_THROWS_AS(SplitState(t, {{1.0}, {1.0, -1.0}, {0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SplitState(t, {{1.0}, {1.0}, {0.0, 0.0}}), std::invalid_argument);
  const SplitState s(t, {{1.0}, {2.0, 3.0}, {4.0, 5.0}});
  CHECK(s.rate_to(t, 1, 0) == 3.0);
  CHECK(s.rate_to(t, 1, 2) == 0.0);
  CHECK(s.loads(t) == std::vector<double>{9.0, 2.0, 4.0});
}

TEST_CASE("rescale_row hits the target mass exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    std::vector<double> row(2 + n % 4);
    for (double& v : row) v = u(rng) * 7.0;
    const double mass = u(rng) * 40.0;
    rescale_row(row, mass);
    CHECK(std::accumulate(row.begin(), row.end(), 0.0) == mass);
  }
}

TEST_CASE("property: gradient of the system cost is the payoff") {
  const Topology t = scenario_a();
  std::mt19937_64 rng(11);
  for (int n = 0; n < 100; ++n) {
    const SplitState s = random_state(t, rng);
    for (std::size_t j = 0; j < t.size(); ++j)
      for (std::size_t k = 0; k < t.options(j).size(); ++k) {
        const double x = s.rate(j, k);
        const double h = 1e-6 * std::max(1.0, x);
        auto rows_plus = s.rows(), rows_minus = s.rows();
        rows_plus[j][k] += h;
        rows_minus[j][k] = std::max(0.0, x - h);
        const double fd =
            (system_cost(t, SplitState(t, rows_plus)) - system_cost(t, SplitState(t, rows_minus))) /
            (rows_plus[j][k] - rows_minus[j][k]);
        CHECK(relative(fd, payoff(t, s, j, t.options(j)[k].dest)) < 1e-5);
      }
  }
}

TEST_CASE("property: system cost is convex along feasible segments") {
  const Topology t = scenario_a();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const SplitState a = random_state(t, rng), b = random_state(t, rng);
    const double alpha = u(rng);
    auto mix = a.rows();
    for (std::size_t j = 0; j < mix.size(); ++j)
      for (std::size_t k = 0; k < mix[j].size(); ++k)
        mix[j][k] = alpha * a.rate(j, k) + (1.0 - alpha) * b.rate(j, k);
    CHECK(system_cost(t, SplitState(t, mix)) <=
          alpha * system_cost(t, a) + (1.0 - alpha) * system_cost(t, b) + 1e-12);
  }
}

TEST_CASE("property: payoff increases with destination load") {
  const Topology t = scenario_a();
  double last = 0.0;
  for (double load = 0.0; load < 29.0; load += 0.5) {
    const SplitState s(t, {{load}, {0.0, 0.0}, {0.0, 0.0}});
    const double f = payoff(t, s, 1, 0);
    CHECK(f > last);
    last = f;
  }
}

TEST_CASE("scenario A optimum: T2's two payoffs tie") {
  const Topology t = scenario_a();
  const MinCostResult opt = min_cost_split(t, kArrivalsA);
  CHECK(relative(payoff(t, opt.state, 1, 1), payoff(t, opt.state, 1, 0)) < 1e-6);
  CHECK(relative(payoff(t, opt.state, 2, 2), payoff(t, opt.state, 2, 0)) < 1e-6);
}
