#include <doctest.h>

#include "multitrack/admission.hpp"
#include "multitrack/oracle.hpp"
#include "support.hpp"

using namespace multitrack;
using namespace testing_support;

namespace {

AdmissionConfig scenario_b_config() {
  AdmissionConfig c;
  c.dt_medium = 0.02;
  c.steps = 5000;
  return c;
}

bool nondecreasing(const AdmissionLog& log) {
  for (std::size_t k = 1; k < log.size(); ++k)
    if (log[k].net_utility < log[k - 1].net_utility - 1e-6) return false;
  return true;
}

}  // namespace

TEST_CASE("net utility of a single tracker") {
  const Topology t = single(30.0, 10.0);
  for (double x : {1.0, 5.0, 12.0, 25.0})
    CHECK(net_utility(t, std::vector<double>{x}) ==
          doctest::Approx(10.0 * std::log(x) - x / (30.0 - x)).epsilon(1e-12));
  // Maximized where 10 = x * d/dx [x / (30 - x)] = 30 x / (30 - x)^2.
  double lo = 1.0, hi = 29.0;
  for (int n = 0; n < 200; ++n) {
    const double mid = 0.5 * (lo + hi);
    (30.0 * mid / ((30.0 - mid) * (30.0 - mid)) < 10.0 ? lo : hi) = mid;
  }
  const AdmissionRun run = run_admission(t, std::vector<double>{10.0}, AdmissionConfig{});
  CHECK(run.converged);
  CHECK(relative(run.final_state.arrivals[0], lo) < 1e-4);
}

TEST_CASE("net utility diverges downward at tiny arrivals") {
  const Topology t = single(30.0, 10.0);
  CHECK(net_utility(t, std::vector<double>{1e-6}) < -130.0);
  CHECK(net_utility(t, std::vector<double>{1e-6}) < net_utility(t, std::vector<double>{1e-3}));
}

TEST_CASE("net utility of scenario A arrivals") {
  const Topology t = scenario_a();
  const double expected = 10.0 * (std::log(10.0) + 2.0 * std::log(20.0)) -
                          brute_force_min_cost(t, kArrivalsA, 1e-3).cost;
  CHECK(std::abs(net_utility(t, kArrivalsA) - expected) < 1e-3);
}

TEST_CASE("fixed point w = x F* is left unchanged") {
  const Topology t = scenario_a();
  const NetUtilityResult opt = max_net_utility(t, 1e-10);
  const AdmissionConfig c;
  const AdmissionState s = settle(t, opt.arrivals, c);
  const AdmissionState next = admission_step(t, s, c);
  for (std::size_t j = 0; j < t.size(); ++j)
    CHECK(relative(next.arrivals[j], s.arrivals[j]) < 1e-7);
}

TEST_CASE("w = 10 and F* = 2 give x = 5") {
  // A single cloud with C / (C - 5)^2 = 2 has F*(5) = 2.
  const double capacity = (21.0 + std::sqrt(41.0)) / 4.0;
  const Topology t = single(capacity, 10.0);
  const AdmissionRun run = run_admission(t, std::vector<double>{1.0}, AdmissionConfig{});
  CHECK(run.converged);
  CHECK(run.final_state.arrivals[0] == doctest::Approx(5.0).epsilon(1e-4));
  CHECK(run.final_state.fstar[0] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("scenario A admission converges to the net-utility maximizer") {
  const Topology t = scenario_a();
  const AdmissionRun run = run_admission(t, kArrivalsA, AdmissionConfig{});
  CHECK(run.converged);
  CHECK(nondecreasing(run.log));
  CHECK(run.residual < 1e-4);
  const NetUtilityResult opt = max_net_utility(t);
  for (std::size_t j = 0; j < t.size(); ++j)
    CHECK(relative(run.final_state.arrivals[j], opt.arrivals[j]) < 1e-3);
}

TEST_CASE("scenario B admission: T1 admits the most") {
  const Topology t = scenario_b();
  const AdmissionRun run = run_admission(t, kArrivalsB, scenario_b_config());
  CHECK(run.converged);
  CHECK(nondecreasing(run.log));
  const auto& x = run.final_state.arrivals;
  CHECK(x[0] > x[1]);
  CHECK(x[0] > x[2]);
  const NetUtilityResult opt = max_net_utility(t);
  for (std::size_t j = 0; j < t.size(); ++j) CHECK(relative(x[j], opt.arrivals[j]) < 1e-3);
}

TEST_CASE("starting at the maximizer terminates immediately") {
  const Topology t = scenario_a();
  const NetUtilityResult opt = max_net_utility(t, 1e-9);
  const AdmissionRun run = run_admission(t, opt.arrivals, AdmissionConfig{});
  CHECK(run.steps == 0u);
  CHECK(run.converged);
}

TEST_CASE("property: envelope identity dC*/dx_j = F_j*") {
  const Topology t = scenario_a();
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.3, 0.8);
  const AdmissionConfig c;
  for (int n = 0; n < 10; ++n) {
    std::vector<double> x{u(rng) * 20.0, u(rng) * 20.0, u(rng) * 20.0};
    const AdmissionState s = settle(t, x, c);
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double h = 1e-4 * x[j];
      auto up = x, down = x;
      up[j] += h;
      down[j] -= h;
      const double fd = (min_cost_split(t, up, 1e-11).cost - min_cost_split(t, down, 1e-11).cost) /
                        (2.0 * h);
      CHECK(relative(fd, s.fstar[j]) < 1e-3);
    }
  }
}

TEST_CASE("arrivals are clamped at x_min") {
  const Topology t = scenario_b();
  AdmissionConfig c;
  c.dt_medium = 0.1;
  c.steps = 3;
  // T2's first step overshoots far below zero and is clamped.
  const AdmissionRun run = run_admission(t, kArrivalsB, c);
  for (const auto& s : run.log)
    for (double x : s.arrivals) CHECK(x >= c.x_min);
  CHECK(run.log[1].arrivals[1] == c.x_min);
}

TEST_CASE("inner dynamics that cannot settle are reported") {
  AdmissionConfig c;
  c.inner.horizon = 0.01;
  CHECK_THROWS_AS(settle(scenario_a(), kArrivalsA, c), InnerNotConverged);
}

TEST_CASE("config validation") {
  AdmissionConfig c;
  c.cost_bound = 50.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = AdmissionConfig{};
  c.x_min = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = AdmissionConfig{};
  CHECK(c.inner_config().eq_tolerance <= c.outer_tolerance / 100.0);
}

TEST_CASE("capacity events re-settle the inner equilibrium") {
  const Topology t = scenario_a();
  const std::vector<CapacityEvent> events{{1.0, 0, 40.0}};
  const AdmissionRun run = run_admission(t, kArrivalsA, AdmissionConfig{}, events);
  CHECK(run.converged);
  const NetUtilityResult opt = max_net_utility(t.with_capacity(0, 40.0));
  for (std::size_t j = 0; j < t.size(); ++j)
    CHECK(relative(run.final_state.arrivals[j], opt.arrivals[j]) < 1e-3);
}
