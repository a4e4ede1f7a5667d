#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "multitrack/game_core.hpp"

namespace testing_support {

using namespace multitrack;

// Topologies are built by hand here so tests do not depend on the scenario loader.
inline Topology scenario_a(double c2 = 20.0) {
  return Topology({{"T1", 30.0, Role::steady, 10.0},
                   {"T2", c2, Role::transient, 10.0},
                   {"T3", 20.0, Role::transient, 10.0}},
                  {{1, 0, 2.0}, {2, 0, 1.0}});
}
inline const std::vector<double> kArrivalsA{10.0, 20.0, 20.0};

inline Topology scenario_b() {
  return Topology({{"T1", 20.0, Role::steady, 10.0},
                   {"T2", 4.0, Role::transient, 10.0},
                   {"T3", 6.0, Role::transient, 10.0}},
                  {{1, 0, 20.0}, {2, 0, 10.0}});
}
inline const std::vector<double> kArrivalsB{3.0, 5.0, 7.0};

inline Topology single(double capacity = 30.0, double weight = 10.0) {
  return Topology({{"T", capacity, Role::steady, weight}}, {});
}

// T has two steady destinations S1, S2 of equal capacity at equal price,
// and a small cloud of its own.
inline Topology symmetric_pair(double price = 1.0) {
  return Topology({{"T", 0.5, Role::transient, 1.0},
                   {"S1", 20.0, Role::steady, 1.0},
                   {"S2", 20.0, Role::steady, 1.0}},
                  {{0, 1, price}, {0, 2, price}});
}

// Direct evaluation of the objective from destination loads.
inline double reference_cost(const Topology& t, const std::vector<std::vector<double>>& rows) {
  std::vector<double> load(t.size(), 0.0);
  double transit = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    auto opts = t.options(j);
    for (std::size_t k = 0; k < opts.size(); ++k) {
      load[opts[k].dest] += rows[j][k];
      transit += opts[k].price * rows[j][k];
    }
  }
  double delay = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) delay += load[i] / (t.tracker(i).capacity - load[i]);
  return t.delay_scale() * delay + t.transit_scale() * transit;
}

// Exact Euclidean projection onto {y >= 0, sum y = mass} by sorting.
inline std::vector<double> sort_projection(const std::vector<double>& v, double mass) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double candidate = (cumulative - mass) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] - tau, 0.0);
  return out;
}

// Random state with every destination below `fill` of its capacity.
inline SplitState random_state(const Topology& t, std::mt19937_64& rng, double fill = 0.9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    std::vector<std::vector<double>> rows(t.size());
    std::vector<double> load(t.size(), 0.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
      auto opts = t.options(j);
      const double mass = u(rng) * t.tracker(j).capacity;
      std::vector<double> w(opts.size());
      for (double& v : w) v = u(rng) + 1e-3;
      const double s = std::accumulate(w.begin(), w.end(), 0.0);
      for (std::size_t k = 0; k < opts.size(); ++k) {
        rows[j].push_back(mass * w[k] / s);
        load[opts[k].dest] += rows[j].back();
      }
    }
    bool ok = true;
    for (std::size_t i = 0; i < t.size(); ++i) ok = ok && load[i] < fill * t.tracker(i).capacity;
    if (ok) return SplitState(t, rows);
  }
}

inline double relative(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace testing_support
