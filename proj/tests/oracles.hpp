// Reference implementations used only by the tests. Everything here is
// written directly against the grid structures, independent of the library's
// belief/env code paths, so the two sides can disagree.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include <gridcrew/belief.hpp>
#include <gridcrew/env.hpp>
#include <gridcrew/fault_model.hpp>
#include <gridcrew/grid.hpp>

namespace testoracle {

// Unit convention mirrored from the library: unit u is line u (Line mode) or
// segment u (Segment mode). Asserted against FaultModel in the tests.
struct UnitView {
  int num_units = 0;
  std::vector<double> prior;
  std::vector<int> circuit;
  std::vector<std::vector<int>> customer_cut;  // per customer group
};

inline UnitView make_unit_view(const gridcrew::DistributionGrid& g,
                               gridcrew::UnitGranularity gran) {
  UnitView v;
  const bool by_line = gran == gridcrew::UnitGranularity::Line;
  v.num_units = static_cast<int>(by_line ? g.lines.size() : g.segments.size());
  v.prior.resize(v.num_units);
  v.circuit.resize(v.num_units);
  for (int u = 0; u < v.num_units; ++u) {
    if (by_line) {
      v.prior[u] = g.lines[u].prior;
      v.circuit[u] = g.lines[u].circuit;
    } else {
      double intact = 1.0;
      for (const auto& ln : g.lines)
        if (ln.segment == u) intact *= 1.0 - ln.prior;
      v.prior[u] = 1.0 - intact;
      v.circuit[u] = g.segments[u].circuit;
    }
  }
  for (const auto& grp : g.customers) {
    std::vector<int> cut;
    for (int s = grp.segment; s != -1; s = g.segments[s].parent) {
      if (by_line) {
        for (int li = 0; li < static_cast<int>(g.lines.size()); ++li)
          if (g.lines[li].segment == s) cut.push_back(li);
      } else {
        cut.push_back(s);
      }
    }
    std::sort(cut.begin(), cut.end());
    v.customer_cut.push_back(std::move(cut));
  }
  return v;
}

struct BayesResult {
  bool valid = false;                 // false: no configuration explains the calls
  std::vector<double> initial;        // P(unit was damaged at t=0 | evidence)
  std::vector<double> present;        // repaired -> 0, observed damaged -> 1
};

// Full enumeration over the circuit's unvisited units; observations pin bits
// of the initial configuration, calls weight configurations by the
// per-group report model.
inline BayesResult brute_posterior(const gridcrew::DistributionGrid& g,
                                   gridcrew::UnitGranularity gran, int circuit,
                                   const std::vector<std::uint8_t>& called,
                                   const std::vector<gridcrew::UnitStatus>& status,
                                   double rho) {
  using gridcrew::UnitStatus;
  const UnitView v = make_unit_view(g, gran);

  std::vector<int> free_units;
  std::vector<char> value(v.num_units, 0);
  for (int u = 0; u < v.num_units; ++u) {
    if (v.circuit[u] != circuit) continue;
    switch (status[u]) {
      case UnitStatus::Unvisited:
        free_units.push_back(u);
        break;
      case UnitStatus::ObservedIntact:
        value[u] = 0;
        break;
      case UnitStatus::ObservedDamaged:
      case UnitStatus::Repaired:
        value[u] = 1;
        break;
    }
  }
  if (free_units.size() > 24) throw std::logic_error("oracle fixture too large");

  std::vector<int> groups;
  for (int c = 0; c < static_cast<int>(g.customers.size()); ++c)
    if (g.customers[c].circuit == circuit) groups.push_back(c);

  double total = 0.0;
  std::vector<double> acc(v.num_units, 0.0);
  const std::uint64_t n_cfg = 1ULL << free_units.size();
  for (std::uint64_t cfg = 0; cfg < n_cfg; ++cfg) {
    double w = 1.0;
    for (size_t i = 0; i < free_units.size(); ++i) {
      const bool bit = (cfg >> i) & 1;
      value[free_units[i]] = bit ? 1 : 0;
      w *= bit ? v.prior[free_units[i]] : 1.0 - v.prior[free_units[i]];
    }
    for (int c : groups) {
      bool dark = false;
      for (int u : v.customer_cut[c]) dark = dark || value[u] != 0;
      const double silent = std::pow(1.0 - rho, g.customers[c].count);
      if (called[c])
        w *= dark ? 1.0 - silent : 0.0;
      else if (dark)
        w *= silent;
    }
    if (w == 0.0) continue;
    total += w;
    for (int u = 0; u < v.num_units; ++u)
      if (v.circuit[u] == circuit && value[u]) acc[u] += w;
  }

  BayesResult out;
  if (total <= 0.0) return out;
  out.valid = true;
  out.initial.assign(v.num_units, 0.0);
  out.present.assign(v.num_units, 0.0);
  for (int u = 0; u < v.num_units; ++u) {
    if (v.circuit[u] != circuit) continue;
    out.initial[u] = acc[u] / total;
    switch (status[u]) {
      case UnitStatus::Unvisited:
        out.present[u] = out.initial[u];
        break;
      case UnitStatus::ObservedIntact:
      case UnitStatus::Repaired:
        out.present[u] = 0.0;
        break;
      case UnitStatus::ObservedDamaged:
        out.present[u] = 1.0;
        break;
    }
  }
  return out;
}

// Expected number of de-energized customers by full enumeration, treating the
// per-unit probabilities as independent. This is the distribution the reward
// formula's per-segment product term describes.
inline double enumerated_outage_customers(const gridcrew::DistributionGrid& g,
                                          gridcrew::UnitGranularity gran,
                                          const std::vector<double>& q) {
  const UnitView v = make_unit_view(g, gran);
  double expected = 0.0;
  for (int circuit = 0; circuit < static_cast<int>(g.circuits.size()); ++circuit) {
    std::vector<int> units;
    for (int u = 0; u < v.num_units; ++u)
      if (v.circuit[u] == circuit) units.push_back(u);
    if (units.size() > 20) throw std::logic_error("oracle fixture too large");
    const std::uint64_t n_cfg = 1ULL << units.size();
    for (std::uint64_t cfg = 0; cfg < n_cfg; ++cfg) {
      double p = 1.0;
      for (size_t i = 0; i < units.size(); ++i)
        p *= (cfg >> i) & 1 ? q[units[i]] : 1.0 - q[units[i]];
      if (p == 0.0) continue;
      int dark_customers = 0;
      for (int c = 0; c < static_cast<int>(g.customers.size()); ++c) {
        if (g.customers[c].circuit != circuit) continue;
        bool dark = false;
        for (int u : v.customer_cut[c]) {
          size_t pos = std::lower_bound(units.begin(), units.end(), u) - units.begin();
          dark = dark || ((pos < units.size() && units[pos] == u) && ((cfg >> pos) & 1));
        }
        if (dark) dark_customers += g.customers[c].count;
      }
      expected += p * dark_customers;
    }
  }
  return expected;
}

// Exact expectimax over the environment's decision/outcome tree, undiscounted.
// Chance outcomes follow the same per-unit independent model the tree search
// samples from. Ties break toward the lowest destination node id.
struct ExpectimaxResult {
  int best_destination = -1;
  double value = 0.0;  // customer-hours (non-positive)
};

inline double expectimax_value(const gridcrew::FaultModel& model,
                               const gridcrew::EnvConfig& cfg,
                               const gridcrew::EnvState& state, int depth);

inline double expectimax_q(const gridcrew::FaultModel& model, const gridcrew::EnvConfig& cfg,
                           const gridcrew::EnvState& state, int destination, int depth) {
  const int vehicle = gridcrew::next_to_dispatch(state);
  const int from = state.vehicles[vehicle].position;
  const std::vector<int> units = model.units_on_edge(from, destination);
  double q = 0.0;
  const std::uint64_t n_out = 1ULL << units.size();
  for (std::uint64_t mask = 0; mask < n_out; ++mask) {
    double p = 1.0;
    std::vector<std::uint8_t> outcome(units.size(), 0);
    for (size_t i = 0; i < units.size(); ++i) {
      double qd = std::clamp(state.belief.posterior[units[i]], 0.0, 1.0);
      outcome[i] = (mask >> i) & 1 ? 1 : 0;
      p *= outcome[i] ? qd : 1.0 - qd;
    }
    if (p == 0.0) continue;
    gridcrew::StepResult step = gridcrew::step_with_outcome(
        model, cfg, state, {vehicle, destination}, outcome);
    q += p * (step.reward + expectimax_value(model, cfg, step.state, depth - 1));
  }
  return q;
}

inline double expectimax_value(const gridcrew::FaultModel& model,
                               const gridcrew::EnvConfig& cfg,
                               const gridcrew::EnvState& state, int depth) {
  if (state.terminal || depth == 0) return 0.0;
  const std::vector<int> dests = gridcrew::legal_destinations(model, state);
  double best = -std::numeric_limits<double>::infinity();
  for (int d : dests) best = std::max(best, expectimax_q(model, cfg, state, d, depth));
  return best;
}

inline ExpectimaxResult expectimax_best(const gridcrew::FaultModel& model,
                                        const gridcrew::EnvConfig& cfg,
                                        const gridcrew::EnvState& state, int depth) {
  ExpectimaxResult out;
  out.value = -std::numeric_limits<double>::infinity();
  for (int d : gridcrew::legal_destinations(model, state)) {
    const double q = expectimax_q(model, cfg, state, d, depth);
    if (q > out.value + 1e-12) {
      out.value = q;
      out.best_destination = d;
    }
  }
  return out;
}

// Realized customer outage hours recomputed from the episode log alone:
// repair completion times are taken from the logged traversals, not from the
// environment's own bookkeeping.
inline double log_outage_hours(const gridcrew::DistributionGrid& g,
                               gridcrew::UnitGranularity gran,
                               const std::vector<int>& damaged_lines,
                               const std::vector<gridcrew::LogEntry>& log,
                               double final_clock) {
  const UnitView v = make_unit_view(g, gran);
  const bool by_line = gran == gridcrew::UnitGranularity::Line;

  std::vector<char> unit_damaged(v.num_units, 0);
  for (int li : damaged_lines) unit_damaged[by_line ? li : g.lines[li].segment] = 1;

  std::map<int, double> repair_done;  // unit -> completion minutes
  for (const auto& entry : log)
    for (size_t i = 0; i < entry.units.size(); ++i)
      if (entry.damaged[i] && !repair_done.count(entry.units[i]))
        repair_done[entry.units[i]] = entry.repair_done[i];

  double hours = 0.0;
  for (int c = 0; c < static_cast<int>(g.customers.size()); ++c) {
    double restored = 0.0;
    bool dark = false;
    for (int u : v.customer_cut[c]) {
      if (!unit_damaged[u]) continue;
      dark = true;
      auto it = repair_done.find(u);
      restored = std::max(restored, it == repair_done.end() ? final_clock : it->second);
    }
    if (dark) hours += g.customers[c].count * restored / 60.0;
  }
  return hours;
}

}  // namespace testoracle
