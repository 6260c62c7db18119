#include "gridcrew/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcrew/rng.hpp"

namespace gridcrew {

namespace {

constexpr double kTimeEps = 1e-9;

int zone_priority(const DistributionGrid& grid, int vehicle) {
  return grid.zones[grid.vehicles[vehicle].zone].priority;
}

void queue_insert(const DistributionGrid& grid, std::vector<int>& queue, int vehicle) {
  auto pos = std::find_if(queue.begin(), queue.end(), [&](int other) {
    return zone_priority(grid, other) > zone_priority(grid, vehicle);
  });
  queue.insert(pos, vehicle);
}

// Applies one arrival: belief update, repair bookkeeping, log completion.
void apply_arrival(const FaultModel& model, const EnvConfig& cfg, EnvState& s, int vehicle) {
  VehicleState& v = s.vehicles[vehicle];
  const PendingTraversal& p = *v.pending;
  BeliefConfig bcfg = cfg.belief;
  bcfg.seed = s.belief_seed;
  update_on_observation(model, s.belief, p.units, p.damaged, /*repair_damaged=*/true, bcfg);
  for (size_t i = 0; i < p.units.size(); ++i) {
    if (!p.damaged[i]) continue;
    const int u = p.units[i];
    if (!s.unit_repaired[u]) {
      s.unit_repaired[u] = 1;
      s.unit_repair_done[u] = p.repair_done[i];
    }
  }
  for (auto it = s.log.rbegin(); it != s.log.rend(); ++it) {
    if (it->vehicle == vehicle && it->t_depart == p.t_depart && it->to == p.to) {
      it->max_posterior_after = s.belief.max_unresolved();
      break;
    }
  }
  v.ready_at = p.t_arrive;
  v.pending.reset();
}

// Runs the event clock until a decision is owed or the mission ends.
void advance(const FaultModel& model, const EnvConfig& cfg, EnvState& s) {
  const DistributionGrid& grid = model.grid();
  while (!s.terminal && s.queue.empty()) {
    double t_min = -1.0;
    for (const auto& v : s.vehicles)
      if (v.pending && (t_min < 0.0 || v.pending->t_arrive < t_min)) t_min = v.pending->t_arrive;
    if (t_min < 0.0) break;  // nobody queued, nobody driving: nothing can change
    // Arrivals sharing the timestamp are one moment: apply all observations,
    // re-queue by priority, then test the stop condition once.
    std::vector<int> arriving;
    for (int i = 0; i < static_cast<int>(s.vehicles.size()); ++i)
      if (s.vehicles[i].pending && s.vehicles[i].pending->t_arrive <= t_min + kTimeEps)
        arriving.push_back(i);
    std::sort(arriving.begin(), arriving.end(), [&](int a, int b) {
      return zone_priority(grid, a) < zone_priority(grid, b);
    });
    s.clock = t_min;
    for (int vi : arriving) {
      apply_arrival(model, cfg, s, vi);
      queue_insert(grid, s.queue, vi);
    }
    if (s.belief.max_unresolved() < cfg.threshold) {
      s.terminal = true;
      s.queue.clear();  // in-flight work stands down; mission complete
    }
  }
  if (!s.terminal && s.decisions >= cfg.max_decisions) {
    s.terminal = true;
    s.truncated = true;
    s.queue.clear();
  }
}

}  // namespace

EnvConfig make_env_config(const Scenario& scenario) {
  EnvConfig cfg;
  cfg.threshold = scenario.threshold;
  cfg.belief.rho = scenario.rho;
  return cfg;
}

EnvState reset(const FaultModel& model, const Scenario& scenario, const EnvConfig& cfg,
               std::uint64_t seed) {
  const DistributionGrid& grid = model.grid();
  Rng rng(Rng::derive(seed, 0xD15EA5E));

  std::vector<int> damaged_lines;
  std::vector<std::uint8_t> called(model.num_customers(), 0);

  auto sample_damage = [&]() {
    damaged_lines.clear();
    for (int li = 0; li < static_cast<int>(grid.lines.size()); ++li)
      if (rng.bernoulli(grid.lines[li].prior)) damaged_lines.push_back(li);
  };
  auto explains_calls = [&](const std::vector<std::uint8_t>& units_dmg) {
    for (int c = 0; c < model.num_customers(); ++c) {
      if (!called[c]) continue;
      bool dark = false;
      for (int u : model.customer_cut_units(c)) dark |= units_dmg[u] != 0;
      if (!dark) return false;
    }
    return true;
  };

  if (scenario.calls)
    for (int ci : *scenario.calls) called[ci] = 1;

  if (scenario.damage) {
    damaged_lines = *scenario.damage;
  } else if (!scenario.calls) {
    sample_damage();
  } else {
    // Fixed calls, sampled damage: rejection-sample a consistent world.
    bool ok = false;
    for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
      sample_damage();
      ok = explains_calls(model.units_damaged(damaged_lines));
    }
    if (!ok)
      throw ScenarioError("could not sample damage consistent with the fixed calls in '" +
                          scenario.name + "'");
  }

  EnvState s;
  s.damaged_lines0 = damaged_lines;
  s.unit_damaged0 = model.units_damaged(damaged_lines);
  s.unit_repaired.assign(model.num_units(), 0);
  s.unit_repair_done.assign(model.num_units(), 0.0);

  if (!scenario.calls) {
    for (int c = 0; c < model.num_customers(); ++c) {
      bool dark = false;
      for (int u : model.customer_cut_units(c)) dark |= s.unit_damaged0[u] != 0;
      if (!dark) continue;
      const int n = grid.customers[c].count;
      called[c] = rng.bernoulli(1.0 - std::pow(1.0 - cfg.belief.rho, n)) ? 1 : 0;
    }
  }

  BeliefConfig bcfg = cfg.belief;
  bcfg.seed = Rng::derive(seed, 0xBE11EF);
  s.belief_seed = bcfg.seed;
  s.belief = init_belief(model, called, bcfg);

  s.vehicles.resize(grid.vehicles.size());
  for (int vi = 0; vi < static_cast<int>(grid.vehicles.size()); ++vi) {
    s.vehicles[vi].position = grid.vehicles[vi].depot;
    s.vehicles[vi].ready_at = 0.0;
  }
  for (int vi = 0; vi < static_cast<int>(grid.vehicles.size()); ++vi)
    queue_insert(grid, s.queue, vi);

  if (s.belief.max_unresolved() < cfg.threshold) {
    s.terminal = true;
    s.queue.clear();
  }
  return s;
}

int next_to_dispatch(const EnvState& state) {
  return state.queue.empty() ? -1 : state.queue.front();
}

std::vector<int> legal_destinations(const FaultModel& model, const EnvState& state) {
  const int vi = next_to_dispatch(state);
  if (vi < 0) return {};
  const DistributionGrid& grid = model.grid();
  return grid.feasible_actions(state.vehicles[vi].position, grid.vehicles[vi].zone);
}

double expected_outage_customers(const FaultModel& model, const BeliefState& belief) {
  double total = 0.0;
  const auto& segments = model.grid().segments;
  for (int sgi = 0; sgi < static_cast<int>(segments.size()); ++sgi) {
    if (segments[sgi].customer_count == 0) continue;
    double energized = 1.0;
    for (int u : model.segment_cut_units(sgi)) energized *= 1.0 - belief.posterior[u];
    total += segments[sgi].customer_count * (1.0 - energized);
  }
  return total;
}

double expected_reward(const FaultModel& model, const BeliefState& belief, int from, int to) {
  const double travel = model.grid().travel_minutes(from, to);
  double repair = 0.0;
  for (int u : model.units_on_edge(from, to))
    repair += belief.posterior[u] * model.unit_repair_minutes(u);
  return -expected_outage_customers(model, belief) * (travel + repair) / 60.0;
}

StepResult step_with_outcome(const FaultModel& model, const EnvConfig& cfg,
                             const EnvState& state, const RoutingAction& action,
                             const std::vector<std::uint8_t>& outcome) {
  if (state.terminal) throw std::logic_error("step on a terminal episode");
  if (action.vehicle != next_to_dispatch(state))
    throw std::invalid_argument("dispatched vehicle is not the one owed a decision");
  const DistributionGrid& grid = model.grid();
  const int from = state.vehicles[action.vehicle].position;
  {
    const auto legal = grid.feasible_actions(from, grid.vehicles[action.vehicle].zone);
    if (!std::binary_search(legal.begin(), legal.end(), action.destination))
      throw std::invalid_argument("destination " + std::to_string(action.destination) +
                                  " is not reachable from node " + std::to_string(from) +
                                  " within the crew zone");
  }
  StepResult res;
  res.units = model.units_on_edge(from, action.destination);
  if (outcome.size() != res.units.size())
    throw std::invalid_argument("traversal outcome size does not match units on the edge");
  res.damaged = outcome;

  res.state = state;
  EnvState& s = res.state;
  res.reward = expected_reward(model, s.belief, from, action.destination);

  PendingTraversal p;
  p.from = from;
  p.to = action.destination;
  p.t_depart = s.clock;
  p.travel_minutes = grid.travel_minutes(from, action.destination);
  p.units = res.units;
  p.damaged = res.damaged;
  p.repair_done.assign(p.units.size(), 0.0);
  double done = p.t_depart + p.travel_minutes;
  for (size_t i = 0; i < p.units.size(); ++i) {
    if (!p.damaged[i]) continue;
    done += model.unit_repair_minutes(p.units[i]);
    p.repair_done[i] = done;
  }
  p.t_arrive = done;

  LogEntry log;
  log.decision = s.decisions;
  log.vehicle = action.vehicle;
  log.from = from;
  log.to = action.destination;
  log.t_depart = p.t_depart;
  log.t_arrive = p.t_arrive;
  log.travel_minutes = p.travel_minutes;
  log.reward = res.reward;
  log.units = p.units;
  log.damaged = p.damaged;
  log.repair_done = p.repair_done;
  s.log.push_back(std::move(log));

  VehicleState& v = s.vehicles[action.vehicle];
  v.position = action.destination;
  v.pending = std::move(p);
  s.queue.erase(s.queue.begin());
  ++s.decisions;

  advance(model, cfg, s);
  return res;
}

StepResult step(const FaultModel& model, const EnvConfig& cfg, const EnvState& state,
                const RoutingAction& action) {
  const int from =
      next_to_dispatch(state) >= 0 ? state.vehicles[action.vehicle].position : -1;
  std::vector<int> units = from >= 0 ? model.units_on_edge(from, action.destination)
                                     : std::vector<int>{};
  std::vector<std::uint8_t> outcome(units.size(), 0);
  for (size_t i = 0; i < units.size(); ++i)
    outcome[i] = state.unit_damaged0[units[i]] && !state.unit_repaired[units[i]] ? 1 : 0;
  return step_with_outcome(model, cfg, state, action, outcome);
}

double episode_outage_hours(const FaultModel& model, const EnvState& state) {
  if (!state.terminal) throw std::logic_error("episode still running");
  double hours = 0.0;
  for (int c = 0; c < model.num_customers(); ++c) {
    double restored = 0.0;
    bool dark = false;
    for (int u : model.customer_cut_units(c)) {
      if (!state.unit_damaged0[u]) continue;
      dark = true;
      restored = std::max(restored,
                          state.unit_repaired[u] ? state.unit_repair_done[u] : state.clock);
    }
    if (dark) hours += model.grid().customers[c].count * restored / 60.0;
  }
  return hours;
}

}  // namespace gridcrew
