#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gridcrew/belief.hpp"
#include "gridcrew/fault_model.hpp"
#include "gridcrew/grid.hpp"

namespace gridcrew {

struct EnvConfig {
  double threshold = 0.02;  // mission ends once every posterior drops below
  int max_decisions = 200;  // dispatch cap; exceeding it truncates the episode
  BeliefConfig belief;
};

// Builds an EnvConfig carrying the scenario's rho/threshold.
EnvConfig make_env_config(const Scenario& scenario);

// A crew on the road. The traversal outcome (which units it will find
// damaged) is fixed at dispatch and applied to the belief when the crew
// arrives, so concurrent crews never benefit from observations that have not
// happened yet.
struct PendingTraversal {
  int from = 0;
  int to = 0;
  double t_depart = 0.0;
  double t_arrive = 0.0;  // depart + travel + repairs found on this trip
  double travel_minutes = 0.0;
  std::vector<int> units;               // units on the edge, ascending
  std::vector<std::uint8_t> damaged;    // outcome per unit
  std::vector<double> repair_done;      // per unit, absolute minutes (0 if intact)
};

struct VehicleState {
  int position = 0;          // destination once dispatched
  double ready_at = 0.0;
  std::optional<PendingTraversal> pending;
};

// One dispatch with its eventual outcome; enough to replay the episode.
struct LogEntry {
  int decision = 0;
  int vehicle = 0;
  int from = 0;
  int to = 0;
  double t_depart = 0.0;
  double t_arrive = 0.0;
  double travel_minutes = 0.0;
  double reward = 0.0;                  // expected customer-hours, negative
  std::vector<int> units;
  std::vector<std::uint8_t> damaged;
  std::vector<double> repair_done;
  double max_posterior_after = -1.0;    // filled when the crew arrives
};

struct EnvState {
  double clock = 0.0;                      // minutes since the storm
  std::vector<VehicleState> vehicles;
  std::vector<int> queue;                  // idle vehicles, priority order
  BeliefState belief;
  std::vector<std::uint8_t> unit_damaged0; // ground truth at t=0
  std::vector<std::uint8_t> unit_repaired;
  std::vector<double> unit_repair_done;    // absolute minutes
  std::vector<int> damaged_lines0;         // physical truth behind unit_damaged0
  std::vector<LogEntry> log;
  std::uint64_t belief_seed = 0;           // episode stream for Monte Carlo solves
  int decisions = 0;
  bool terminal = false;
  bool truncated = false;
};

struct RoutingAction {
  int vehicle = 0;      // must equal next_to_dispatch
  int destination = 0;  // adjacent node inside the vehicle's zone
};

struct StepResult {
  EnvState state;
  double reward = 0.0;                // expected customer-hours over the move
  std::vector<int> units;             // what the crew will inspect
  std::vector<std::uint8_t> damaged;  // outcome per unit
};

// Draws (or adopts) damage and calls, initializes the belief, parks every
// crew at its depot and queues them by zone priority. Deterministic in seed.
// With fixed calls and sampled damage, damage is redrawn until it explains
// every call (bounded; throws ScenarioError if the scenario makes that
// impossible in practice).
EnvState reset(const FaultModel& model, const Scenario& scenario, const EnvConfig& cfg,
               std::uint64_t seed);

// Vehicle index owed the next routing decision, or -1 when none (terminal).
int next_to_dispatch(const EnvState& state);

// Destinations the pending vehicle may be sent to, ascending.
std::vector<int> legal_destinations(const FaultModel& model, const EnvState& state);

// Expected customers without power under the belief: sum over segments of
// customer count times the probability that some unit cutting the segment is
// faulted (independent marginals).
double expected_outage_customers(const FaultModel& model, const BeliefState& belief);

// Reward of dispatching from -> to under the current belief:
//   -(expected outage customers) * (travel + sum posterior*repair) / 60,
// in customer-hours (non-positive).
double expected_reward(const FaultModel& model, const BeliefState& belief, int from, int to);

// Real-environment transition: the traversal outcome comes from the hidden
// damage. Advances time until another decision is owed or the mission ends.
StepResult step(const FaultModel& model, const EnvConfig& cfg, const EnvState& state,
                const RoutingAction& action);

// Search-side transition: identical dynamics, but the caller supplies the
// traversal outcome (parallel to units_on_edge(from, to)). Never reads the
// hidden truth.
StepResult step_with_outcome(const FaultModel& model, const EnvConfig& cfg,
                             const EnvState& state, const RoutingAction& action,
                             const std::vector<std::uint8_t>& outcome);

// Realized customer-hours of the finished episode: every customer group dark
// at t=0 accrues until its last faulted cut unit is repaired, or until the
// episode's final clock if repairs never happened.
double episode_outage_hours(const FaultModel& model, const EnvState& state);

}  // namespace gridcrew
