#pragma once

#include <cmath>
#include <cstdint>

#include "gridcrew/env.hpp"

namespace gridcrew {

struct BaselineConfig {
  int simulations = 200;
  double uct_c = std::sqrt(2.0);
  int rollout_depth = 20;
  double gamma = 1.0;
  std::uint64_t seed = 0;
};

// Closed-loop UCT: UCB1 on raw mean returns, every action tried once before
// any is revisited, random rollouts as the leaf estimate. Chance branches are
// sampled from the belief exactly as in the guided search. Returns the most
// visited destination (lowest on ties).
int vanilla_uct_decide(const FaultModel& model, const EnvConfig& env_cfg, const EnvState& state,
                       const BaselineConfig& cfg);

// Open-loop UCT: statistics keyed by the action sequence only, so each pass
// re-simulates the stochastic transitions underneath the shared nodes.
int oluct_decide(const FaultModel& model, const EnvConfig& env_cfg, const EnvState& state,
                 const BaselineConfig& cfg);

// One-step heuristic: score each adjacent move by
// posterior * downstream customers / travel minutes summed over the units on
// the edge. When every adjacent move scores zero, heads along the zone
// shortest path toward the highest-value unresolved unit; with nothing left
// to chase it takes the lowest-numbered neighbor. Deterministic.
int greedy_decide(const FaultModel& model, const EnvState& state);

}  // namespace gridcrew
