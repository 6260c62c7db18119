#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gridcrew/fault_model.hpp"

namespace gridcrew {

// The observed call pattern assigns zero probability to every fault
// configuration under consideration.
class ZeroEvidenceError : public std::runtime_error {
 public:
  explicit ZeroEvidenceError(const std::string& what) : std::runtime_error(what) {}
};

// What the crews know about one unit. Damaged units found by a crew are fixed
// on the spot, so within episodes ObservedDamaged is transient; it exists for
// the general update API and for mid-repair queries.
enum class UnitStatus : std::uint8_t { Unvisited, ObservedIntact, ObservedDamaged, Repaired };

struct BeliefConfig {
  double rho = 0.05;        // per-customer probability of reporting an outage
  int enum_limit = 20;      // exact enumeration while free units <= this
  int mc_samples = 50000;   // Monte Carlo draws otherwise
  std::uint64_t seed = 0;   // base seed of the Monte Carlo stream
};

// Crew belief over the initial fault configuration, projected to the present.
// Inference conditions on where the storm left damage (a static quantity the
// phone calls are evidence about); field observations pin components of that
// configuration: ObservedIntact pins "was never damaged", ObservedDamaged and
// Repaired pin "was damaged". The published `posterior` is the present-time
// fault probability: pinned-damaged-and-repaired units read 0, found-damaged
// unrepaired units read 1, unvisited units carry the Bayes value.
struct BeliefState {
  Eigen::VectorXd posterior;
  std::vector<UnitStatus> status;
  std::vector<std::uint8_t> called;   // per customer group
  std::uint64_t draw_counter = 0;     // advances on every Monte Carlo solve

  // Largest present-time fault probability; the mission ends when this drops
  // below the scenario threshold.
  double max_unresolved() const {
    return posterior.size() == 0 ? 0.0 : posterior.maxCoeff();
  }
};

// Likelihood of the call pattern given a full fault configuration, one
// circuit. De-energized groups of n customers call with probability
// 1-(1-rho)^n; energized groups never call. `unit_faults` and `called` are
// global-sized vectors; entries of other circuits are ignored.
double call_likelihood(const FaultModel& model, int circuit,
                       const std::vector<std::uint8_t>& unit_faults,
                       const std::vector<std::uint8_t>& called, double rho);

// Posterior probability that each unit was initially faulted, given the call
// pattern and status pins, by exact enumeration over the circuit's free
// (Unvisited) units. Returns a num_units-sized vector with this circuit's
// entries filled and all others zero. Weight underflow (many silent-but-dark
// customer groups) is absorbed by an internal log-space retry; a
// ZeroEvidenceError therefore means no configuration explains the calls.
Eigen::VectorXd posterior_exact(const FaultModel& model, int circuit,
                                const std::vector<std::uint8_t>& called,
                                const std::vector<UnitStatus>& status, double rho);

// Same quantity by likelihood-weighted sampling: free units are drawn from
// their priors and weighted by the call likelihood. Deterministic in `seed`.
Eigen::VectorXd posterior_mc(const FaultModel& model, int circuit,
                             const std::vector<std::uint8_t>& called,
                             const std::vector<UnitStatus>& status, double rho, int samples,
                             std::uint64_t seed);

// Fresh belief from the initial call pattern: all units Unvisited, posteriors
// solved per circuit (exact when small, Monte Carlo when large).
BeliefState init_belief(const FaultModel& model, const std::vector<std::uint8_t>& called,
                        const BeliefConfig& cfg);

// Applies field observations for `units` (parallel to `damaged`) and refreshes
// the posteriors of the circuits touched. Damaged units become Repaired when
// `repair_damaged` is set (the normal crew behaviour), ObservedDamaged
// otherwise. Contradicting an earlier pin throws std::logic_error.
void update_on_observation(const FaultModel& model, BeliefState& belief,
                           const std::vector<int>& units,
                           const std::vector<std::uint8_t>& damaged, bool repair_damaged,
                           const BeliefConfig& cfg);

// Replaces the call pattern (late calls) and refreshes every circuit. Late
// calls are treated as evidence about the initial fault state.
void update_on_calls(const FaultModel& model, BeliefState& belief,
                     const std::vector<std::uint8_t>& called, const BeliefConfig& cfg);

// Re-solves one circuit's posterior in place. Unlike the strict low-level
// solvers this never throws on inconsistent evidence: called groups whose
// every explanation has been pinned intact (a situation only hypothetical
// search rollouts can produce) are dropped from the evidence, and a Monte
// Carlo weight collapse falls back to the prior. See docs/belief.md.
void recompute_circuit(const FaultModel& model, BeliefState& belief, int circuit,
                       const BeliefConfig& cfg);

}  // namespace gridcrew
