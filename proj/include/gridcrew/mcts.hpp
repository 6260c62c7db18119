#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "gridcrew/env.hpp"

namespace gridcrew {

// Policy prior over a legal-action list (same order) plus a state value in
// customer-hours. Whatever guidance is plugged into the search implements
// this signature.
struct PolicyValue {
  Eigen::VectorXd prior;  // non-negative, sums to 1 over the legal actions
  double value = 0.0;
};
using Evaluator = std::function<PolicyValue(const EnvState&, const std::vector<int>&)>;

// Uninformed guidance: uniform prior, zero value.
Evaluator uniform_evaluator();

// Running min/max of backed-up values, used to squash Q into [0,1] for the
// selection rule. Degenerate ranges map to 0.5.
struct MinMaxStats {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void update(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double normalize(double v) const {
    if (!(lo < hi)) return 0.5;
    const double x = (v - lo) / (hi - lo);
    return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
  }
};

struct DecisionNode;

// Outcome branch under an action edge. `count` tracks how many simulations
// took this branch; the per-edge counts sum to the edge visit count.
struct ChanceChild {
  int count = 0;
  std::unique_ptr<DecisionNode> node;
};

// Action edge with visit/value statistics and its sampled-outcome children,
// keyed by the damaged-unit bitmask of the traversal.
struct EdgeStats {
  int dest = 0;
  double prior = 0.0;
  int n = 0;
  double w = 0.0;
  double q = 0.0;
  double reward = 0.0;       // expected customer-hours of taking this edge
  bool reward_set = false;
  std::map<std::uint64_t, ChanceChild> children;
};

struct DecisionNode {
  EnvState state;
  std::vector<EdgeStats> edges;  // ascending destination
  bool expanded = false;
};

struct SearchConfig {
  int simulations = 30;
  double c_puct = 1.25;
  double gamma = 1.0;
  double tau = 1.0;           // visit-count temperature for the returned policy
  std::uint64_t seed = 0;
  bool root_noise = false;    // Dirichlet exploration noise on the root prior
  double dirichlet_alpha = 0.3;
  double noise_frac = 0.25;
};

struct SearchResult {
  std::vector<int> actions;   // destinations, ascending
  Eigen::VectorXi visits;
  Eigen::VectorXd pi;         // visit distribution tempered by tau
  Eigen::VectorXd q;          // raw mean returns per action
  double value_target = 0.0;  // best visited root Q, customer-hours
  std::shared_ptr<DecisionNode> root;
};

// Index of the edge maximizing PUCT. Unvisited edges score with Q=0; the
// exploration term uses sqrt(total)=1 while the node is unvisited. Ties go to
// the lowest destination.
int select_edge(const std::vector<EdgeStats>& edges, const MinMaxStats& minmax, double c_puct);

// Tempered visit distribution: weights (N_a / N_max)^(1/tau), normalized.
// tau below 1e-3 snaps to the argmax (lowest destination on ties).
Eigen::VectorXd visit_policy(const Eigen::VectorXi& visits, double tau);

// Runs the stochastic tree search from a state owing a routing decision.
// Chance branches are sampled from the state's own posterior; transitions go
// through step_with_outcome, so the hidden truth is never consulted.
SearchResult search(const FaultModel& model, const EnvConfig& env_cfg, const EnvState& root,
                    const Evaluator& evaluator, const SearchConfig& cfg);

// Destination with the most visits, lowest destination on ties.
int most_visited_action(const SearchResult& result);

}  // namespace gridcrew
