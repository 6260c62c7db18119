#include "gridcrew/baselines.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "gridcrew/rng.hpp"

namespace gridcrew {

namespace {

std::uint64_t outcome_key(const std::vector<std::uint8_t>& damaged) {
  std::uint64_t key = 0;
  for (size_t i = 0; i < damaged.size(); ++i)
    if (damaged[i]) key |= 1ULL << i;
  return key;
}

std::vector<std::uint8_t> sample_outcome(const EnvState& s, const std::vector<int>& units,
                                         Rng& rng) {
  std::vector<std::uint8_t> outcome(units.size(), 0);
  for (size_t i = 0; i < units.size(); ++i) {
    const double p = std::clamp(s.belief.posterior[units[i]], 0.0, 1.0);
    outcome[i] = rng.bernoulli(p) ? 1 : 0;
  }
  return outcome;
}

// Uniform-random playout; returns the discounted return over at most `depth`
// moves from `state`.
double rollout(const FaultModel& model, const EnvConfig& env_cfg, EnvState state, int depth,
               double gamma, Rng& rng) {
  double g = 0.0;
  double discount = 1.0;
  for (int d = 0; d < depth && !state.terminal; ++d) {
    const std::vector<int> legal = legal_destinations(model, state);
    if (legal.empty()) break;
    const int vehicle = next_to_dispatch(state);
    const int dest = legal[static_cast<size_t>(rng.below(legal.size()))];
    const int from = state.vehicles[vehicle].position;
    const std::vector<int> units = model.units_on_edge(from, dest);
    StepResult sr = step_with_outcome(model, env_cfg, state, {vehicle, dest},
                                      sample_outcome(state, units, rng));
    g += discount * sr.reward;
    discount *= gamma;
    state = std::move(sr.state);
  }
  return g;
}

void scrub_truth(EnvState* s) {
  std::fill(s->unit_damaged0.begin(), s->unit_damaged0.end(), 0);
  s->damaged_lines0.clear();
  s->log.clear();
}

// ---- closed-loop UCT ----

struct UNode;

struct UChild {
  int count = 0;
  std::unique_ptr<UNode> node;
};

struct UEdge {
  int dest = 0;
  int n = 0;
  double w = 0.0;
  double reward = 0.0;
  bool reward_set = false;
  std::map<std::uint64_t, UChild> children;
};

struct UNode {
  EnvState state;
  std::vector<UEdge> edges;
};

void u_expand(const FaultModel& model, UNode* node) {
  for (int dest : legal_destinations(model, node->state)) {
    UEdge e;
    e.dest = dest;
    node->edges.push_back(std::move(e));
  }
}

// UCB1 with a visit-every-action-first rule; ties to the lowest destination.
int u_select(const std::vector<UEdge>& edges, double c) {
  int total = 0;
  for (const UEdge& e : edges) total += e.n;
  for (int i = 0; i < static_cast<int>(edges.size()); ++i)
    if (edges[i].n == 0) return i;
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    const UEdge& e = edges[i];
    const double score = e.w / e.n + c * std::sqrt(std::log(static_cast<double>(total)) / e.n);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace

int vanilla_uct_decide(const FaultModel& model, const EnvConfig& env_cfg, const EnvState& state,
                       const BaselineConfig& cfg) {
  if (state.terminal) throw std::logic_error("decision requested on a terminal episode");
  Rng rng(Rng::derive(cfg.seed, 0x0C7));
  UNode root;
  root.state = state;
  scrub_truth(&root.state);
  u_expand(model, &root);
  if (root.edges.empty()) throw std::logic_error("no legal destination at the root");

  struct PathStep {
    UNode* node;
    int edge;
  };
  for (int sim = 0; sim < cfg.simulations; ++sim) {
    UNode* node = &root;
    std::vector<PathStep> path;
    double leaf = 0.0;
    while (true) {
      if (node->state.terminal) break;
      const int ei = u_select(node->edges, cfg.uct_c);
      UEdge& edge = node->edges[ei];
      const int vehicle = next_to_dispatch(node->state);
      const int from = node->state.vehicles[vehicle].position;
      if (!edge.reward_set) {
        edge.reward = expected_reward(model, node->state.belief, from, edge.dest);
        edge.reward_set = true;
      }
      const std::vector<int> units = model.units_on_edge(from, edge.dest);
      const std::vector<std::uint8_t> outcome = sample_outcome(node->state, units, rng);
      path.push_back({node, ei});
      UChild& child = edge.children[outcome_key(outcome)];
      ++child.count;
      if (!child.node) {
        StepResult sr =
            step_with_outcome(model, env_cfg, node->state, {vehicle, edge.dest}, outcome);
        child.node = std::make_unique<UNode>();
        child.node->state = std::move(sr.state);
        child.node->state.log.clear();
        if (!child.node->state.terminal) {
          u_expand(model, child.node.get());
          leaf = rollout(model, env_cfg, child.node->state, cfg.rollout_depth, cfg.gamma, rng);
        }
        break;
      }
      node = child.node.get();
    }
    double g = leaf;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      UEdge& edge = it->node->edges[it->edge];
      g = edge.reward + cfg.gamma * g;
      edge.n += 1;
      edge.w += g;
    }
  }

  int best_dest = root.edges.front().dest, best_n = root.edges.front().n;
  for (const UEdge& e : root.edges)
    if (e.n > best_n) {
      best_n = e.n;
      best_dest = e.dest;
    }
  return best_dest;
}

namespace {

// ---- open-loop UCT ----

struct ONode {
  int n = 0;
  double w = 0.0;
  std::map<int, ONode> children;  // keyed by destination
};

}  // namespace

int oluct_decide(const FaultModel& model, const EnvConfig& env_cfg, const EnvState& state,
                 const BaselineConfig& cfg) {
  if (state.terminal) throw std::logic_error("decision requested on a terminal episode");
  Rng rng(Rng::derive(cfg.seed, 0x01C7));
  EnvState root_state = state;
  scrub_truth(&root_state);
  ONode root;

  struct PathStep {
    ONode* child;   // the node entered by taking the action
    double reward;  // expected reward of that action in this pass's state
  };
  for (int sim = 0; sim < cfg.simulations; ++sim) {
    EnvState s = root_state;
    ONode* node = &root;
    node->n += 1;
    std::vector<PathStep> path;
    double leaf = 0.0;
    while (!s.terminal) {
      const std::vector<int> legal = legal_destinations(model, s);
      if (legal.empty()) break;
      // Untried destination first (lowest id), then UCB1 over the tried ones.
      int dest = -1;
      bool fresh = false;
      for (int d : legal) {
        auto it = node->children.find(d);
        if (it == node->children.end() || it->second.n == 0) {
          dest = d;
          fresh = true;
          break;
        }
      }
      if (dest < 0) {
        double best_score = -std::numeric_limits<double>::infinity();
        for (int d : legal) {
          const ONode& ch = node->children.at(d);
          const double score =
              ch.w / ch.n + cfg.uct_c * std::sqrt(std::log(static_cast<double>(node->n)) / ch.n);
          if (score > best_score) {
            best_score = score;
            dest = d;
          }
        }
      }
      const int vehicle = next_to_dispatch(s);
      const int from = s.vehicles[vehicle].position;
      const double reward = expected_reward(model, s.belief, from, dest);
      const std::vector<int> units = model.units_on_edge(from, dest);
      StepResult sr =
          step_with_outcome(model, env_cfg, s, {vehicle, dest}, sample_outcome(s, units, rng));
      s = std::move(sr.state);
      ONode* child = &node->children[dest];
      child->n += 1;
      path.push_back({child, reward});
      if (fresh) {
        if (!s.terminal) leaf = rollout(model, env_cfg, s, cfg.rollout_depth, cfg.gamma, rng);
        break;
      }
      node = child;
    }
    double g = leaf;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      g = it->reward + cfg.gamma * g;
      it->child->w += g;
    }
  }

  const std::vector<int> legal = legal_destinations(model, state);
  int best_dest = legal.empty() ? -1 : legal.front();
  int best_n = -1;
  for (int d : legal) {
    auto it = root.children.find(d);
    const int n = it == root.children.end() ? 0 : it->second.n;
    if (n > best_n) {
      best_n = n;
      best_dest = d;
    }
  }
  if (best_dest < 0) throw std::logic_error("no legal destination at the root");
  return best_dest;
}

int greedy_decide(const FaultModel& model, const EnvState& state) {
  if (state.terminal) throw std::logic_error("decision requested on a terminal episode");
  const DistributionGrid& grid = model.grid();
  const int vehicle = next_to_dispatch(state);
  const int from = state.vehicles[vehicle].position;
  const int zone = grid.vehicles[vehicle].zone;
  const std::vector<int> legal = grid.feasible_actions(from, zone);
  if (legal.empty()) throw std::logic_error("no legal destination at the root");

  int best_dest = -1;
  double best_score = 0.0;
  for (int dest : legal) {
    double score = 0.0;
    const double travel = grid.travel_minutes(from, dest);
    for (int u : model.units_on_edge(from, dest))
      score += state.belief.posterior[u] * model.unit_downstream_customers(u) / travel;
    if (score > best_score) {
      best_score = score;
      best_dest = dest;
    }
  }
  if (best_dest >= 0) return best_dest;

  // Nothing suspicious next door: head for the most valuable unresolved unit
  // reachable inside the zone.
  int best_hop = -1;
  double best_value = 0.0;
  const std::vector<int>& zone_nodes = grid.zones[zone].nodes;
  auto in_zone = [&](int node) {
    return std::binary_search(zone_nodes.begin(), zone_nodes.end(), node);
  };
  for (int u = 0; u < model.num_units(); ++u) {
    const double p = state.belief.posterior[u];
    if (p <= 0.0) continue;
    for (int li : model.unit_lines(u)) {
      // Only stretches this crew could actually drive.
      if (!in_zone(grid.lines[li].node_a) || !in_zone(grid.lines[li].node_b)) continue;
      for (int endpoint : {grid.lines[li].node_a, grid.lines[li].node_b}) {
        double minutes = 0.0;
        int hop = -1;
        if (!grid.zone_shortest_path(zone, from, endpoint, &minutes, &hop)) continue;
        if (minutes <= 0.0) continue;  // adjacent cases were already scored above
        const double value = p * model.unit_downstream_customers(u) / minutes;
        if (value > best_value) {
          best_value = value;
          best_hop = hop;
        }
      }
    }
  }
  if (best_hop >= 0) return best_hop;
  return legal.front();
}

}  // namespace gridcrew
