#include "gridcrew/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gridcrew/rng.hpp"

namespace gridcrew {

namespace {

// Contiguous grouping of tree edges listed in DFS preorder (parent edge
// before child). Greedy fill up to ceil(n/target) per group, with a forced
// split once the remaining edges are only enough for the groups still owed.
std::vector<int> group_edges(const std::vector<int>& parent_edge, int target) {
  const int n = static_cast<int>(parent_edge.size());
  if (target < 1 || target > n)
    throw std::invalid_argument("cannot split " + std::to_string(n) + " edges into " +
                                std::to_string(target) + " groups");
  const int cap = (n + target - 1) / target;
  std::vector<int> group(n, -1), size;
  for (int k = 0; k < n; ++k) {
    const int needed = target - static_cast<int>(size.size());
    const bool force_new = n - k == needed;
    if (k == 0) {
      group[k] = 0;
      size.push_back(1);
      continue;
    }
    const int pg = group[parent_edge[k]];
    const bool can_create = static_cast<int>(size.size()) < target;
    if ((force_new || size[pg] >= cap) && can_create) {
      group[k] = static_cast<int>(size.size());
      size.push_back(1);
    } else {
      group[k] = pg;
      size[pg] += 1;
    }
  }
  return group;
}

}  // namespace

Scenario generate_scenario(const GenConfig& cfg) {
  if (cfg.nodes < 3) throw std::invalid_argument("need at least 3 nodes");
  if (cfg.customer_nodes < 1 || cfg.customer_nodes > cfg.nodes - 1)
    throw std::invalid_argument("customer nodes must lie in [1, nodes-1]");
  const int n_edges = cfg.nodes - 1;
  if (cfg.segments < 1 || cfg.segments > n_edges)
    throw std::invalid_argument("segments must lie in [1, edges]");
  if (cfg.zones < 1 || cfg.zones > n_edges)
    throw std::invalid_argument("zones must lie in [1, edges]");

  Rng rng(Rng::derive(cfg.seed, 0x6E27));

  // Random tree; the feeder head (node 0) keeps a single child so the circuit
  // has one entry. Parents are drawn from a recent window, which keeps the
  // network road-like (long runs with occasional branches).
  std::vector<int> parent(cfg.nodes, -1);
  parent[1] = 0;
  for (int i = 2; i < cfg.nodes; ++i) {
    const int window = std::min(i - 1, 4);
    parent[i] = i - 1 - static_cast<int>(rng.below(window));
  }

  // Edges in DFS preorder from the root, children ascending. Edge k sits
  // above node edge_child[k].
  std::vector<std::vector<int>> children(cfg.nodes);
  for (int i = 1; i < cfg.nodes; ++i) children[parent[i]].push_back(i);
  std::vector<int> edge_child, edge_of_node(cfg.nodes, -1), parent_edge;
  {
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (auto it = children[u].rbegin(); it != children[u].rend(); ++it) stack.push_back(*it);
      if (u == 0) continue;
      edge_of_node[u] = static_cast<int>(edge_child.size());
      edge_child.push_back(u);
      parent_edge.push_back(edge_of_node[parent[u]]);  // -1 only for the first edge
    }
  }

  const std::vector<int> seg_group = group_edges(parent_edge, cfg.segments);
  const std::vector<int> zone_group = group_edges(parent_edge, cfg.zones);
  const int n_segs = 1 + *std::max_element(seg_group.begin(), seg_group.end());
  const int n_zones = 1 + *std::max_element(zone_group.begin(), zone_group.end());

  std::vector<RoadEdge> edges;
  std::vector<double> travel(n_edges);
  for (int k = 0; k < n_edges; ++k) {
    RoadEdge e;
    e.node_a = parent[edge_child[k]];
    e.node_b = edge_child[k];
    travel[k] = static_cast<double>(5 + rng.below(16));  // 5..20 minutes
    e.minutes = travel[k];
    edges.push_back(e);
  }

  std::vector<Segment> segments(n_segs);
  std::vector<int> seg_first_edge(n_segs, -1);
  for (int k = 0; k < n_edges; ++k)
    if (seg_first_edge[seg_group[k]] < 0) seg_first_edge[seg_group[k]] = k;
  for (int s = 0; s < n_segs; ++s) {
    const int first = seg_first_edge[s];
    segments[s].id = "S" + std::to_string(s + 1);
    segments[s].circuit = 0;
    segments[s].device_node = parent[edge_child[first]];
    segments[s].parent = parent_edge[first] < 0 ? -1 : seg_group[parent_edge[first]];
  }

  std::vector<Zone> zones(n_zones);
  std::vector<Vehicle> vehicles(n_zones);
  std::vector<int> zone_first_edge(n_zones, -1);
  for (int k = 0; k < n_edges; ++k)
    if (zone_first_edge[zone_group[k]] < 0) zone_first_edge[zone_group[k]] = k;
  for (int z = 0; z < n_zones; ++z) {
    zones[z].id = "Z" + std::to_string(z + 1);
    zones[z].priority = z + 1;
    zones[z].vehicle = z;
    vehicles[z].id = "V" + std::to_string(z + 1);
    vehicles[z].zone = z;
    vehicles[z].depot = parent[edge_child[zone_first_edge[z]]];
  }
  for (int k = 0; k < n_edges; ++k) {
    zones[zone_group[k]].nodes.push_back(parent[edge_child[k]]);
    zones[zone_group[k]].nodes.push_back(edge_child[k]);
  }

  std::vector<Line> lines(n_edges);
  for (int k = 0; k < n_edges; ++k) {
    lines[k].id = "L" + std::to_string(k + 1);
    lines[k].circuit = 0;
    lines[k].segment = seg_group[k];
    lines[k].node_a = parent[edge_child[k]];
    lines[k].node_b = edge_child[k];
    lines[k].prior = std::round((0.03 + 0.22 * rng.uniform01()) * 1000.0) / 1000.0;
    lines[k].repair_minutes = zones[zone_group[k]].priority % 2 == 1 ? 60.0 : 120.0;
  }

  // Customer nodes: a deterministic shuffle of the non-root nodes.
  std::vector<int> candidates;
  for (int i = 1; i < cfg.nodes; ++i) candidates.push_back(i);
  for (int i = static_cast<int>(candidates.size()) - 1; i > 0; --i)
    std::swap(candidates[i], candidates[static_cast<int>(rng.below(i + 1))]);
  candidates.resize(cfg.customer_nodes);
  std::sort(candidates.begin(), candidates.end());
  std::vector<CustomerGroup> customers;
  for (int node : candidates) {
    CustomerGroup c;
    c.node = node;
    c.circuit = 0;
    c.segment = seg_group[edge_of_node[node]];
    c.count = 10 + static_cast<int>(rng.below(91));  // 10..100
    customers.push_back(c);
  }

  std::vector<int> node_ids(cfg.nodes);
  for (int i = 0; i < cfg.nodes; ++i) node_ids[i] = i;

  Scenario sc;
  sc.name = cfg.name;
  sc.rho = cfg.rho;
  sc.threshold = cfg.threshold;
  sc.grid = build_grid(std::move(node_ids), std::move(edges), {"C1"}, std::move(lines),
                       std::move(segments), std::move(customers), std::move(zones),
                       std::move(vehicles));
  return sc;
}

}  // namespace gridcrew
