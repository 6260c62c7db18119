// Small hand-assembled scenarios for unit tests.
#pragma once

#include <string>
#include <vector>

#include <gridcrew/grid.hpp>

namespace testfix {

// Chain feeder: nodes 0..n, line i spans (i, i+1). `seg_of_line` maps each
// line to a segment index (non-decreasing, starting at 0); segment 0 is the
// root and each later segment hangs off the segment of the line just upstream.
// Customers sit at the listed nodes; each node's group belongs to the segment
// of the line entering it.
inline gridcrew::Scenario make_chain(const std::vector<double>& priors,
                                     const std::vector<int>& seg_of_line,
                                     const std::vector<int>& customer_nodes,
                                     const std::vector<int>& customer_counts,
                                     double rho, double threshold,
                                     std::vector<double> repairs = {},
                                     std::vector<double> travel = {}) {
  using namespace gridcrew;
  const int n = static_cast<int>(priors.size());
  if (repairs.empty()) repairs.assign(n, 60.0);
  if (travel.empty()) travel.assign(n, 10.0);

  std::vector<int> nodes;
  for (int i = 0; i <= n; ++i) nodes.push_back(i);
  std::vector<RoadEdge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, i + 1, travel[i], {}});

  int n_segs = 0;
  for (int s : seg_of_line) n_segs = std::max(n_segs, s + 1);
  std::vector<Segment> segments(n_segs);
  for (int s = 0; s < n_segs; ++s) {
    segments[s].id = "S" + std::to_string(s + 1);
    segments[s].circuit = 0;
    segments[s].parent = -1;
    segments[s].device_node = 0;
  }
  std::vector<Line> lines(n);
  for (int i = 0; i < n; ++i) {
    lines[i].id = "L" + std::to_string(i + 1);
    lines[i].circuit = 0;
    lines[i].segment = seg_of_line[i];
    lines[i].node_a = i;
    lines[i].node_b = i + 1;
    lines[i].prior = priors[i];
    lines[i].repair_minutes = repairs[i];
    if (i > 0 && seg_of_line[i] != seg_of_line[i - 1]) {
      segments[seg_of_line[i]].parent = seg_of_line[i - 1];
      segments[seg_of_line[i]].device_node = i;
    }
  }

  std::vector<CustomerGroup> customers;
  for (size_t k = 0; k < customer_nodes.size(); ++k) {
    const int node = customer_nodes[k];
    customers.push_back({node, 0, seg_of_line[node - 1], customer_counts[k]});
  }

  Zone zone{"Z1", 0, 1, nodes};
  Vehicle vehicle{"V1", 0, 0};

  Scenario sc;
  sc.name = "chain";
  sc.rho = rho;
  sc.threshold = threshold;
  sc.grid = build_grid(nodes, edges, {"C1"}, lines, segments, customers, {zone}, {vehicle});
  return sc;
}

// Star feeder: three lines from node 0 out to nodes 1..3, each line its own
// segment; the first segment is the root and the other two hang off it.
inline gridcrew::Scenario make_star(const std::vector<double>& priors,
                                    const std::vector<int>& customer_counts, double rho,
                                    double threshold,
                                    std::vector<double> travel = {10.0, 10.0, 10.0}) {
  using namespace gridcrew;
  std::vector<int> nodes{0, 1, 2, 3};
  std::vector<RoadEdge> edges{
      {0, 1, travel[0], {}}, {0, 2, travel[1], {}}, {0, 3, travel[2], {}}};
  std::vector<Segment> segments(3);
  for (int s = 0; s < 3; ++s) {
    segments[s].id = "S" + std::to_string(s + 1);
    segments[s].circuit = 0;
    segments[s].parent = s == 0 ? -1 : 0;
    segments[s].device_node = 0;
  }
  std::vector<Line> lines(3);
  for (int i = 0; i < 3; ++i) {
    lines[i].id = "L" + std::to_string(i + 1);
    lines[i].circuit = 0;
    lines[i].segment = i;
    lines[i].node_a = 0;
    lines[i].node_b = i + 1;
    lines[i].prior = priors[i];
    lines[i].repair_minutes = 60.0;
  }
  std::vector<CustomerGroup> customers;
  for (int i = 0; i < 3; ++i) customers.push_back({i + 1, 0, i, customer_counts[i]});
  Zone zone{"Z1", 0, 1, nodes};
  Vehicle vehicle{"V1", 0, 0};

  Scenario sc;
  sc.name = "star";
  sc.rho = rho;
  sc.threshold = threshold;
  sc.grid = build_grid(nodes, edges, {"C1"}, lines, segments, customers, {zone}, {vehicle});
  return sc;
}

// Independent single-line feeders fanning out of node 0, all in one crew
// zone: line i runs from node 0 to node i+1 on its own circuit with its
// customers at the far end. Handy when several posteriors must stay exactly
// at 0 or 1 without coupling through a shared protection tree.
inline gridcrew::Scenario make_arms(const std::vector<double>& priors,
                                    const std::vector<int>& customer_counts,
                                    const std::vector<double>& travel, double rho,
                                    double threshold, std::vector<double> repairs = {}) {
  using namespace gridcrew;
  const int n = static_cast<int>(priors.size());
  if (repairs.empty()) repairs.assign(n, 60.0);

  std::vector<int> nodes;
  for (int i = 0; i <= n; ++i) nodes.push_back(i);
  std::vector<RoadEdge> edges;
  std::vector<std::string> circuits;
  std::vector<Segment> segments(n);
  std::vector<Line> lines(n);
  std::vector<CustomerGroup> customers;
  for (int i = 0; i < n; ++i) {
    edges.push_back({0, i + 1, travel[i], {}});
    circuits.push_back("C" + std::to_string(i + 1));
    segments[i] = {"S" + std::to_string(i + 1), i, -1, 0, {}, {}, 0};
    lines[i] = {"L" + std::to_string(i + 1), i, i, 0, i + 1, priors[i], repairs[i]};
    customers.push_back({i + 1, i, i, customer_counts[i]});
  }
  Zone zone{"Z1", 0, 1, nodes};
  Vehicle vehicle{"V1", 0, 0};

  Scenario sc;
  sc.name = "arms";
  sc.rho = rho;
  sc.threshold = threshold;
  sc.grid = build_grid(nodes, edges, circuits, lines, segments, customers, {zone}, {vehicle});
  return sc;
}

// Two independent feeders in two crew zones meeting at node 0. Zone Z1
// (priority 1) owns nodes {0,1}; Z2 (priority 2) owns {0,2}.
inline gridcrew::Scenario make_two_zone(double prior1, double prior2, int count1, int count2,
                                        double rho, double threshold, double travel1 = 10.0,
                                        double travel2 = 20.0) {
  using namespace gridcrew;
  std::vector<int> nodes{0, 1, 2};
  std::vector<RoadEdge> edges{{0, 1, travel1, {}}, {0, 2, travel2, {}}};
  std::vector<Segment> segments(2);
  segments[0] = {"S1", 0, -1, 0, {}, {}, 0};
  segments[1] = {"S2", 1, -1, 0, {}, {}, 0};
  std::vector<Line> lines(2);
  lines[0] = {"L1", 0, 0, 0, 1, prior1, 60.0};
  lines[1] = {"L2", 1, 1, 0, 2, prior2, 60.0};
  std::vector<CustomerGroup> customers{{1, 0, 0, count1}, {2, 1, 1, count2}};
  std::vector<Zone> zones{{"Z1", 0, 1, {0, 1}}, {"Z2", 1, 2, {0, 2}}};
  std::vector<Vehicle> vehicles{{"V1", 0, 0}, {"V2", 0, 1}};

  Scenario sc;
  sc.name = "two_zone";
  sc.rho = rho;
  sc.threshold = threshold;
  sc.grid = build_grid(nodes, edges, {"C1", "C2"}, lines, segments, customers, zones, vehicles);
  return sc;
}

}  // namespace testfix
