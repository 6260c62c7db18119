#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridcrew {

// Thrown for malformed or inconsistent scenario files. The message carries
// the file line number when one is known.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

// One power line. Lines span exactly one road edge; a road edge carries at
// most one line per circuit. Indices refer to DistributionGrid vectors.
struct Line {
  std::string id;
  int circuit = 0;
  int segment = 0;
  int node_a = 0;        // upstream road node (closer to the feeder root)
  int node_b = 0;        // downstream road node
  double prior = 0.0;    // marginal probability the storm damaged this line
  double repair_minutes = 0.0;
};

// Protection segment: a contiguous group of lines isolated together by the
// segment's protective device when any member line is faulted.
struct Segment {
  std::string id;
  int circuit = 0;
  int parent = -1;       // -1 for the root segment of its circuit
  int device_node = 0;   // road node where the protective device sits
  std::vector<int> lines;      // member line indices
  std::vector<int> children;   // child segment indices
  int customer_count = 0;      // customers connected within this segment
};

// Customers aggregated per road node.
struct CustomerGroup {
  int node = 0;
  int circuit = 0;
  int segment = 0;
  int count = 0;
};

struct Zone {
  std::string id;
  int vehicle = 0;             // index into Scenario::vehicles
  int priority = 0;            // 1 = served first on simultaneous requests
  std::vector<int> nodes;      // road nodes the crew may visit (sorted)
};

struct Vehicle {
  std::string id;
  int depot = 0;               // starting road node
  int zone = 0;                // index into zones
};

struct RoadEdge {
  int node_a = 0;              // node_a < node_b
  int node_b = 0;
  double minutes = 0.0;        // travel time
  std::vector<int> lines;      // line indices spanning this edge
};

// Static scenario data: road network, circuits, protection layout, customer
// counts, crew zones. Node ids are arbitrary non-negative ints from the file;
// everything else is indexed densely.
class DistributionGrid {
 public:
  std::vector<int> nodes;                  // sorted node ids
  std::vector<RoadEdge> edges;
  std::vector<std::string> circuits;       // circuit ids
  std::vector<Line> lines;
  std::vector<Segment> segments;
  std::vector<CustomerGroup> customers;
  std::vector<Zone> zones;
  std::vector<Vehicle> vehicles;

  int node_index(int node_id) const;       // throws ScenarioError if unknown
  bool has_node(int node_id) const;
  int line_index(const std::string& id) const;
  int segment_index(const std::string& id) const;

  // Edge between two node ids, or -1.
  int edge_between(int node_u, int node_v) const;
  double travel_minutes(int node_u, int node_v) const;  // throws if no edge
  const std::vector<int>& lines_on_edge(int node_u, int node_v) const;

  // Neighbors of a node restricted to a zone, sorted by node id. This is the
  // action set of a crew at `node_id` assigned to `zone`.
  std::vector<int> feasible_actions(int node_id, int zone) const;

  // Total customer count.
  int total_customers() const;

  // Shortest travel time (minutes) between two nodes using only zone roads;
  // also reports the first hop. Returns false if unreachable.
  bool zone_shortest_path(int zone, int from_id, int to_id, double* minutes,
                          int* first_hop) const;

  // Customer nodes de-energized by a fault set, for one circuit. Takes line
  // indices (any circuit; others ignored) and returns sorted customer node
  // ids that lose power under the segment protection scheme: a customer is
  // out when any segment on the path from its own segment up to the circuit
  // root contains a faulted line.
  std::vector<int> affected_nodes(int circuit,
                                  const std::vector<int>& faulted_lines) const;

  // Validates structural invariants beyond what parsing enforces; throws
  // ScenarioError listing the first violation.
  void validate() const;

 private:
  friend DistributionGrid build_grid(std::vector<int> node_ids,
                                     std::vector<RoadEdge> road_edges,
                                     std::vector<std::string> circuit_ids,
                                     std::vector<Line> line_rows,
                                     std::vector<Segment> segment_rows,
                                     std::vector<CustomerGroup> customer_rows,
                                     std::vector<Zone> zone_rows,
                                     std::vector<Vehicle> vehicle_rows);
  void reindex();

  std::vector<std::vector<std::pair<int, double>>> adjacency_;  // by node idx
  std::vector<int> node_ids_sorted_;
};

// Assembles a grid from parsed rows, builds derived indexes, and validates.
DistributionGrid build_grid(std::vector<int> node_ids,
                            std::vector<RoadEdge> road_edges,
                            std::vector<std::string> circuit_ids,
                            std::vector<Line> line_rows,
                            std::vector<Segment> segment_rows,
                            std::vector<CustomerGroup> customer_rows,
                            std::vector<Zone> zone_rows,
                            std::vector<Vehicle> vehicle_rows);

// Full scenario: grid plus stochastic-model parameters and the episode
// initial conditions. `damage`/`calls` are empty when the file says `sample`,
// in which case episodes draw them from the priors / call model.
struct Scenario {
  std::string name;
  double rho = 0.05;        // per-customer probability of reporting an outage
  double threshold = 0.02;  // stop once every unit posterior falls below this
  DistributionGrid grid;
  std::optional<std::vector<int>> damage;  // damaged line indices
  std::optional<std::vector<int>> calls;   // customer-group indices that called
};

// Parses the text scenario format (see docs/scenario_format.md).
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin);

// Writes a scenario back out in the same format, deterministically.
std::string format_scenario(const Scenario& scenario);

}  // namespace gridcrew
