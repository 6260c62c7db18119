#include "gridcrew/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

namespace gridcrew {

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void fail(const std::string& origin, int line_no, const std::string& msg) {
  std::ostringstream os;
  os << origin;
  if (line_no > 0) os << ":" << line_no;
  os << ": " << msg;
  throw ScenarioError(os.str());
}

struct Token {
  std::string text;
  int line_no;
};

struct Row {
  std::vector<std::string> tokens;
  int line_no;
};

double parse_double(const std::string& origin, const Row& row, const std::string& tok,
                    const char* what) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(origin, row.line_no, std::string("expected a number for ") + what + ", got '" + tok + "'");
  }
}

int parse_int(const std::string& origin, const Row& row, const std::string& tok,
              const char* what) {
  try {
    size_t pos = 0;
    long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    fail(origin, row.line_no, std::string("expected an integer for ") + what + ", got '" + tok + "'");
  }
}

}  // namespace

int DistributionGrid::node_index(int node_id) const {
  auto it = std::lower_bound(node_ids_sorted_.begin(), node_ids_sorted_.end(), node_id);
  if (it == node_ids_sorted_.end() || *it != node_id)
    throw ScenarioError("unknown road node " + std::to_string(node_id));
  return static_cast<int>(it - node_ids_sorted_.begin());
}

bool DistributionGrid::has_node(int node_id) const {
  return std::binary_search(node_ids_sorted_.begin(), node_ids_sorted_.end(), node_id);
}

int DistributionGrid::line_index(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(lines.size()); ++i)
    if (lines[i].id == id) return i;
  throw ScenarioError("unknown line id '" + id + "'");
}

int DistributionGrid::segment_index(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(segments.size()); ++i)
    if (segments[i].id == id) return i;
  throw ScenarioError("unknown segment id '" + id + "'");
}

int DistributionGrid::edge_between(int node_u, int node_v) const {
  int a = std::min(node_u, node_v), b = std::max(node_u, node_v);
  for (int i = 0; i < static_cast<int>(edges.size()); ++i)
    if (edges[i].node_a == a && edges[i].node_b == b) return i;
  return -1;
}

double DistributionGrid::travel_minutes(int node_u, int node_v) const {
  int e = edge_between(node_u, node_v);
  if (e < 0)
    throw ScenarioError("no road edge between nodes " + std::to_string(node_u) + " and " +
                        std::to_string(node_v));
  return edges[e].minutes;
}

const std::vector<int>& DistributionGrid::lines_on_edge(int node_u, int node_v) const {
  static const std::vector<int> empty;
  int e = edge_between(node_u, node_v);
  return e < 0 ? empty : edges[e].lines;
}

std::vector<int> DistributionGrid::feasible_actions(int node_id, int zone) const {
  if (zone < 0 || zone >= static_cast<int>(zones.size()))
    throw ScenarioError("zone index out of range");
  const std::vector<int>& allowed = zones[zone].nodes;
  std::vector<int> out;
  int idx = node_index(node_id);
  for (const auto& [nbr_idx, minutes] : adjacency_[idx]) {
    (void)minutes;
    int nbr_id = nodes[nbr_idx];
    if (std::binary_search(allowed.begin(), allowed.end(), nbr_id)) out.push_back(nbr_id);
  }
  return out;  // adjacency is sorted by node id already
}

int DistributionGrid::total_customers() const {
  int n = 0;
  for (const auto& c : customers) n += c.count;
  return n;
}

bool DistributionGrid::zone_shortest_path(int zone, int from_id, int to_id, double* minutes,
                                          int* first_hop) const {
  const std::vector<int>& allowed = zones.at(zone).nodes;
  auto in_zone = [&](int id) { return std::binary_search(allowed.begin(), allowed.end(), id); };
  if (!in_zone(from_id) || !in_zone(to_id)) return false;
  if (from_id == to_id) {
    if (minutes) *minutes = 0.0;
    if (first_hop) *first_hop = from_id;
    return true;
  }
  std::map<int, double> dist;
  std::map<int, int> prev;
  using Entry = std::pair<double, int>;  // (distance, node id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  dist[from_id] = 0.0;
  heap.push({0.0, from_id});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u] + 1e-12) continue;
    if (u == to_id) break;
    int ui = node_index(u);
    for (const auto& [vi, w] : adjacency_[ui]) {
      int v = nodes[vi];
      if (!in_zone(v)) continue;
      double nd = d + w;
      auto it = dist.find(v);
      if (it == dist.end() || nd < it->second - 1e-12) {
        dist[v] = nd;
        prev[v] = u;
        heap.push({nd, v});
      }
    }
  }
  auto it = dist.find(to_id);
  if (it == dist.end()) return false;
  if (minutes) *minutes = it->second;
  if (first_hop) {
    int cur = to_id;
    while (prev.at(cur) != from_id) cur = prev.at(cur);
    *first_hop = cur;
  }
  return true;
}

std::vector<int> DistributionGrid::affected_nodes(int circuit,
                                                  const std::vector<int>& faulted_lines) const {
  std::vector<char> seg_faulted(segments.size(), 0);
  for (int li : faulted_lines) {
    if (li < 0 || li >= static_cast<int>(lines.size()))
      throw ScenarioError("line index out of range in fault set");
    if (lines[li].circuit != circuit) continue;
    seg_faulted[lines[li].segment] = 1;
  }
  // A segment is isolated when it or any ancestor holds a fault: the nearest
  // upstream device opens and everything below it goes dark.
  std::vector<char> isolated(segments.size(), 0);
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    if (segments[s].circuit != circuit) continue;
    int cur = s;
    while (cur != -1) {
      if (seg_faulted[cur]) {
        isolated[s] = 1;
        break;
      }
      cur = segments[cur].parent;
    }
  }
  std::vector<int> out;
  for (const auto& c : customers)
    if (c.circuit == circuit && isolated[c.segment]) out.push_back(c.node);
  std::sort(out.begin(), out.end());
  return out;
}

void DistributionGrid::reindex() {
  node_ids_sorted_ = nodes;
  std::sort(node_ids_sorted_.begin(), node_ids_sorted_.end());
  adjacency_.assign(nodes.size(), {});
  for (const auto& e : edges) {
    int ia = node_index(e.node_a), ib = node_index(e.node_b);
    adjacency_[ia].push_back({ib, e.minutes});
    adjacency_[ib].push_back({ia, e.minutes});
  }
  for (auto& adj : adjacency_)
    std::sort(adj.begin(), adj.end(), [&](const auto& x, const auto& y) {
      return nodes[x.first] < nodes[y.first];
    });
}

void DistributionGrid::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ScenarioError(msg);
  };

  check(!nodes.empty(), "scenario has no road nodes");
  {
    std::set<int> uniq(nodes.begin(), nodes.end());
    check(uniq.size() == nodes.size(), "duplicate road node id");
    for (int id : nodes) check(id >= 0, "road node ids must be non-negative");
  }
  {
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges) {
      check(e.node_a < e.node_b, "road edge endpoints not normalized");
      check(has_node(e.node_a) && has_node(e.node_b), "road edge references unknown node");
      check(e.minutes > 0, "road edge travel time must be positive");
      check(seen.insert({e.node_a, e.node_b}).second, "duplicate road edge");
    }
  }

  check(!segments.empty() || lines.empty(), "lines present but no segments defined");
  std::vector<int> roots(circuits.size(), -1);
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    const Segment& seg = segments[s];
    check(seg.circuit >= 0 && seg.circuit < static_cast<int>(circuits.size()),
          "segment circuit out of range");
    check(has_node(seg.device_node), "segment '" + seg.id + "' device node unknown");
    check(!seg.lines.empty(), "segment '" + seg.id + "' has no lines");
    if (seg.parent == -1) {
      check(roots[seg.circuit] == -1,
            "circuit '" + circuits[seg.circuit] + "' has multiple root segments");
      roots[seg.circuit] = s;
    } else {
      check(seg.parent >= 0 && seg.parent < static_cast<int>(segments.size()),
            "segment parent out of range");
      check(segments[seg.parent].circuit == seg.circuit,
            "segment '" + seg.id + "' parent belongs to another circuit");
    }
  }
  for (int c = 0; c < static_cast<int>(circuits.size()); ++c)
    check(roots[c] != -1, "circuit '" + circuits[c] + "' has no root segment");
  // Parent links must be acyclic.
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    int cur = s, steps = 0;
    while (cur != -1) {
      cur = segments[cur].parent;
      check(++steps <= static_cast<int>(segments.size()) + 1, "segment parent links form a cycle");
    }
  }

  for (const auto& ln : lines) {
    check(ln.circuit >= 0 && ln.circuit < static_cast<int>(circuits.size()),
          "line '" + ln.id + "' circuit out of range");
    check(ln.segment >= 0 && ln.segment < static_cast<int>(segments.size()),
          "line '" + ln.id + "' segment out of range");
    check(segments[ln.segment].circuit == ln.circuit,
          "line '" + ln.id + "' assigned to a segment of another circuit");
    check(ln.prior >= 0.0 && ln.prior <= 1.0,
          "line '" + ln.id + "' fault prior outside [0,1]");
    check(ln.repair_minutes > 0.0, "line '" + ln.id + "' repair time must be positive");
    int e = edge_between(ln.node_a, ln.node_b);
    check(e >= 0, "line '" + ln.id + "' does not follow any road edge");
  }
  {
    std::set<std::pair<int, int>> span_per_circuit;  // (edge, circuit)
    for (int li = 0; li < static_cast<int>(lines.size()); ++li) {
      const Line& ln = lines[li];
      int e = edge_between(ln.node_a, ln.node_b);
      check(span_per_circuit.insert({e, ln.circuit}).second,
            "two lines of one circuit share a road edge");
    }
  }

  {
    std::set<int> seen_nodes;
    for (const auto& c : customers) {
      check(has_node(c.node), "customer node unknown");
      check(c.count > 0, "customer count must be positive");
      check(c.circuit >= 0 && c.circuit < static_cast<int>(circuits.size()),
            "customer circuit out of range");
      check(c.segment >= 0 && c.segment < static_cast<int>(segments.size()),
            "customer segment out of range");
      check(segments[c.segment].circuit == c.circuit,
            "customer at node " + std::to_string(c.node) + " maps to a segment of another circuit");
      check(seen_nodes.insert(c.node).second,
            "multiple customer rows for node " + std::to_string(c.node));
    }
  }

  check(zones.size() == vehicles.size(), "zones and vehicles must pair up one to one");
  check(!zones.empty(), "scenario needs at least one zone");
  {
    std::set<int> prios, veh_used;
    for (int z = 0; z < static_cast<int>(zones.size()); ++z) {
      const Zone& zone = zones[z];
      check(!zone.nodes.empty(), "zone '" + zone.id + "' has no nodes");
      check(std::is_sorted(zone.nodes.begin(), zone.nodes.end()), "zone nodes not sorted");
      for (int id : zone.nodes) check(has_node(id), "zone '" + zone.id + "' lists unknown node");
      check(zone.priority >= 1, "zone priority must be >= 1");
      check(prios.insert(zone.priority).second, "duplicate zone priority");
      check(zone.vehicle >= 0 && zone.vehicle < static_cast<int>(vehicles.size()),
            "zone vehicle out of range");
      check(veh_used.insert(zone.vehicle).second, "vehicle assigned to two zones");
      check(vehicles[zone.vehicle].zone == z, "vehicle/zone links inconsistent");
      check(std::binary_search(zone.nodes.begin(), zone.nodes.end(),
                               vehicles[zone.vehicle].depot),
            "vehicle depot outside its zone");
      // Zone must be connected through roads internal to it.
      std::set<int> allowed(zone.nodes.begin(), zone.nodes.end());
      std::set<int> seen;
      std::vector<int> stack{zone.nodes.front()};
      seen.insert(zone.nodes.front());
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const auto& e : edges) {
          int other = -1;
          if (e.node_a == u) other = e.node_b;
          if (e.node_b == u) other = e.node_a;
          if (other < 0 || !allowed.count(other) || seen.count(other)) continue;
          seen.insert(other);
          stack.push_back(other);
        }
      }
      check(seen.size() == zone.nodes.size(), "zone '" + zone.id + "' roads are not connected");
    }
  }
  // Every line must be reachable by some crew: both endpoints inside one zone.
  for (const auto& ln : lines) {
    bool covered = false;
    for (const auto& zone : zones) {
      if (std::binary_search(zone.nodes.begin(), zone.nodes.end(), ln.node_a) &&
          std::binary_search(zone.nodes.begin(), zone.nodes.end(), ln.node_b)) {
        covered = true;
        break;
      }
    }
    check(covered, "line '" + ln.id + "' lies in no zone and could never be inspected");
  }
}

DistributionGrid build_grid(std::vector<int> node_ids, std::vector<RoadEdge> road_edges,
                            std::vector<std::string> circuit_ids, std::vector<Line> line_rows,
                            std::vector<Segment> segment_rows,
                            std::vector<CustomerGroup> customer_rows,
                            std::vector<Zone> zone_rows, std::vector<Vehicle> vehicle_rows) {
  DistributionGrid g;
  g.nodes = std::move(node_ids);
  std::sort(g.nodes.begin(), g.nodes.end());
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
  for (auto& e : road_edges) {
    if (e.node_a > e.node_b) std::swap(e.node_a, e.node_b);
    e.lines.clear();
  }
  g.edges = std::move(road_edges);
  g.circuits = std::move(circuit_ids);
  g.lines = std::move(line_rows);
  g.segments = std::move(segment_rows);
  g.customers = std::move(customer_rows);
  g.zones = std::move(zone_rows);
  g.vehicles = std::move(vehicle_rows);

  g.reindex();

  for (int li = 0; li < static_cast<int>(g.lines.size()); ++li) {
    int e = g.edge_between(g.lines[li].node_a, g.lines[li].node_b);
    if (e >= 0) g.edges[e].lines.push_back(li);
  }
  for (auto& seg : g.segments) {
    seg.lines.clear();
    seg.children.clear();
    seg.customer_count = 0;
  }
  for (int li = 0; li < static_cast<int>(g.lines.size()); ++li)
    g.segments[g.lines[li].segment].lines.push_back(li);
  for (int s = 0; s < static_cast<int>(g.segments.size()); ++s)
    if (g.segments[s].parent >= 0) g.segments[g.segments[s].parent].children.push_back(s);
  for (const auto& c : g.customers) g.segments[c.segment].customer_count += c.count;
  for (auto& zone : g.zones) {
    std::sort(zone.nodes.begin(), zone.nodes.end());
    zone.nodes.erase(std::unique(zone.nodes.begin(), zone.nodes.end()), zone.nodes.end());
  }

  g.validate();
  return g;
}

namespace {

// Raw section contents keyed by lowercase section name.
using Sections = std::map<std::string, std::vector<Row>>;

Sections tokenize(const std::string& text, const std::string& origin,
                  std::vector<Row>* header) {
  Sections sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string current;
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    if (toks.empty()) continue;
    if (toks.front().front() == '[') {
      std::string name = toks.front();
      if (toks.size() != 1 || name.back() != ']')
        fail(origin, line_no, "malformed section header");
      current = lowercase(name.substr(1, name.size() - 2));
      if (sections.count(current)) fail(origin, line_no, "duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    Row row{std::move(toks), line_no};
    if (current.empty())
      header->push_back(std::move(row));
    else
      sections[current].push_back(std::move(row));
  }
  return sections;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  std::vector<Row> header;
  Sections sections = tokenize(text, origin, &header);

  Scenario sc;
  bool saw_version = false;
  for (const Row& row : header) {
    const std::string key = lowercase(row.tokens[0]);
    auto need = [&](size_t n) {
      if (row.tokens.size() != n) fail(origin, row.line_no, "'" + key + "' takes " +
                                       std::to_string(n - 1) + " value(s)");
    };
    if (key == "version") {
      need(2);
      if (row.tokens[1] != "1") fail(origin, row.line_no, "unsupported scenario version");
      saw_version = true;
    } else if (key == "name") {
      need(2);
      sc.name = row.tokens[1];
    } else if (key == "rho") {
      need(2);
      sc.rho = parse_double(origin, row, row.tokens[1], "rho");
    } else if (key == "threshold") {
      need(2);
      sc.threshold = parse_double(origin, row, row.tokens[1], "threshold");
    } else {
      fail(origin, row.line_no, "unknown header key '" + key + "'");
    }
  }
  if (!saw_version) fail(origin, 0, "missing 'version 1' header");
  if (sc.name.empty()) fail(origin, 0, "missing 'name' header");
  if (!(sc.rho > 0.0 && sc.rho < 1.0)) fail(origin, 0, "rho must lie in (0,1)");
  if (!(sc.threshold > 0.0 && sc.threshold < 1.0)) fail(origin, 0, "threshold must lie in (0,1)");

  auto section = [&](const char* name) -> const std::vector<Row>& {
    auto it = sections.find(name);
    if (it == sections.end()) fail(origin, 0, std::string("missing section [") + name + "]");
    return it->second;
  };
  for (const auto& [name, rows] : sections) {
    (void)rows;
    static const std::set<std::string> known = {"road",     "lines",    "segments", "customers",
                                                "zones",    "vehicles", "damage",   "calls"};
    if (!known.count(name)) fail(origin, 0, "unknown section [" + name + "]");
  }

  std::vector<int> node_ids;
  std::vector<RoadEdge> edges;
  for (const Row& row : section("road")) {
    const std::string key = lowercase(row.tokens[0]);
    if (key == "nodes") {
      for (size_t i = 1; i < row.tokens.size(); ++i)
        node_ids.push_back(parse_int(origin, row, row.tokens[i], "node id"));
    } else if (key == "edge") {
      if (row.tokens.size() != 4) fail(origin, row.line_no, "edge rows are: edge <a> <b> <minutes>");
      RoadEdge e;
      e.node_a = parse_int(origin, row, row.tokens[1], "edge endpoint");
      e.node_b = parse_int(origin, row, row.tokens[2], "edge endpoint");
      e.minutes = parse_double(origin, row, row.tokens[3], "edge travel minutes");
      if (e.node_a == e.node_b) fail(origin, row.line_no, "edge endpoints must differ");
      edges.push_back(e);
    } else {
      fail(origin, row.line_no, "unknown road row '" + key + "'");
    }
  }

  // Circuits are collected in order of first appearance.
  std::vector<std::string> circuits;
  auto circuit_of = [&](const std::string& id) {
    for (int i = 0; i < static_cast<int>(circuits.size()); ++i)
      if (circuits[i] == id) return i;
    circuits.push_back(id);
    return static_cast<int>(circuits.size()) - 1;
  };

  std::vector<Segment> segs;
  std::vector<std::pair<std::string, int>> parent_refs;  // (parent id, row line)
  std::map<std::string, int> seg_by_id;
  for (const Row& row : section("segments")) {
    if (row.tokens.size() != 4)
      fail(origin, row.line_no, "segment rows are: <id> <circuit> <parent|-> <device_node>");
    Segment s;
    s.id = row.tokens[0];
    s.circuit = circuit_of(row.tokens[1]);
    s.device_node = parse_int(origin, row, row.tokens[3], "device node");
    if (seg_by_id.count(s.id)) fail(origin, row.line_no, "duplicate segment id '" + s.id + "'");
    seg_by_id[s.id] = static_cast<int>(segs.size());
    parent_refs.push_back({row.tokens[2], row.line_no});
    segs.push_back(std::move(s));
  }
  for (size_t i = 0; i < segs.size(); ++i) {
    const auto& [pid, line_no] = parent_refs[i];
    if (pid == "-") {
      segs[i].parent = -1;
    } else {
      auto it = seg_by_id.find(pid);
      if (it == seg_by_id.end()) fail(origin, line_no, "unknown parent segment '" + pid + "'");
      segs[i].parent = it->second;
    }
  }

  std::vector<Line> lns;
  std::map<std::string, int> line_by_id;
  for (const Row& row : section("lines")) {
    if (row.tokens.size() != 7)
      fail(origin, row.line_no,
           "line rows are: <id> <circuit> <segment> <node_a> <node_b> <prior> <repair_minutes>");
    Line ln;
    ln.id = row.tokens[0];
    ln.circuit = circuit_of(row.tokens[1]);
    auto it = seg_by_id.find(row.tokens[2]);
    if (it == seg_by_id.end()) fail(origin, row.line_no, "unknown segment '" + row.tokens[2] + "'");
    ln.segment = it->second;
    ln.node_a = parse_int(origin, row, row.tokens[3], "line endpoint");
    ln.node_b = parse_int(origin, row, row.tokens[4], "line endpoint");
    ln.prior = parse_double(origin, row, row.tokens[5], "fault prior");
    ln.repair_minutes = parse_double(origin, row, row.tokens[6], "repair minutes");
    if (line_by_id.count(ln.id)) fail(origin, row.line_no, "duplicate line id '" + ln.id + "'");
    line_by_id[ln.id] = static_cast<int>(lns.size());
    lns.push_back(std::move(ln));
  }

  std::vector<CustomerGroup> custs;
  for (const Row& row : section("customers")) {
    if (row.tokens.size() != 4)
      fail(origin, row.line_no, "customer rows are: <node> <circuit> <segment> <count>");
    CustomerGroup c;
    c.node = parse_int(origin, row, row.tokens[0], "customer node");
    c.circuit = circuit_of(row.tokens[1]);
    auto it = seg_by_id.find(row.tokens[2]);
    if (it == seg_by_id.end()) fail(origin, row.line_no, "unknown segment '" + row.tokens[2] + "'");
    c.segment = it->second;
    c.count = parse_int(origin, row, row.tokens[3], "customer count");
    custs.push_back(c);
  }

  std::vector<Vehicle> vehs;
  std::map<std::string, int> veh_by_id;
  for (const Row& row : section("vehicles")) {
    if (row.tokens.size() != 2) fail(origin, row.line_no, "vehicle rows are: <id> <depot_node>");
    Vehicle v;
    v.id = row.tokens[0];
    v.depot = parse_int(origin, row, row.tokens[1], "depot node");
    if (veh_by_id.count(v.id)) fail(origin, row.line_no, "duplicate vehicle id '" + v.id + "'");
    veh_by_id[v.id] = static_cast<int>(vehs.size());
    vehs.push_back(std::move(v));
  }

  std::vector<Zone> zns;
  for (const Row& row : section("zones")) {
    if (row.tokens.size() < 4)
      fail(origin, row.line_no, "zone rows are: <id> <vehicle> <priority> <node>...");
    Zone z;
    z.id = row.tokens[0];
    auto it = veh_by_id.find(row.tokens[1]);
    if (it == veh_by_id.end()) fail(origin, row.line_no, "unknown vehicle '" + row.tokens[1] + "'");
    z.vehicle = it->second;
    z.priority = parse_int(origin, row, row.tokens[2], "zone priority");
    for (size_t i = 3; i < row.tokens.size(); ++i)
      z.nodes.push_back(parse_int(origin, row, row.tokens[i], "zone node"));
    vehs[z.vehicle].zone = static_cast<int>(zns.size());
    zns.push_back(std::move(z));
  }

  sc.grid = build_grid(std::move(node_ids), std::move(edges), std::move(circuits), std::move(lns),
                       std::move(segs), std::move(custs), std::move(zns), std::move(vehs));

  auto one_row = [&](const char* name) -> const Row& {
    const auto& rows = section(name);
    if (rows.size() != 1)
      fail(origin, rows.empty() ? 0 : rows[1].line_no,
           std::string("section [") + name + "] must hold exactly one row");
    return rows[0];
  };

  {
    const Row& row = one_row("damage");
    const std::string key = lowercase(row.tokens[0]);
    if (key == "sample") {
      if (row.tokens.size() != 1) fail(origin, row.line_no, "'sample' takes no arguments");
    } else if (key == "lines") {
      std::vector<int> dmg;
      for (size_t i = 1; i < row.tokens.size(); ++i)
        dmg.push_back(sc.grid.line_index(row.tokens[i]));
      std::sort(dmg.begin(), dmg.end());
      dmg.erase(std::unique(dmg.begin(), dmg.end()), dmg.end());
      sc.damage = std::move(dmg);
    } else {
      fail(origin, row.line_no, "damage row must start with 'sample' or 'lines'");
    }
  }
  {
    const Row& row = one_row("calls");
    const std::string key = lowercase(row.tokens[0]);
    if (key == "sample") {
      if (row.tokens.size() != 1) fail(origin, row.line_no, "'sample' takes no arguments");
    } else if (key == "nodes") {
      std::vector<int> called;
      for (size_t i = 1; i < row.tokens.size(); ++i) {
        int node = parse_int(origin, row, row.tokens[i], "calling node");
        int found = -1;
        for (int ci = 0; ci < static_cast<int>(sc.grid.customers.size()); ++ci)
          if (sc.grid.customers[ci].node == node) found = ci;
        if (found < 0)
          fail(origin, row.line_no, "calling node " + std::to_string(node) + " has no customers");
        called.push_back(found);
      }
      std::sort(called.begin(), called.end());
      called.erase(std::unique(called.begin(), called.end()), called.end());
      sc.calls = std::move(called);
    } else {
      fail(origin, row.line_no, "calls row must start with 'sample' or 'nodes'");
    }
  }

  // With both fixed, every reported outage must be explainable by the damage.
  if (sc.damage && sc.calls) {
    for (int c = 0; c < static_cast<int>(sc.grid.circuits.size()); ++c) {
      std::vector<int> dark = sc.grid.affected_nodes(c, *sc.damage);
      for (int ci : *sc.calls) {
        const CustomerGroup& grp = sc.grid.customers[ci];
        if (grp.circuit != c) continue;
        if (!std::binary_search(dark.begin(), dark.end(), grp.node))
          fail(origin, 0, "customer node " + std::to_string(grp.node) +
                              " reported an outage but stays energized under the fixed damage");
      }
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

std::string format_scenario(const Scenario& sc) {
  std::ostringstream os;
  auto num = [](double v) {
    std::ostringstream n;
    n << v;
    return n.str();
  };
  os << "version 1\n";
  os << "name " << sc.name << "\n";
  os << "rho " << num(sc.rho) << "\n";
  os << "threshold " << num(sc.threshold) << "\n\n";
  const DistributionGrid& g = sc.grid;
  os << "[road]\n";
  os << "nodes";
  for (int id : g.nodes) os << " " << id;
  os << "\n";
  for (const auto& e : g.edges)
    os << "edge " << e.node_a << " " << e.node_b << " " << num(e.minutes) << "\n";
  os << "\n[segments]\n";
  for (const auto& s : g.segments)
    os << s.id << " " << g.circuits[s.circuit] << " "
       << (s.parent < 0 ? std::string("-") : g.segments[s.parent].id) << " " << s.device_node
       << "\n";
  os << "\n[lines]\n";
  for (const auto& ln : g.lines)
    os << ln.id << " " << g.circuits[ln.circuit] << " " << g.segments[ln.segment].id << " "
       << ln.node_a << " " << ln.node_b << " " << num(ln.prior) << " " << num(ln.repair_minutes)
       << "\n";
  os << "\n[customers]\n";
  for (const auto& c : g.customers)
    os << c.node << " " << g.circuits[c.circuit] << " " << g.segments[c.segment].id << " "
       << c.count << "\n";
  os << "\n[zones]\n";
  for (const auto& z : g.zones) {
    os << z.id << " " << g.vehicles[z.vehicle].id << " " << z.priority;
    for (int id : z.nodes) os << " " << id;
    os << "\n";
  }
  os << "\n[vehicles]\n";
  for (const auto& v : g.vehicles) os << v.id << " " << v.depot << "\n";
  os << "\n[damage]\n";
  if (sc.damage) {
    os << "lines";
    for (int li : *sc.damage) os << " " << g.lines[li].id;
    os << "\n";
  } else {
    os << "sample\n";
  }
  os << "\n[calls]\n";
  if (sc.calls) {
    os << "nodes";
    for (int ci : *sc.calls) os << " " << g.customers[ci].node;
    os << "\n";
  } else {
    os << "sample\n";
  }
  return os.str();
}

}  // namespace gridcrew
