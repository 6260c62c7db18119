#include "gridcrew/fault_model.hpp"

#include <algorithm>
#include <set>

namespace gridcrew {

FaultModel::FaultModel(const DistributionGrid& grid, UnitGranularity granularity)
    : grid_(&grid), granularity_(granularity) {
  const int n_lines = static_cast<int>(grid.lines.size());
  const int n_segs = static_cast<int>(grid.segments.size());
  line_unit_.assign(n_lines, -1);

  if (granularity == UnitGranularity::Line) {
    for (int li = 0; li < n_lines; ++li) {
      const Line& ln = grid.lines[li];
      line_unit_[li] = li;
      unit_ids_.push_back(ln.id);
      unit_circuit_.push_back(ln.circuit);
      unit_segment_.push_back(ln.segment);
      unit_prior_.push_back(ln.prior);
      unit_repair_minutes_.push_back(ln.repair_minutes);
      unit_lines_.push_back({li});
    }
  } else {
    for (int s = 0; s < n_segs; ++s) {
      const Segment& seg = grid.segments[s];
      double p_intact = 1.0;
      double repair = 0.0;
      for (int li : seg.lines) {
        p_intact *= 1.0 - grid.lines[li].prior;
        repair = std::max(repair, grid.lines[li].repair_minutes);
        line_unit_[li] = s;
      }
      unit_ids_.push_back(seg.id);
      unit_circuit_.push_back(seg.circuit);
      unit_segment_.push_back(s);
      unit_prior_.push_back(1.0 - p_intact);
      unit_repair_minutes_.push_back(repair);
      unit_lines_.push_back(seg.lines);
    }
  }

  // Units per segment on the path to the circuit root; a fault in any of them
  // opens a device upstream of the segment's customers.
  segment_cut_units_.assign(n_segs, {});
  std::vector<std::vector<int>> units_in_segment(n_segs);
  for (int u = 0; u < num_units(); ++u) units_in_segment[unit_segment_[u]].push_back(u);
  for (int s = 0; s < n_segs; ++s) {
    for (int cur = s; cur != -1; cur = grid.segments[cur].parent)
      for (int u : units_in_segment[cur]) segment_cut_units_[s].push_back(u);
    std::sort(segment_cut_units_[s].begin(), segment_cut_units_[s].end());
  }
  customer_cut_units_.resize(grid.customers.size());
  for (int c = 0; c < num_customers(); ++c)
    customer_cut_units_[c] = segment_cut_units_[grid.customers[c].segment];

  // Customers downstream of a unit: everyone in its segment's subtree.
  std::vector<int> subtree_customers(n_segs, 0);
  {
    // Children-first accumulation; segments form a forest so a reverse pass
    // over a topological order works. Build the order by repeated DFS.
    std::vector<int> order;
    std::vector<char> seen(n_segs, 0);
    for (int s = 0; s < n_segs; ++s) {
      if (seen[s]) continue;
      std::vector<int> stack{s};
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        if (seen[cur]) continue;
        // Make sure ancestors land before descendants.
        if (grid.segments[cur].parent != -1 && !seen[grid.segments[cur].parent]) {
          stack.push_back(cur);
          stack.push_back(grid.segments[cur].parent);
          continue;
        }
        seen[cur] = 1;
        order.push_back(cur);
        for (int ch : grid.segments[cur].children) stack.push_back(ch);
      }
    }
    for (int s : order) subtree_customers[s] = grid.segments[s].customer_count;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if (grid.segments[*it].parent != -1)
        subtree_customers[grid.segments[*it].parent] += subtree_customers[*it];
  }
  for (int u = 0; u < num_units(); ++u)
    unit_downstream_customers_.push_back(subtree_customers[unit_segment_[u]]);

  circuit_units_.assign(grid.circuits.size(), {});
  for (int u = 0; u < num_units(); ++u) circuit_units_[unit_circuit_[u]].push_back(u);
  circuit_customers_.assign(grid.circuits.size(), {});
  for (int c = 0; c < num_customers(); ++c)
    circuit_customers_[grid.customers[c].circuit].push_back(c);
}

std::vector<int> FaultModel::units_on_edge(int node_u, int node_v) const {
  std::vector<int> out;
  for (int li : grid_->lines_on_edge(node_u, node_v)) out.push_back(line_unit_[li]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint8_t> FaultModel::units_damaged(const std::vector<int>& damaged_lines) const {
  std::vector<std::uint8_t> out(num_units(), 0);
  for (int li : damaged_lines) out[line_unit_.at(li)] = 1;
  return out;
}

int FaultModel::max_actions() const {
  int best = 0;
  for (int z = 0; z < static_cast<int>(grid_->zones.size()); ++z)
    for (int node : grid_->zones[z].nodes)
      best = std::max(best, static_cast<int>(grid_->feasible_actions(node, z).size()));
  return best;
}

}  // namespace gridcrew
