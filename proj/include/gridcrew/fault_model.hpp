#pragma once

#include <string>
#include <vector>

#include "gridcrew/grid.hpp"

namespace gridcrew {

// Granularity of the belief variables. Line keeps one Bernoulli per power
// line; Segment aggregates each protection segment into a single variable,
// which is what keeps large feeders tractable (one posterior per segment
// instead of per line).
enum class UnitGranularity { Line, Segment };

// Belief-space view of a grid. A "unit" is the random variable the crews
// reason about and repair. In Segment mode a unit behaves like one long line:
// driving any member road edge reveals whether the unit is damaged, and a
// damaged unit costs its repair time once.
//
// The model borrows the grid by pointer; the owning Scenario must outlive it.
class FaultModel {
 public:
  FaultModel(const DistributionGrid& grid, UnitGranularity granularity);

  const DistributionGrid& grid() const { return *grid_; }
  UnitGranularity granularity() const { return granularity_; }

  int num_units() const { return static_cast<int>(unit_ids_.size()); }
  int num_customers() const { return static_cast<int>(grid_->customers.size()); }
  int num_circuits() const { return static_cast<int>(grid_->circuits.size()); }

  const std::string& unit_id(int u) const { return unit_ids_[u]; }
  int unit_circuit(int u) const { return unit_circuit_[u]; }
  int unit_segment(int u) const { return unit_segment_[u]; }
  double unit_prior(int u) const { return unit_prior_[u]; }
  double unit_repair_minutes(int u) const { return unit_repair_minutes_[u]; }
  const std::vector<int>& unit_lines(int u) const { return unit_lines_[u]; }
  int line_unit(int line) const { return line_unit_[line]; }
  // Customers that lose power if this unit (alone) is faulted.
  int unit_downstream_customers(int u) const { return unit_downstream_customers_[u]; }

  // Units revealed when a crew drives the road edge (u, v); empty when the
  // edge carries no line. Sorted, deduplicated.
  std::vector<int> units_on_edge(int node_u, int node_v) const;

  // Units whose fault de-energizes the customer group / the segment's own
  // customers: every unit in a segment on the path from there to the root.
  const std::vector<int>& customer_cut_units(int customer) const {
    return customer_cut_units_[customer];
  }
  const std::vector<int>& segment_cut_units(int segment) const {
    return segment_cut_units_[segment];
  }

  const std::vector<int>& circuit_units(int circuit) const { return circuit_units_[circuit]; }
  const std::vector<int>& circuit_customers(int circuit) const {
    return circuit_customers_[circuit];
  }

  // Maps a physical damaged-line set to damaged units (unit damaged when any
  // member line is).
  std::vector<std::uint8_t> units_damaged(const std::vector<int>& damaged_lines) const;

  // Largest feasible-action set over all (zone, node) pairs: the policy head
  // width needed to route any crew anywhere.
  int max_actions() const;

 private:
  const DistributionGrid* grid_;
  UnitGranularity granularity_;
  std::vector<std::string> unit_ids_;
  std::vector<int> unit_circuit_;
  std::vector<int> unit_segment_;
  std::vector<double> unit_prior_;
  std::vector<double> unit_repair_minutes_;
  std::vector<std::vector<int>> unit_lines_;
  std::vector<int> line_unit_;
  std::vector<int> unit_downstream_customers_;
  std::vector<std::vector<int>> customer_cut_units_;
  std::vector<std::vector<int>> segment_cut_units_;
  std::vector<std::vector<int>> circuit_units_;
  std::vector<std::vector<int>> circuit_customers_;
};

}  // namespace gridcrew
