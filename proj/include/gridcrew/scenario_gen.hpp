#pragma once

#include <cstdint>
#include <string>

#include "gridcrew/grid.hpp"

namespace gridcrew {

struct GenConfig {
  std::string name = "generated";
  int nodes = 8;
  int segments = 3;
  int customer_nodes = 5;
  int zones = 1;
  double rho = 0.05;
  double threshold = 0.02;
  std::uint64_t seed = 7;
};

// Deterministically builds a radial feeder: a random tree of road edges (one
// line per edge, single circuit), protection segments as contiguous edge
// groups, crew zones as contiguous edge groups with one vehicle each, and
// customer counts on sampled nodes. Damage and calls are left as `sample`.
Scenario generate_scenario(const GenConfig& cfg);

}  // namespace gridcrew
