#pragma once

#include <vector>

#include "fieldnav/grid.hpp"

namespace fieldnav {

struct GoalSpec {
  GridIndex goal_index;
  double sigma_g = 1e6;  ///< goal voxel
  double sigma_i = 1e2;  ///< free-space floor
  double sigma_o = 0.0;  ///< obstacles

  /// Checks the ordering sigma_g > sigma_i > sigma_o >= 0.
  void validate() const;
};

struct ConductivityGrid {
  GridSpec spec;
  std::vector<double> sigma;

  double at(const GridIndex& g) const { return sigma[spec.flat(g)]; }
};

/// Distance-weighted conductivity: obstacles get sigma_o, the goal voxel sigma_g,
/// and every other free voxel min(sigma_g, sigma_i + sigma_g / d), with d the
/// Euclidean distance to the goal in voxel units.
ConductivityGrid build_conductivity(const OccupancyGrid& occ, const GoalSpec& goal);

}  // namespace fieldnav
