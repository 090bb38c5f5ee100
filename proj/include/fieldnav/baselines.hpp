#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fieldnav/grid.hpp"
#include "fieldnav/planner.hpp"

namespace fieldnav {

struct AStarStats {
  std::size_t expanded = 0;
  /// Number of unit, face-diagonal and cube-diagonal moves on the returned path.
  std::array<int, 3> step_counts{0, 0, 0};
  double cost = 0.0;  ///< voxels
};

/// Optimal 26-connected grid search with Euclidean step costs and heuristic.
/// Ties on f are broken by smaller h, then by smaller flat index.
Path astar(const OccupancyGrid& occ, const GridIndex& start, const GridIndex& goal, AStarStats* stats = nullptr);

struct RrtStarConfig {
  int samples = 3000;
  double steer_step = 5.0;    ///< voxels
  double goal_bias = 0.05;
  double goal_region = 1.5;   ///< voxels
  double rewiring_gamma = 0.0;  ///< 0 selects the free-volume rule
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct RrtCheckpoint {
  int iteration = 0;
  double best_cost = 0.0;  ///< voxels; +inf before the goal region is reached
};

struct RrtStarStats {
  std::size_t nodes = 0;
  double gamma = 0.0;
  std::vector<RrtCheckpoint> checkpoints;  ///< every 1000 iterations and at the end
  std::vector<Vec3> tree_positions;        ///< continuous grid coordinates, insertion order
  std::vector<int> tree_parents;
};

/// RRT* over continuous grid coordinates; runs exactly cfg.samples iterations
/// and returns the cheapest start-to-goal path through the goal region.
Path rrt_star(const OccupancyGrid& occ, const WorldPoint& start, const WorldPoint& goal,
              const RrtStarConfig& cfg, RrtStarStats* stats = nullptr);

}  // namespace fieldnav
