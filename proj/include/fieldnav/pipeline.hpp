#pragma once

#include "fieldnav/baselines.hpp"
#include "fieldnav/conductivity.hpp"
#include "fieldnav/guidance.hpp"
#include "fieldnav/planner.hpp"
#include "fieldnav/simworld.hpp"
#include "fieldnav/solver.hpp"

namespace fieldnav {

struct GridConfig {
  int dims = 101;
  double resolution = 2.0;
  int dilation = 4;  ///< voxels
};

/// Planning lattice for an endpoint pair: centered on their horizontal
/// midpoint, with the bottom voxel layer just below the ground plane.
GridSpec planning_spec(const World& world, const WorldPoint& start, const WorldPoint& goal, const GridConfig& cfg);

/// Dilates raw obstacles and adds the (undilated) floor below the ground plane.
OccupancyGrid planning_grid(const OccupancyGrid& raw, int dilation, double ground_height);

struct FieldPlanConfig {
  GoalSpec conductivity;  ///< goal_index is filled in per query
  SolveConfig solve;
  GuidanceConfig guidance;
  AscentConfig ascent;
};

struct FieldPlanResult {
  Path path;
  FieldGrid field;
  AscentStats ascent;
  double solve_s = 0.0;   ///< conductivity, assembly and CG
  double guide_s = 0.0;   ///< gradient and smoothing
  double follow_s = 0.0;  ///< ascent only
};

/// Conductivity -> solve -> gradient -> smoothing -> ascent. Solver failure
/// surfaces as NoConvergence. With stall_fallback set, a stalled ascent
/// restarts on the unsmoothed gradient and then on climb_field; other ascent
/// errors propagate unchanged.
FieldPlanResult plan_field(const OccupancyGrid& occ, const WorldPoint& start, const WorldPoint& goal,
                           const FieldPlanConfig& cfg, const FieldGrid* warm_start = nullptr);

/// Same as plan_field but ascends a field computed elsewhere (e.g. a learned prediction).
FieldPlanResult plan_on_field(const FieldGrid& field, const OccupancyGrid& occ, const WorldPoint& start,
                              const WorldPoint& goal, const FieldPlanConfig& cfg);

}  // namespace fieldnav
