#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fieldnav/pipeline.hpp"
#include "fieldnav/simworld.hpp"

namespace fieldnav {

enum class PlannerKind { Field, AStar };

std::string to_string(PlannerKind kind);
PlannerKind planner_from_string(const std::string& name);

struct EndpointSampling {
  double separation_min = 50.0;  ///< m
  double separation_max = 80.0;
  double altitude_min = 3.0;
  double altitude_max = 15.0;
  double clearance = 10.0;       ///< m, Chebyshev distance to every building
  double edge_margin = 10.0;     ///< endpoints stay this far inside the world bounds
  int max_rejections = 10000;

  static EndpointSampling offline();
  static EndpointSampling closed_loop();
};

struct TrialConfig {
  int max_planning_iterations = 100;
  double advance_distance = 10.0;  ///< m flown per planning iteration
  EndpointSampling endpoints = EndpointSampling::closed_loop();
  PlannerKind planner = PlannerKind::Field;
  std::uint64_t seed = 0;
  GridConfig grid;
  LidarSpec lidar;
  FieldPlanConfig field;
};

/// Rejection-samples a start/goal pair in the altitude band with the
/// configured separation and building clearance.
std::pair<WorldPoint, WorldPoint> sample_endpoints(const World& world, const EndpointSampling& cfg,
                                                   std::uint64_t seed);

struct IterationLog {
  std::size_t points = 0;            ///< accumulated LiDAR returns
  std::size_t occupied_voxels = 0;   ///< raw (undilated) occupancy
  int dilation = 0;                  ///< radius actually used
  double plan_s = 0.0;
};

struct TrialReport {
  bool success = false;
  std::string failure;  ///< "", "collision", "iteration_cap" or "planner_error"
  std::string detail;
  std::string planner;
  std::uint64_t seed = 0;
  WorldPoint start;
  WorldPoint goal;
  Path flown_path;
  int planning_iterations = 0;
  std::vector<double> plan_runtime_s;
  std::vector<IterationLog> log;

  double mean_plan_s() const;
};

/// Scan, accumulate, voxelize, dilate, plan and fly up to advance_distance,
/// repeated until the goal is reached or the iteration cap is hit. Failures are
/// reported, not thrown.
TrialReport run_trial(const World& world, const TrialConfig& cfg);
TrialReport run_trial(const World& world, const TrialConfig& cfg, const WorldPoint& start, const WorldPoint& goal);

}  // namespace fieldnav
